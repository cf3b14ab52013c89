#include "semoverlay/rdf.hpp"

#include <algorithm>
#include <cctype>

#include "semoverlay/errors.hpp"

namespace semo {

std::string iri_local_name(const std::string& iri_text) {
    auto pos = iri_text.find(':');
    if (pos == std::string::npos) return iri_text;
    return iri_text.substr(pos + 1);
}

std::string render_term(const Term& t) {
    switch (t.kind) {
        case TermKind::Iri:
            return t.text;
        case TermKind::Literal: {
            std::string out = "\"";
            for (char c : t.text) {
                if (c == '"' || c == '\\') out.push_back('\\');
                out.push_back(c);
            }
            out.push_back('"');
            return out;
        }
        case TermKind::Variable:
            return "?" + t.text;
    }
    return {};
}

std::string render_triple(const Triple& t) {
    return render_term(t.subject) + " " + render_term(t.predicate) + " " +
           render_term(t.object);
}

std::string render_pattern(const TriplePattern& p) {
    return render_term(p.subject) + " " + render_term(p.predicate) + " " +
           render_term(p.object);
}

namespace {

// Tokenizer shared by query and triple-line parsing. Splits on whitespace,
// keeping quoted literals (with \" and \\ escapes) as one token.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        if (text[i] == '"') {
            std::string tok = "\"";
            ++i;
            bool closed = false;
            while (i < text.size()) {
                char c = text[i++];
                if (c == '\\' && i < text.size()) {
                    tok.push_back(c);
                    tok.push_back(text[i++]);
                    continue;
                }
                tok.push_back(c);
                if (c == '"') {
                    closed = true;
                    break;
                }
            }
            if (!closed) throw ParseError("unterminated literal: " + text);
            tokens.push_back(std::move(tok));
            continue;
        }
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

std::string unescape_literal_body(const std::string& tok) {
    // tok includes the surrounding quotes
    std::string out;
    for (size_t i = 1; i + 1 < tok.size(); ++i) {
        if (tok[i] == '\\' && i + 2 < tok.size()) {
            out.push_back(tok[i + 1]);
            ++i;
        } else {
            out.push_back(tok[i]);
        }
    }
    return out;
}

bool valid_iri_text(const std::string& text) {
    if (text.empty()) return false;
    return std::count(text.begin(), text.end(), ':') == 1 && text.front() != ':' &&
           text.back() != ':';
}

// Terms as they appear in a query: <iri>, "literal", ?var.
Term parse_query_term(const std::string& tok) {
    if (tok.size() >= 2 && tok.front() == '<' && tok.back() == '>') {
        std::string body = tok.substr(1, tok.size() - 2);
        if (!valid_iri_text(body)) throw ParseError("malformed iri: " + tok);
        return iri(body);
    }
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
        return literal(unescape_literal_body(tok));
    if (tok.size() >= 2 && tok.front() == '?') return variable(tok.substr(1));
    throw ParseError("malformed term: " + tok);
}

// Terms in canonical triple lines: bare iri or quoted literal.
Term parse_data_term(const std::string& tok, bool literal_allowed) {
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        if (!literal_allowed) throw ParseError("literal not allowed here: " + tok);
        return literal(unescape_literal_body(tok));
    }
    if (!valid_iri_text(tok)) throw ParseError("malformed iri: " + tok);
    return iri(tok);
}

}  // namespace

std::string render_query(const TriplePattern& p) {
    std::string vars;
    for (const Term* t : {&p.subject, &p.predicate, &p.object}) {
        if (t->is_variable()) vars += " ?" + t->text;
    }
    if (vars.empty()) vars = " *";

    auto qterm = [](const Term& t) {
        if (t.is_iri()) return "<" + t.text + ">";
        return render_term(t);
    };
    return "SELECT" + vars + " WHERE (" + qterm(p.subject) + " " + qterm(p.predicate) +
           " " + qterm(p.object) + ")";
}

TriplePattern parse_query(const std::string& text) {
    auto tokens = tokenize(text);
    size_t i = 0;
    auto expect_keyword = [&](const char* kw) {
        if (i >= tokens.size() || tokens[i] != kw)
            throw ParseError(std::string("expected ") + kw + " in query: " + text);
        ++i;
    };

    expect_keyword("SELECT");
    std::vector<std::string> selected;
    bool select_all = false;
    while (i < tokens.size() && tokens[i] != "WHERE") {
        std::string tok = tokens[i];
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (tok == "*") {
            select_all = true;
        } else if (tok.size() >= 2 && tok.front() == '?') {
            selected.push_back(tok.substr(1));
        } else {
            throw ParseError("malformed select variable: " + tokens[i]);
        }
        ++i;
    }
    if (!select_all && selected.empty())
        throw ParseError("no variables selected: " + text);
    expect_keyword("WHERE");

    // remaining tokens bracketed by ( and ), possibly glued to the terms
    std::string rest;
    for (; i < tokens.size(); ++i) rest += (rest.empty() ? "" : " ") + tokens[i];
    if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')')
        throw ParseError("expected parenthesized pattern: " + text);
    auto inner = tokenize(rest.substr(1, rest.size() - 2));
    if (inner.size() != 3)
        throw ParseError("pattern must have exactly three terms: " + text);

    TriplePattern p{parse_query_term(inner[0]), parse_query_term(inner[1]),
                    parse_query_term(inner[2])};
    if (p.subject.is_literal())
        throw ParseError("literal subject not allowed: " + text);
    if (p.predicate.is_literal())
        throw ParseError("literal predicate not allowed: " + text);
    if (p.bound_count() == 0)
        throw ParseError("pattern has no bound position: " + text);

    for (const auto& v : selected) {
        bool present = (p.subject.is_variable() && p.subject.text == v) ||
                       (p.predicate.is_variable() && p.predicate.text == v) ||
                       (p.object.is_variable() && p.object.text == v);
        if (!present) throw UnboundSelectVariable(v);
    }
    return p;
}

Triple parse_triple_line(const std::string& line) {
    auto tokens = tokenize(line);
    if (tokens.size() != 3)
        throw ParseError("triple line must have three terms: " + line);
    return Triple{parse_data_term(tokens[0], false), parse_data_term(tokens[1], false),
                  parse_data_term(tokens[2], true)};
}

bool matches(const Triple& t, const TriplePattern& q) {
    if (q.subject.is_bound() && q.subject != t.subject) return false;
    if (q.predicate.is_bound() && q.predicate != t.predicate) return false;
    if (q.object.is_bound() && q.object != t.object) return false;
    return true;
}

std::set<Triple> match_pattern(const std::set<Triple>& repo, const TriplePattern& q) {
    std::set<Triple> out;
    for (const auto& t : repo)
        if (matches(t, q)) out.insert(t);
    return out;
}

}  // namespace semo
