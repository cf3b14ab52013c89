#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace semo {

enum class TermKind { Iri, Literal, Variable };

struct Term {
    TermKind kind = TermKind::Iri;
    std::string text;

    bool is_iri() const { return kind == TermKind::Iri; }
    bool is_literal() const { return kind == TermKind::Literal; }
    bool is_variable() const { return kind == TermKind::Variable; }
    bool is_bound() const { return kind != TermKind::Variable; }

    auto operator<=>(const Term&) const = default;
};

inline Term iri(std::string text) { return Term{TermKind::Iri, std::move(text)}; }
inline Term literal(std::string text) { return Term{TermKind::Literal, std::move(text)}; }
inline Term variable(std::string name) { return Term{TermKind::Variable, std::move(name)}; }

// Local name of a namespace-qualified iri ("socam:Adult" -> "Adult").
std::string iri_local_name(const std::string& iri_text);

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    auto operator<=>(const Triple&) const = default;
};

struct TriplePattern {
    Term subject;
    Term predicate;
    Term object;

    int bound_count() const {
        return (subject.is_bound() ? 1 : 0) + (predicate.is_bound() ? 1 : 0) +
               (object.is_bound() ? 1 : 0);
    }

    auto operator<=>(const TriplePattern&) const = default;
};

// Canonical text forms. Iris render as their text, literals double-quoted with
// backslash escapes for `"` and `\`, variables as ?name. These strings feed
// the hash keys, the triple data files, and the logs, so they must not drift.
std::string render_term(const Term& t);
std::string render_triple(const Triple& t);          // "<s> <p> <o>" joined by single spaces
std::string render_pattern(const TriplePattern& p);  // pattern positions, same conventions

// Canonical query rendering: `SELECT ?x ?y WHERE (<s> <p> <o>)`. A pattern
// without variables renders as `SELECT *`.
std::string render_query(const TriplePattern& p);

// Parses the one-pattern query subset. Grammar:
//   SELECT <vars|*> WHERE (<term> <term> <term>)
// with iris in angle brackets, literals in double quotes, variables as ?name.
// Throws ParseError / UnboundSelectVariable.
TriplePattern parse_query(const std::string& text);

// Parses one canonical triple line (as produced by render_triple).
Triple parse_triple_line(const std::string& line);

bool matches(const Triple& t, const TriplePattern& q);

// All triples agreeing with q on every bound position.
std::set<Triple> match_pattern(const std::set<Triple>& repo, const TriplePattern& q);

}  // namespace semo
