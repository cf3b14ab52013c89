#include "semoverlay/ontology.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semoverlay/errors.hpp"

namespace semo {

namespace {

// Walks the parent chain from `start` and returns the first upper-level class
// on it (start included), or nullopt if the chain never reaches one.
std::optional<std::string> lowest_upper_ancestor(const Ontology& o,
                                                 const std::string& start) {
    std::string cur = start;
    size_t steps = 0;
    while (true) {
        if (o.is_upper(cur)) return cur;
        auto it = o.parent.find(cur);
        if (it == o.parent.end()) return std::nullopt;
        cur = it->second;
        if (++steps > o.classes.size()) return std::nullopt;  // cycle guard
    }
}

bool is_leaf_cluster(const Ontology& o, const std::string& cls) {
    if (!o.is_upper(cls)) return false;
    for (const auto& [child, par] : o.parent) {
        if (par == cls && o.is_upper(child)) return false;
    }
    return true;
}

// True when `anc` is on the parent chain of `cls` (ancestor-or-self).
bool ancestor_or_self(const Ontology& o, const std::string& anc,
                      const std::string& cls) {
    std::string cur = cls;
    size_t steps = 0;
    while (true) {
        if (cur == anc) return true;
        auto it = o.parent.find(cur);
        if (it == o.parent.end()) return false;
        cur = it->second;
        if (++steps > o.classes.size()) return false;
    }
}

// Leaf clusters whose subtree intersects the subtree-or-self of `cls`:
// either the unique leaf above it, or the leaf descendants below it.
ClusterSet leaves_covering(const Ontology& o, const std::string& cls) {
    ClusterSet out;
    if (auto up = lowest_upper_ancestor(o, cls)) {
        if (is_leaf_cluster(o, *up)) out.insert(*up);
    }
    for (const auto& name : o.classes) {
        if (is_leaf_cluster(o, name) && ancestor_or_self(o, cls, name))
            out.insert(name);
    }
    return out;
}

ClusterSet set_intersection(const ClusterSet& a, const ClusterSet& b) {
    ClusterSet out;
    for (const auto& x : a)
        if (b.count(x)) out.insert(x);
    return out;
}

ClusterSet set_union(const ClusterSet& a, const ClusterSet& b) {
    ClusterSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

// Universal set marker for variable positions in patterns.
struct MaybeUniversal {
    bool universal = false;
    ClusterSet set;
};

ClusterSet apply_formula(const Ontology& o, const ClusterSet& pred_set,
                         const MaybeUniversal& other) {
    ClusterSet inter = other.universal ? pred_set : set_intersection(pred_set, other.set);
    if (!inter.empty()) return inter;
    if (other.universal) {
        // union with the universal set: every cluster, __default included
        ClusterSet all = leaf_clusters(o);
        all.insert(kDefaultCluster);
        return all;
    }
    ClusterSet uni = set_union(pred_set, other.set);
    if (!uni.empty()) return uni;
    return {kDefaultCluster};
}

}  // namespace

std::optional<std::string> Ontology::class_of_term(const Term& t) const {
    if (!t.is_iri()) return std::nullopt;
    auto it = instance_class.find(t.text);
    if (it != instance_class.end()) return it->second;
    std::string local = iri_local_name(t.text);
    if (has_class(local)) return local;
    if (has_class(t.text)) return t.text;
    return std::nullopt;
}

void Ontology::validate() const {
    if (classes.empty()) throw ValidationError("ontology declares no classes");

    for (const auto& name : classes) {
        if (!level.count(name))
            throw ValidationError("class without level: " + name);
    }
    for (const auto& [child, par] : parent) {
        if (!has_class(child)) throw ValidationError("parent entry for unknown class: " + child);
        if (!has_class(par))
            throw ValidationError("class " + child + " has unknown parent " + par);
        if (is_upper(child) && !is_upper(par))
            throw ValidationError("upper class " + child + " hangs below lower class " + par);
    }

    // acyclicity: the chain from every class must terminate at a root
    for (const auto& name : classes) {
        std::string cur = name;
        size_t steps = 0;
        while (true) {
            auto it = parent.find(cur);
            if (it == parent.end()) break;
            cur = it->second;
            if (++steps > classes.size())
                throw ValidationError("parent cycle through class " + name);
        }
        if (!is_upper(name) && !lowest_upper_ancestor(*this, name))
            throw ValidationError("lower class " + name + " never reaches the upper ontology");
    }

    for (const auto& [pname, spec] : properties) {
        for (const auto& d : spec.domains)
            if (!has_class(d))
                throw ValidationError("property " + pname + " has unknown domain " + d);
        for (const auto& r : spec.ranges)
            if (!has_class(r))
                throw ValidationError("property " + pname + " has unknown range " + r);
        if (spec.kind == PropertyKind::ObjectProperty && spec.ranges.empty())
            throw ValidationError("ObjectProperty " + pname + " needs at least one range class");
    }

    for (const auto& [inst, cls] : instance_class) {
        if (!has_class(cls))
            throw ValidationError("instance " + inst + " asserts unknown class " + cls);
    }
}

Ontology load_ontology(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ontology document is not valid JSON: ") + e.what());
    }

    Ontology o;
    try {
        for (const auto& c : doc.at("classes")) {
            std::string name = c.at("name").get<std::string>();
            std::string lvl = c.at("level").get<std::string>();
            if (name.empty()) throw ParseError("class with empty name");
            if (!o.classes.insert(name).second)
                throw ValidationError("duplicate class: " + name);
            if (lvl == "upper")
                o.level[name] = ClassLevel::Upper;
            else if (lvl == "lower")
                o.level[name] = ClassLevel::Lower;
            else
                throw ParseError("class " + name + " has unknown level: " + lvl);
            if (c.contains("parent"))
                o.parent[name] = c.at("parent").get<std::string>();
        }
        if (doc.contains("properties")) {
            for (const auto& p : doc.at("properties")) {
                std::string name = p.at("name").get<std::string>();
                std::string kind = p.at("kind").get<std::string>();
                PropertySpec spec;
                if (kind == "ObjectProperty")
                    spec.kind = PropertyKind::ObjectProperty;
                else if (kind == "DatatypeProperty")
                    spec.kind = PropertyKind::DatatypeProperty;
                else
                    throw ParseError("property " + name + " has unknown kind: " + kind);
                if (p.contains("domains"))
                    for (const auto& d : p.at("domains"))
                        spec.domains.insert(d.get<std::string>());
                if (p.contains("ranges"))
                    for (const auto& r : p.at("ranges"))
                        spec.ranges.insert(r.get<std::string>());
                if (!o.properties.emplace(name, std::move(spec)).second)
                    throw ValidationError("duplicate property: " + name);
            }
        }
        if (doc.contains("instances")) {
            for (const auto& inst : doc.at("instances")) {
                std::string iri_text = inst.at("iri").get<std::string>();
                std::string cls = inst.at("class").get<std::string>();
                o.instance_class[iri_text] = cls;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ontology document structure: ") + e.what());
    }

    o.validate();
    return o;
}

Ontology load_ontology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ontology file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_ontology(ss.str());
}

ClusterSet leaf_clusters(const Ontology& o) {
    ClusterSet out;
    for (const auto& name : o.classes)
        if (is_leaf_cluster(o, name)) out.insert(name);
    return out;
}

ClusterSet clusters_of_term(const Ontology& o, const Term& t) {
    auto cls = o.class_of_term(t);
    if (!cls) return {};
    if (auto up = lowest_upper_ancestor(o, *cls)) {
        if (is_leaf_cluster(o, *up)) return {*up};
    }
    return {};
}

ClusterSet clusters_of_predicate(const Ontology& o, const Term& p) {
    if (!p.is_iri()) throw UnknownProperty(render_term(p));
    auto it = o.properties.find(p.text);
    if (it == o.properties.end()) {
        it = o.properties.find(iri_local_name(p.text));
        if (it == o.properties.end()) throw UnknownProperty(p.text);
    }
    const PropertySpec& spec = it->second;
    const auto& seed =
        spec.kind == PropertyKind::ObjectProperty ? spec.ranges : spec.domains;
    ClusterSet out;
    for (const auto& cls : seed) {
        ClusterSet cover = leaves_covering(o, cls);
        out.insert(cover.begin(), cover.end());
    }
    return out;
}

ClusterSet clusters_of_triple(const Ontology& o, const Triple& t) {
    ClusterSet pred_set = clusters_of_predicate(o, t.predicate);
    auto it = o.properties.find(t.predicate.text);
    if (it == o.properties.end()) it = o.properties.find(iri_local_name(t.predicate.text));
    MaybeUniversal other;
    other.set = it->second.kind == PropertyKind::ObjectProperty
                    ? clusters_of_term(o, t.object)
                    : clusters_of_term(o, t.subject);
    return apply_formula(o, pred_set, other);
}

ClusterSet clusters_of_pattern(const Ontology& o, const TriplePattern& q) {
    if (!q.predicate.is_bound())
        throw UnsupportedPattern("variable predicate cannot be clustered: " +
                                 render_pattern(q));
    ClusterSet pred_set = clusters_of_predicate(o, q.predicate);
    auto it = o.properties.find(q.predicate.text);
    if (it == o.properties.end()) it = o.properties.find(iri_local_name(q.predicate.text));
    const Term& anchor =
        it->second.kind == PropertyKind::ObjectProperty ? q.object : q.subject;
    MaybeUniversal other;
    if (anchor.is_bound()) {
        other.set = clusters_of_term(o, anchor);
    } else {
        other.universal = true;
    }
    return apply_formula(o, pred_set, other);
}

}  // namespace semo
