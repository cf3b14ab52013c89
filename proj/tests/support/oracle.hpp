#pragma once

// Brute-force reference for the semantic clustering computation. Materializes
// full ancestor/descendant closures and applies the set formulas literally,
// independent of the walk-based implementation it checks.

#include <map>
#include <set>
#include <string>

#include "semoverlay/ontology.hpp"

namespace semo::oracle {

struct Closures {
    // ancestors-or-self and descendants-or-self per class
    std::map<std::string, std::set<std::string>> anc;
    std::map<std::string, std::set<std::string>> desc;
    std::set<std::string> leaves;
};

inline Closures materialize(const Ontology& o) {
    Closures c;
    for (const auto& cls : o.classes) {
        std::set<std::string> a{cls};
        std::string cur = cls;
        while (true) {
            auto it = o.parent.find(cur);
            if (it == o.parent.end()) break;
            cur = it->second;
            if (!a.insert(cur).second) break;
        }
        c.anc[cls] = a;
    }
    for (const auto& cls : o.classes)
        for (const auto& up : c.anc[cls]) c.desc[up].insert(cls);
    for (const auto& cls : o.classes) {
        if (!o.is_upper(cls)) continue;
        bool has_upper_child = false;
        for (const auto& [child, par] : o.parent)
            if (par == cls && o.is_upper(child)) has_upper_child = true;
        if (!has_upper_child) c.leaves.insert(cls);
    }
    return c;
}

inline ClusterSet term_clusters(const Ontology& o, const Closures& c, const Term& t) {
    auto cls = o.class_of_term(t);
    if (!cls) return {};
    ClusterSet out;
    for (const auto& leaf : c.leaves)
        if (c.desc.at(leaf).count(*cls)) out.insert(leaf);
    return out;
}

inline ClusterSet pred_clusters(const Ontology& o, const Closures& c, const Term& p) {
    auto it = o.properties.find(p.text);
    if (it == o.properties.end()) it = o.properties.find(iri_local_name(p.text));
    const PropertySpec& spec = it->second;
    const auto& seed =
        spec.kind == PropertyKind::ObjectProperty ? spec.ranges : spec.domains;
    ClusterSet out;
    for (const auto& cls : seed) {
        for (const auto& leaf : c.leaves) {
            // subtree(leaf) intersects subtree-or-self(cls)
            bool intersects = false;
            for (const auto& d : c.desc.at(cls))
                if (c.desc.at(leaf).count(d)) intersects = true;
            if (c.desc.at(cls).count(leaf)) intersects = true;
            if (intersects) out.insert(leaf);
        }
    }
    return out;
}

inline ClusterSet triple_clusters(const Ontology& o, const Closures& c,
                                  const Triple& t) {
    auto it = o.properties.find(t.predicate.text);
    if (it == o.properties.end())
        it = o.properties.find(iri_local_name(t.predicate.text));
    ClusterSet ps = pred_clusters(o, c, t.predicate);
    ClusterSet other = it->second.kind == PropertyKind::ObjectProperty
                           ? term_clusters(o, c, t.object)
                           : term_clusters(o, c, t.subject);
    ClusterSet inter;
    for (const auto& x : ps)
        if (other.count(x)) inter.insert(x);
    if (!inter.empty()) return inter;
    ClusterSet uni = ps;
    uni.insert(other.begin(), other.end());
    if (!uni.empty()) return uni;
    return {kDefaultCluster};
}

}  // namespace semo::oracle
