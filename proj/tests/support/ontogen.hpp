#pragma once

// Random 3-level ontology and triple generator for property tests: upper
// roots, an upper middle layer, lower classes beneath, plus properties with
// arbitrary domain/range choices to stress the clustering formulas.

#include <string>
#include <vector>

#include "semoverlay/ontology.hpp"
#include "semoverlay/rng.hpp"

namespace semo::testgen {

inline Ontology random_ontology(Rng& rng, size_t max_classes = 40,
                                size_t max_properties = 15) {
    Ontology o;
    std::vector<std::string> uppers, all;

    size_t roots = 2 + rng.below(3);
    for (size_t i = 0; i < roots; ++i) {
        std::string name = "R" + std::to_string(i);
        o.classes.insert(name);
        o.level[name] = ClassLevel::Upper;
        uppers.push_back(name);
        all.push_back(name);
    }
    size_t mids = rng.below(9);
    for (size_t i = 0; i < mids && all.size() < max_classes; ++i) {
        std::string name = "U" + std::to_string(i);
        o.classes.insert(name);
        o.level[name] = ClassLevel::Upper;
        o.parent[name] = uppers[rng.below(uppers.size())];
        uppers.push_back(name);
        all.push_back(name);
    }
    size_t lowers = rng.below(max_classes - all.size() + 1);
    std::vector<std::string> lower_pool;
    for (size_t i = 0; i < lowers; ++i) {
        std::string name = "L" + std::to_string(i);
        o.classes.insert(name);
        o.level[name] = ClassLevel::Lower;
        // parent: any upper, or an earlier lower (keeps chains acyclic)
        if (!lower_pool.empty() && rng.below(3) == 0)
            o.parent[name] = lower_pool[rng.below(lower_pool.size())];
        else
            o.parent[name] = uppers[rng.below(uppers.size())];
        lower_pool.push_back(name);
        all.push_back(name);
    }

    size_t props = 1 + rng.below(max_properties);
    for (size_t i = 0; i < props; ++i) {
        PropertySpec spec;
        spec.kind = rng.below(2) ? PropertyKind::ObjectProperty
                                 : PropertyKind::DatatypeProperty;
        size_t nd = rng.below(3);
        for (size_t d = 0; d < nd; ++d) spec.domains.insert(all[rng.below(all.size())]);
        size_t nr = 1 + rng.below(2);
        for (size_t r = 0; r < nr; ++r) spec.ranges.insert(all[rng.below(all.size())]);
        if (spec.kind == PropertyKind::DatatypeProperty && rng.below(2))
            spec.ranges.clear();
        if (spec.kind == PropertyKind::DatatypeProperty && spec.domains.empty())
            spec.domains.insert(all[rng.below(all.size())]);
        o.properties["p" + std::to_string(i)] = std::move(spec);
    }

    // a few instances per class plus some unannotated strays
    size_t inst_count = 0;
    for (const auto& cls : o.classes) {
        size_t n = 1 + rng.below(2);
        for (size_t i = 0; i < n; ++i)
            o.instance_class["t:i" + std::to_string(inst_count++)] = cls;
    }

    o.validate();
    return o;
}

inline Triple random_triple(const Ontology& o, Rng& rng) {
    std::vector<std::string> props;
    for (const auto& [name, spec] : o.properties) props.push_back(name);
    std::vector<std::string> instances;
    for (const auto& [iri_text, cls] : o.instance_class) instances.push_back(iri_text);

    const std::string& pname = props[rng.below(props.size())];
    auto pick_node = [&]() -> Term {
        if (rng.below(8) == 0) return iri("t:unknown" + std::to_string(rng.below(4)));
        return iri(instances[rng.below(instances.size())]);
    };
    Term subject = pick_node();
    Term object;
    if (o.properties.at(pname).kind == PropertyKind::ObjectProperty) {
        object = pick_node();
    } else {
        object = literal("v" + std::to_string(rng.below(16)));
    }
    return Triple{subject, iri("t:" + pname), object};
}

}  // namespace semo::testgen
