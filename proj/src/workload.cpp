#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"
#include "semoverlay/harness.hpp"

namespace semo {

WorkloadGen::WorkloadGen(const Ontology& o, const GeneratorSpec& spec, uint64_t seed,
                         const std::string& rng_label)
    : ontology_(o), spec_(spec), rng_(fork_rng(seed, rng_label)) {
    // synthesize instances for every class so triples and churn joins draw
    // from one shared pool
    for (const auto& cls : ontology_.classes) {
        auto& pool = instances_by_class_[cls];
        for (size_t i = 0; i < spec_.instances_per_class; ++i) {
            std::string iri_text = "gen:" + cls + "_" + std::to_string(i);
            ontology_.instance_class[iri_text] = cls;
            pool.push_back(iri_text);
        }
    }

    // a property generates data for cluster c when c is among its predicate
    // clusters; the anchored side (object or subject) is then drawn from a
    // class whose unique leaf is c, which pins the formula's result to {c}
    ClusterSet leaves = leaf_clusters(ontology_);
    for (const auto& leaf : leaves) {
        std::vector<std::string> props;
        for (const auto& [pname, ps] : ontology_.properties) {
            ClusterSet pc = clusters_of_predicate(ontology_, iri("gen:" + pname));
            if (pc.count(leaf)) props.push_back(pname);
        }
        if (!props.empty()) {
            recipes_[leaf] = std::move(props);
            usable_clusters_.push_back(leaf);
        }
    }

    cluster_weights_.resize(usable_clusters_.size());
    for (size_t i = 0; i < usable_clusters_.size(); ++i) {
        cluster_weights_[i] = spec_.skew.kind == SkewSpec::Kind::Uniform
                                  ? 1.0
                                  : 1.0 / std::pow(static_cast<double>(i + 1),
                                                   spec_.skew.s);
    }
}

std::string WorkloadGen::pick_instance(const std::string& cls) {
    // prefer an instance whose class sits at or below cls
    std::vector<std::string> pool;
    for (const auto& [c, insts] : instances_by_class_) {
        std::string cur = c;
        bool under = false;
        size_t steps = 0;
        while (true) {
            if (cur == cls) {
                under = true;
                break;
            }
            auto it = ontology_.parent.find(cur);
            if (it == ontology_.parent.end()) break;
            cur = it->second;
            if (++steps > ontology_.classes.size()) break;
        }
        if (under)
            for (const auto& i : insts) pool.push_back(i);
    }
    if (pool.empty()) pool = instances_by_class_.begin()->second;
    return pool[rng_.below(pool.size())];
}

Triple WorkloadGen::make_triple(const std::string& cluster) {
    const auto& props = recipes_.at(cluster);
    const std::string& pname = props[rng_.below(props.size())];
    const PropertySpec& ps = ontology_.properties.at(pname);
    Term pred = iri("gen:" + pname);

    if (ps.kind == PropertyKind::ObjectProperty) {
        // object anchored under the target cluster
        Term object = iri(pick_instance(cluster));
        Term subject;
        if (!ps.domains.empty()) {
            std::vector<std::string> ds(ps.domains.begin(), ps.domains.end());
            subject = iri(pick_instance(ds[rng_.below(ds.size())]));
        } else {
            subject = iri(pick_instance(*ontology_.classes.begin()));
        }
        return Triple{subject, pred, object};
    }
    // datatype: subject anchored under the target cluster
    Term subject = iri(pick_instance(cluster));
    Term object = literal("v" + std::to_string(literal_counter_++));
    return Triple{subject, pred, object};
}

PeerSpec WorkloadGen::make_peer() {
    PeerSpec peer;
    uint64_t a = address_counter_++;
    peer.address = "10." + std::to_string((a >> 16) & 0xff) + "." +
                   std::to_string((a >> 8) & 0xff) + "." + std::to_string(a & 0xff);
    peer.coord = Coord{rng_.unit(), rng_.unit()};
    if (usable_clusters_.empty()) return peer;

    size_t primary = rng_.weighted(cluster_weights_);
    std::set<Triple> data;
    int guard = 0;
    while (data.size() < spec_.triples_per_peer && guard++ < 1000) {
        size_t target = primary;
        if (usable_clusters_.size() > 1 && rng_.unit() < spec_.foreign_fraction) {
            target = rng_.below(usable_clusters_.size());
        }
        data.insert(make_triple(usable_clusters_[target]));
    }
    peer.triples.assign(data.begin(), data.end());
    for (const auto& t : peer.triples) generated_pool_.push_back(t);
    return peer;
}

std::string WorkloadGen::make_query(const std::map<std::string, double>& mix) {
    assert(!generated_pool_.empty());
    const Triple& t = generated_pool_[rng_.below(generated_pool_.size())];

    std::vector<std::string> shapes;
    std::vector<double> weights;
    for (const auto& [shape, w] : mix) {
        shapes.push_back(shape);
        weights.push_back(w);
    }
    const std::string& shape = shapes[rng_.weighted(weights)];

    TriplePattern p{t.subject, t.predicate, t.object};
    if (shape == "sp") {
        p.object = variable("x");
    } else if (shape == "po") {
        p.subject = variable("x");
    } else if (shape == "so") {
        p.predicate = variable("x");
    } else if (shape == "p") {
        p.subject = variable("x");
        p.object = variable("y");
    }  // "spo" keeps all positions bound
    return render_query(p);
}

WorkloadBundle generate_workload(const ScenarioConfig& cfg, const Ontology& o) {
    WorkloadGen gen(o, cfg.generator, cfg.seed);
    if (!gen.usable())
        throw ConfigError("ontology has no property usable for data generation");
    WorkloadBundle b;
    b.peers.reserve(cfg.generator.peer_count);
    for (size_t i = 0; i < cfg.generator.peer_count; ++i)
        b.peers.push_back(gen.make_peer());
    for (size_t i = 0; i < cfg.workload.query_count; ++i)
        b.queries.push_back(gen.make_query(cfg.workload.pattern_mix));
    b.ontology = gen.ontology();
    return b;
}

nlohmann::json bundle_to_json(const WorkloadBundle& b) {
    nlohmann::json doc;
    doc["peers"] = nlohmann::json::array();
    for (const auto& p : b.peers) {
        nlohmann::json jp;
        jp["address"] = p.address;
        jp["coord"] = {p.coord.x, p.coord.y};
        auto& lines = jp["triples"] = nlohmann::json::array();
        for (const auto& t : p.triples) lines.push_back(render_triple(t));
        doc["peers"].push_back(std::move(jp));
    }
    doc["queries"] = b.queries;
    auto& inst = doc["instances"] = nlohmann::json::array();
    for (const auto& [iri_text, cls] : b.ontology.instance_class)
        inst.push_back({{"iri", iri_text}, {"class", cls}});
    return doc;
}

void apply_dataset_json(WorkloadBundle& b, const nlohmann::json& doc) {
    b.peers.clear();
    for (const auto& jp : doc.at("peers")) {
        PeerSpec p;
        p.address = jp.at("address").get<std::string>();
        p.coord = Coord{jp.at("coord").at(0).get<double>(),
                        jp.at("coord").at(1).get<double>()};
        for (const auto& line : jp.at("triples"))
            p.triples.push_back(parse_triple_line(line.get<std::string>()));
        b.peers.push_back(std::move(p));
    }
    if (doc.contains("queries"))
        b.queries = doc.at("queries").get<std::vector<std::string>>();
    if (doc.contains("instances")) {
        for (const auto& inst : doc.at("instances"))
            b.ontology.instance_class[inst.at("iri").get<std::string>()] =
                inst.at("class").get<std::string>();
    }
}

}  // namespace semo
