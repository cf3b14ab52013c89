#include "semoverlay/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semoverlay/errors.hpp"

namespace semo {

namespace {

OverlayKind parse_kind(const std::string& s) {
    if (s == "chord") return OverlayKind::Chord;
    if (s == "flood") return OverlayKind::Flood;
    throw ConfigError("unknown overlay kind: " + s);
}

std::string format_hex(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ScenarioConfig parse_config(const nlohmann::json& doc) {
    ScenarioConfig cfg;
    try {
        cfg.ontology_path = doc.at("ontologyPath").get<std::string>();
        if (doc.contains("datasetPath"))
            cfg.dataset_path = doc.at("datasetPath").get<std::string>();
        if (doc.contains("generator")) {
            const auto& g = doc.at("generator");
            if (g.contains("peerCount")) cfg.generator.peer_count = g.at("peerCount");
            if (g.contains("triplesPerPeer"))
                cfg.generator.triples_per_peer = g.at("triplesPerPeer");
            if (g.contains("instancesPerClass"))
                cfg.generator.instances_per_class = g.at("instancesPerClass");
            if (g.contains("foreignFraction"))
                cfg.generator.foreign_fraction = g.at("foreignFraction");
            if (g.contains("clusterSkew")) {
                const auto& s = g.at("clusterSkew");
                std::string kind = s.value("kind", "zipf");
                if (kind == "uniform")
                    cfg.generator.skew.kind = SkewSpec::Kind::Uniform;
                else if (kind == "zipf")
                    cfg.generator.skew.kind = SkewSpec::Kind::Zipf;
                else
                    throw ConfigError("unknown skew kind: " + kind);
                cfg.generator.skew.s = s.value("s", 0.8);
            }
        }
        if (doc.contains("overlayKind")) {
            const auto& o = doc.at("overlayKind");
            if (o.is_string()) {
                cfg.default_overlay = parse_kind(o.get<std::string>());
            } else {
                cfg.default_overlay = parse_kind(o.value("default", "chord"));
                if (o.contains("perCluster"))
                    for (const auto& [name, kind] : o.at("perCluster").items())
                        cfg.overlay_per_cluster[name] =
                            parse_kind(kind.get<std::string>());
            }
        }
        if (doc.contains("idParams")) {
            cfg.idp.m = doc.at("idParams").value("m", 16);
            cfg.idp.n = doc.at("idParams").value("n", 48);
            if (!cfg.idp.valid() || cfg.idp.k() > 64)
                throw ConfigError("idParams must satisfy 1<=m,n and m+n<=64");
        }
        if (doc.contains("q")) cfg.q_long = doc.at("q");
        if (doc.contains("flood")) {
            const auto& f = doc.at("flood");
            cfg.flood.max_size = f.value("maxSize", 32);
            cfg.flood.min_size = f.value("minSize", 4);
            cfg.flood.degree = f.value("c", 4);
            cfg.flood.ttl = f.value("ttl", 16);
            if (cfg.flood.min_size * 2 > cfg.flood.max_size)
                throw ConfigError("flood maxSize/minSize must exceed 2 to avoid split-merge oscillation");
        }
        if (doc.contains("chord")) {
            const auto& c = doc.at("chord");
            cfg.chord_succ = c.value("s", 3);
            cfg.t_stab = c.value("tStabMs", 500);
            cfg.t_republish = c.value("tRepublishMs", 2000);
            cfg.chord_bits = c.value("bits", 16);
            if (cfg.chord_bits < 2 || cfg.chord_bits > cfg.idp.n)
                throw ConfigError("chord bits must lie in [2, n]");
        }
        if (doc.contains("churn")) {
            const auto& c = doc.at("churn");
            cfg.churn.rate = c.value("rate", 0.0);
            cfg.churn.duration_s = c.value("durationS", 0.0);
            cfg.churn.graceful_fraction = c.value("gracefulFraction", 0.8);
            cfg.churn.join_fraction = c.value("joinFraction", 0.5);
        }
        if (doc.contains("workload")) {
            const auto& w = doc.at("workload");
            cfg.workload.query_count = w.value("queryCount", 50);
            cfg.workload.interval_ms = w.value("intervalMs", 200);
            cfg.workload.interleaved = w.value("timing", "after_churn") == "interleaved";
            if (w.contains("patternMix")) {
                cfg.workload.pattern_mix.clear();
                for (const auto& [shape, weight] : w.at("patternMix").items()) {
                    if (shape != "sp" && shape != "po" && shape != "so" &&
                        shape != "spo" && shape != "p")
                        throw ConfigError("unknown pattern shape: " + shape);
                    cfg.workload.pattern_mix[shape] = weight.get<double>();
                }
            }
        }
        if (doc.contains("joinStaggerMs")) cfg.join_stagger_ms = doc.at("joinStaggerMs");
        if (doc.contains("seed")) cfg.seed = doc.at("seed");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scenario config: ") + e.what());
    }
    return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

ScenarioRuntime::ScenarioRuntime(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    Ontology base = load_ontology_file(cfg_.ontology_path);

    if (!cfg_.dataset_path.empty()) {
        std::ifstream in(cfg_.dataset_path);
        if (!in) throw ConfigError("cannot open dataset: " + cfg_.dataset_path);
        nlohmann::json doc;
        in >> doc;
        bundle_.ontology = base;
        apply_dataset_json(bundle_, doc);
    } else {
        bundle_ = generate_workload(cfg_, base);
    }

    // every referenced cluster must exist in the ontology's leaf set
    ClusterSet leaves = leaf_clusters(bundle_.ontology);
    for (const auto& [name, kind] : cfg_.overlay_per_cluster)
        if (!leaves.count(name))
            throw ConfigError("overlayKind.perCluster names unknown cluster: " + name);

    std::vector<std::string> names(leaves.begin(), leaves.end());
    names.push_back(kDefaultCluster);
    dir_ = build_directory(names, cfg_.overlay_per_cluster, cfg_.default_overlay,
                           cfg_.idp);

    SimConfig sc;
    sc.idp = cfg_.idp;
    sc.chord_bits = cfg_.chord_bits;
    sc.succ_list = cfg_.chord_succ;
    sc.t_stab = cfg_.t_stab;
    sc.t_republish = cfg_.t_republish;
    sc.flood = cfg_.flood;
    sc.q_long = cfg_.q_long;
    sc.seed = cfg_.seed;
    sim_ = std::make_unique<Simulation>(bundle_.ontology, dir_, sc);
    sim_->set_workload(bundle_.queries);
}

void ScenarioRuntime::build() {
    SimTime t = 0;
    for (const auto& p : bundle_.peers) {
        std::set<Triple> data(p.triples.begin(), p.triples.end());
        sim_->schedule_join(t, p.address, p.coord, std::move(data));
        t += cfg_.join_stagger_ms;
    }
    // warm-up: settle maintenance so queries in static scenarios measure the
    // converged overlay (covers at least two republish rounds)
    SimTime warm = std::max<SimTime>(10 * cfg_.t_stab, 2 * cfg_.t_republish + 1000);
    setup_end_ = t + warm;
    sim_->run_until(setup_end_);
}

void ScenarioRuntime::run_workload() {
    SimTime t = setup_end_;

    // churn window: pre-scheduled Poisson arrivals, 50/50 join/leave by
    // default, leaves mostly graceful
    if (cfg_.churn.rate > 0 && cfg_.churn.duration_s > 0) {
        Rng churn_rng = fork_rng(cfg_.seed, "churn-schedule");
        WorkloadGen joiner_gen(bundle_.ontology, cfg_.generator, cfg_.seed,
                               "churn-peers");
        double t_s = 0.0;
        while (true) {
            t_s += churn_rng.exponential(cfg_.churn.rate);
            if (t_s >= cfg_.churn.duration_s) break;
            SimTime at = t + static_cast<SimTime>(std::llround(t_s * 1000.0));
            if (churn_rng.unit() < cfg_.churn.join_fraction) {
                PeerSpec spec = joiner_gen.make_peer();
                std::set<Triple> data(spec.triples.begin(), spec.triples.end());
                sim_->schedule_join(at, spec.address, spec.coord, std::move(data));
            } else {
                bool graceful = churn_rng.unit() < cfg_.churn.graceful_fraction;
                sim_->schedule_leave(at, 0, graceful);
            }
        }
        SimTime churn_end = t + static_cast<SimTime>(cfg_.churn.duration_s * 1000.0);
        if (cfg_.workload.interleaved) {
            SimTime qt = t;
            for (size_t i = 0; i < bundle_.queries.size(); ++i) {
                sim_->schedule_query(qt, i);
                qt += cfg_.workload.interval_ms;
            }
        }
        t = churn_end + 10 * cfg_.t_stab;  // quiesce
        sim_->run_until(t);
    }

    if (!cfg_.workload.interleaved) {
        for (size_t i = 0; i < bundle_.queries.size(); ++i) {
            sim_->schedule_query(t, i);
            t += cfg_.workload.interval_ms;
        }
        sim_->run_until(t);
    }
    sim_->settle();
    sim_->finalize();
}

namespace {

nlohmann::json query_record(const Simulation& sim, const QueryOutcome& q) {
    IdParams idp = sim.config().idp;
    nlohmann::json r;
    r["type"] = "query";
    r["query_id"] = q.flow;
    r["origin"] = format_peer_id(unpack(q.origin, idp), idp);
    r["text"] = q.text;
    r["clusters"] = q.clusters;
    r["issued_ms"] = q.issued;
    r["latency_ms"] = (q.completed >= 0 ? q.completed - q.issued : -1);
    r["inter_hops"] = q.inter_hops;
    r["intra_msgs"] = q.intra_msgs;
    r["results"] = q.results.size();
    r["oracle"] = q.oracle.size();
    r["recall"] = q.recall();
    r["precise"] = q.precise();
    r["routes_delivered"] = q.routes_delivered;
    r["routes_failed"] = q.routes_failed;
    r["unsupported_clusters"] = q.unsupported_clusters;
    std::string status = "ok";
    if (q.parse_error)
        status = "parse_error";
    else if (q.unsupported_pattern)
        status = "unsupported";
    r["status"] = status;
    r["delivered"] = (status == "ok" && q.routes_failed == 0 &&
                      q.routes_delivered == static_cast<int>(q.clusters.size()));
    return r;
}

}  // namespace

RunReport ScenarioRuntime::report() {
    RunReport rep;
    const Metrics& m = sim_->metrics();
    IdParams idp = cfg_.idp;

    for (const auto& rr : m.routes) {
        nlohmann::json r;
        r["type"] = "route";
        r["query_id"] = rr.flow;
        r["src"] = format_peer_id(unpack(rr.src, idp), idp);
        r["target_cluster"] = rr.target_cluster;
        r["hops"] = rr.hops;
        r["delivered"] = rr.delivered;
        r["path_len"] = rr.path_len;
        auto& path = r["path"] = nlohmann::json::array();
        for (uint64_t p : rr.path) path.push_back(format_peer_id(unpack(p, idp), idp));
        rep.records.push_back(std::move(r));
    }
    for (const auto& cr : m.churn) {
        nlohmann::json r;
        r["type"] = "churn";
        r["time_ms"] = cr.time;
        r["event"] = cr.kind;
        r["peer"] = format_peer_id(unpack(cr.peer, idp), idp);
        rep.records.push_back(std::move(r));
    }
    for (const auto& [id, q] : sim_->queries())
        rep.records.push_back(query_record(*sim_, q));

    rep.summary = compute_aggregates(rep.records);

    // engine-level counters and invariant checks
    auto tag_json = [](const TagCounts& t) {
        return nlohmann::json{
            {"sent", t.sent}, {"delivered", t.delivered}, {"dropped", t.dropped}};
    };
    rep.summary["messages"] = {{"query", tag_json(m.query)},
                               {"response", tag_json(m.response)},
                               {"maintenance", tag_json(m.maintenance)}};
    bool conservation = m.query.sent == m.query.delivered + m.query.dropped &&
                        m.response.sent == m.response.delivered + m.response.dropped &&
                        m.maintenance.sent ==
                            m.maintenance.delivered + m.maintenance.dropped;
    rep.summary["conservation_ok"] = conservation;
    rep.invariants_ok = conservation;
    rep.summary["joins"] = m.joins;
    rep.summary["leaves_graceful"] = m.leaves_graceful;
    rep.summary["leaves_abrupt"] = m.leaves_abrupt;
    rep.summary["register_failures"] = m.register_failures;
    rep.summary["live_peers"] = sim_->live_peer_count();
    rep.summary["sim_time_ms"] = sim_->now();
    rep.summary["event_hash"] = format_hex(sim_->event_hash());
    double sim_s = static_cast<double>(sim_->now()) / 1000.0;
    double live = static_cast<double>(std::max<size_t>(sim_->live_peer_count(), 1));
    rep.summary["maintenance_per_peer_per_s"] =
        sim_s > 0 ? static_cast<double>(m.maintenance.sent) / live / sim_s : 0.0;
    return rep;
}

nlohmann::json compute_aggregates(const std::vector<nlohmann::json>& records) {
    nlohmann::json s;
    size_t queries = 0, delivered = 0, unsupported = 0, errors = 0;
    double recall_sum = 0.0, recall_min = 2.0;
    uint64_t intra_sum = 0;
    std::vector<int> hops;
    for (const auto& r : records) {
        std::string type = r.value("type", "");
        if (type == "route") {
            if (r.value("delivered", false)) hops.push_back(r.value("hops", 0));
        } else if (type == "query") {
            ++queries;
            std::string status = r.value("status", "ok");
            if (status == "parse_error") {
                ++errors;
                continue;
            }
            if (status == "unsupported") {
                ++unsupported;
                continue;
            }
            if (r.value("delivered", false)) ++delivered;
            double rc = r.value("recall", 0.0);
            recall_sum += rc;
            recall_min = std::min(recall_min, rc);
            intra_sum += r.value("intra_msgs", 0ULL);
        }
    }
    size_t scored = queries - unsupported - errors;
    s["queries"] = queries;
    s["queries_unsupported"] = unsupported;
    s["queries_parse_error"] = errors;
    s["success_rate"] =
        scored ? static_cast<double>(delivered) / static_cast<double>(scored) : 1.0;
    s["recall_mean"] = scored ? recall_sum / static_cast<double>(scored) : 1.0;
    s["recall_min"] = scored ? recall_min : 1.0;
    s["intra_msgs_mean"] =
        scored ? static_cast<double>(intra_sum) / static_cast<double>(scored) : 0.0;
    std::sort(hops.begin(), hops.end());
    if (hops.empty()) {
        s["inter_hops_mean"] = 0.0;
        s["inter_hops_p95"] = 0;
    } else {
        double sum = 0;
        for (int h : hops) sum += h;
        s["inter_hops_mean"] = sum / static_cast<double>(hops.size());
        size_t idx = (hops.size() * 95 + 99) / 100;  // ceil(0.95 n)
        s["inter_hops_p95"] = hops[std::min(idx == 0 ? 0 : idx - 1, hops.size() - 1)];
    }
    return s;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
    ScenarioRuntime rt(cfg);
    rt.build();
    rt.run_workload();
    return rt.report();
}

void write_report(const RunReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream metrics(out_dir + "/metrics.ndjson", std::ios::binary);
    for (const auto& r : report.records) metrics << r.dump() << "\n";
    std::ofstream summary(out_dir + "/summary.json", std::ios::binary);
    summary << report.summary.dump(2) << "\n";
}

RunReport read_report(const std::string& dir) {
    RunReport rep;
    std::ifstream metrics(dir + "/metrics.ndjson");
    if (!metrics) throw ConfigError("cannot open " + dir + "/metrics.ndjson");
    std::string line;
    while (std::getline(metrics, line)) {
        if (line.empty()) continue;
        rep.records.push_back(nlohmann::json::parse(line));
    }
    std::ifstream summary(dir + "/summary.json");
    if (summary) summary >> rep.summary;
    return rep;
}

}  // namespace semo
