#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "semoverlay/simnet.hpp"

namespace semo {

struct SkewSpec {
    enum class Kind { Uniform, Zipf } kind = Kind::Zipf;
    double s = 0.8;
};

struct GeneratorSpec {
    size_t peer_count = 20;
    size_t triples_per_peer = 5;
    SkewSpec skew;
    size_t instances_per_class = 4;
    double foreign_fraction = 0.2;  // share of triples aimed at a non-primary cluster
};

struct WorkloadSpec {
    size_t query_count = 50;
    std::map<std::string, double> pattern_mix = {{"sp", 0.5}, {"po", 0.3}, {"spo", 0.2}};
    SimTime interval_ms = 200;
    bool interleaved = false;  // false: queries run after churn has quiesced
};

struct ChurnSpec {
    double rate = 0.0;  // events per simulated second
    double duration_s = 0.0;
    double graceful_fraction = 0.8;
    double join_fraction = 0.5;
};

struct ScenarioConfig {
    std::string ontology_path;
    std::string dataset_path;  // optional pre-generated dataset (JSON)
    GeneratorSpec generator;
    OverlayKind default_overlay = OverlayKind::Chord;
    std::map<std::string, OverlayKind> overlay_per_cluster;
    IdParams idp;
    int q_long = 2;
    FloodParams flood;
    int chord_succ = 3;
    SimTime t_stab = 500;
    SimTime t_republish = 2000;
    int chord_bits = 16;
    ChurnSpec churn;
    WorkloadSpec workload;
    SimTime join_stagger_ms = 25;
    uint64_t seed = 1;
};

ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config_file(const std::string& path);

struct PeerSpec {
    std::string address;
    Coord coord;
    std::vector<Triple> triples;
};

struct WorkloadBundle {
    Ontology ontology;  // input ontology augmented with generated instances
    std::vector<PeerSpec> peers;
    std::vector<std::string> queries;
};

// Synthesizes per-peer datasets (cluster skew over the ontology's leaf
// clusters, triples through declared properties) and queries sampled from
// stored triples with positions unbound per the pattern mix. Every query has
// at least one match at generation time.
class WorkloadGen {
public:
    WorkloadGen(const Ontology& o, const GeneratorSpec& spec, uint64_t seed,
                const std::string& rng_label = "workload-gen");

    const Ontology& ontology() const { return ontology_; }
    PeerSpec make_peer();
    std::string make_query(const std::map<std::string, double>& mix);
    bool usable() const { return !usable_clusters_.empty(); }

private:
    Triple make_triple(const std::string& cluster);
    std::string pick_instance(const std::string& cls);

    Ontology ontology_;
    GeneratorSpec spec_;
    Rng rng_;
    std::vector<std::string> usable_clusters_;
    std::vector<double> cluster_weights_;
    // per cluster: properties that can generate triples mapping exactly there
    std::map<std::string, std::vector<std::string>> recipes_;
    std::map<std::string, std::vector<std::string>> instances_by_class_;
    std::vector<Triple> generated_pool_;  // sampled for query synthesis
    uint64_t address_counter_ = 0;
    uint64_t literal_counter_ = 0;
};

WorkloadBundle generate_workload(const ScenarioConfig& cfg, const Ontology& o);

nlohmann::json bundle_to_json(const WorkloadBundle& b);
void apply_dataset_json(WorkloadBundle& b, const nlohmann::json& doc);

struct RunReport {
    std::vector<nlohmann::json> records;  // one metrics.ndjson line each
    nlohmann::json summary;
    bool invariants_ok = true;
};

// Owns one scenario end to end; acceptance tests drive the stages directly.
class ScenarioRuntime {
public:
    explicit ScenarioRuntime(ScenarioConfig cfg);

    // join every initial peer and settle maintenance (the configured warm-up)
    void build();
    // churn window followed by quiesce, then the query phase
    void run_workload();
    RunReport report();

    Simulation& sim() { return *sim_; }
    const WorkloadBundle& bundle() const { return bundle_; }
    const ScenarioConfig& cfg() const { return cfg_; }
    SimTime setup_end() const { return setup_end_; }

private:
    ScenarioConfig cfg_;
    WorkloadBundle bundle_;
    ClusterDirectory dir_;
    std::unique_ptr<Simulation> sim_;
    SimTime setup_end_ = 0;
};

RunReport run_scenario(const ScenarioConfig& cfg);

// Aggregates are a pure function of the per-query records, so an external
// reader can recompute the summary from metrics.ndjson alone.
nlohmann::json compute_aggregates(const std::vector<nlohmann::json>& records);

void write_report(const RunReport& report, const std::string& out_dir);
RunReport read_report(const std::string& dir);  // for the report subcommand

}  // namespace semo
