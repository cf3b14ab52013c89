// Experiment CLI: run scenarios, generate workloads, trace single queries,
// and recompute report aggregates from a metrics stream.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semoverlay/harness.hpp"

using namespace semo;

namespace {

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed,
            const std::string& out_dir) {
    ScenarioConfig cfg = load_config_file(config_path);
    if (seed) cfg.seed = *seed;
    RunReport rep = run_scenario(cfg);
    write_report(rep, out_dir);
    std::cout << rep.summary.dump(2) << "\n";
    if (!rep.invariants_ok) {
        std::cerr << "hard invariant violated (see summary)\n";
        return 2;
    }
    return 0;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
    ScenarioConfig cfg = load_config_file(config_path);
    Ontology base = load_ontology_file(cfg.ontology_path);
    WorkloadBundle bundle = generate_workload(cfg, base);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/workload.json", std::ios::binary);
    out << bundle_to_json(bundle).dump(2) << "\n";
    std::cout << "wrote " << out_dir << "/workload.json (" << bundle.peers.size()
              << " peers, " << bundle.queries.size() << " queries)\n";
    return 0;
}

int cmd_query(const std::string& config_path, const std::string& text) {
    ScenarioConfig cfg = load_config_file(config_path);
    ScenarioRuntime rt(cfg);
    rt.build();
    Simulation& sim = rt.sim();

    uint64_t origin = 0;
    for (const auto& [id, p] : sim.peers()) {
        if (p.alive) {
            origin = id;
            break;
        }
    }
    if (!origin) {
        std::cerr << "no live peer to issue the query from\n";
        return 1;
    }
    uint64_t flow = sim.inject_query(origin, text);
    sim.settle();
    sim.finalize();

    const QueryOutcome& q = sim.query(flow);
    IdParams idp = cfg.idp;
    std::cout << "query: " << q.text << "\n";
    std::cout << "origin: " << format_peer_id(unpack(q.origin, idp), idp) << "\n";
    std::cout << "clusters:";
    for (const auto& c : q.clusters) std::cout << " " << c;
    std::cout << "\n";
    for (const auto& rr : sim.metrics().routes) {
        if (rr.flow != flow) continue;
        std::cout << "route to " << rr.target_cluster << " ("
                  << (rr.delivered ? "delivered" : "failed") << ", " << rr.hops
                  << " hops): ";
        for (size_t i = 0; i < rr.path.size(); ++i) {
            if (i) std::cout << " -> ";
            std::cout << format_peer_id(unpack(rr.path[i], idp), idp);
        }
        std::cout << "\n";
    }
    std::cout << "intra-cluster messages: " << q.intra_msgs << "\n";
    std::cout << "latency: " << (q.completed - q.issued) << " ms\n";
    std::cout << "results (" << q.results.size() << "):\n";
    for (const auto& t : q.results) std::cout << "  " << render_triple(t) << "\n";
    if (q.parse_error) std::cout << "status: parse error\n";
    if (q.unsupported_pattern) std::cout << "status: unsupported pattern\n";
    return 0;
}

int cmd_report(const std::string& in_dir) {
    RunReport rep = read_report(in_dir);
    nlohmann::json recomputed = compute_aggregates(rep.records);
    std::cout << recomputed.dump(2) << "\n";
    for (const auto& [key, value] : recomputed.items()) {
        if (!rep.summary.contains(key)) continue;
        if (rep.summary.at(key) != value) {
            std::cerr << "mismatch vs summary.json on '" << key << "': " << value
                      << " != " << rep.summary.at(key) << "\n";
            return 1;
        }
    }
    std::cout << "aggregates match summary.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-level semantic P2P overlay simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", in_dir, text;
    std::optional<uint64_t> seed;

    auto* run = app.add_subcommand("run", "run a scenario, write metrics + summary");
    run->add_option("--config", config_path, "scenario config (JSON)")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("gen", "generate a workload dataset");
    gen->add_option("--config", config_path)->required();
    gen->add_option("--out", out_dir)->required();

    auto* query = app.add_subcommand("query", "trace a single query end to end");
    query->add_option("--config", config_path)->required();
    query->add_option("--text", text, "RDQL query text")->required();

    auto* report = app.add_subcommand("report", "recompute aggregates from metrics");
    report->add_option("--in", in_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed, out_dir);
        if (gen->parsed()) return cmd_gen(config_path, out_dir);
        if (query->parsed()) return cmd_query(config_path, text);
        if (report->parsed()) return cmd_report(in_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
