#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "semoverlay/chord.hpp"
#include "semoverlay/flood.hpp"
#include "semoverlay/identity.hpp"
#include "semoverlay/ontology.hpp"
#include "semoverlay/rdf.hpp"
#include "semoverlay/rng.hpp"
#include "semoverlay/toplevel.hpp"

namespace semo {

using SimTime = int64_t;  // simulated milliseconds

enum class MsgTag { Query, Response, Maintenance };

// ---- routed actions (executed at the peer that receives a top-level route) ----

struct ActionProbe {};  // measurement-only route
struct ActionQuery {
    TriplePattern pattern;
    uint64_t origin = 0;  // packed peer the results flow back to
};
struct ActionStoreIndex {
    std::vector<IndexEntry> entries;
};
using RoutedAction = std::variant<ActionProbe, ActionQuery, ActionStoreIndex>;

// ---- network message payloads ----

struct MsgRoute {
    uint64_t flow = 0;
    uint64_t target_key = 0;
    std::string target_cluster;
    int ttl = 0;
    std::vector<uint64_t> path;  // packed ids of traversed peers
    RoutedAction action;
};

struct PFetch {
    TriplePattern pattern;
    uint64_t origin = 0;
};
struct PStore {
    StoredItem item;
};
struct PJoin {
    uint64_t joiner = 0;
};
struct PFinger {
    uint64_t requester = 0;
    int slot = 0;
};
using FindPurpose = std::variant<PFetch, PStore, PJoin, PFinger>;

struct MsgChordFind {
    uint64_t flow = 0;
    uint64_t key = 0;
    int hops = 0;
    int ttl = 0;
    bool terminal = false;  // set on the final forward to the responsible peer
    FindPurpose purpose;
};

struct MsgChordPredReq {
    uint64_t from = 0;
};
struct MsgChordPredReply {
    uint64_t from = 0;                 // the probed successor
    std::optional<uint64_t> pred;      // packed
    std::vector<uint64_t> successors;  // packed, sender's list
};
struct MsgChordNotify {
    uint64_t candidate = 0;
};
struct MsgChordJoinReply {
    uint64_t successor = 0;  // packed
    std::vector<uint64_t> successors;  // packed
    std::vector<std::pair<uint64_t, StoredItem>> items;
};
struct MsgChordTransfer {
    std::vector<std::pair<uint64_t, StoredItem>> items;
};
struct MsgChordFingerReply {
    int slot = 0;
    uint64_t peer = 0;  // packed
};
// Sent by a gracefully leaving peer so its neighbors splice the ring at once
// instead of waiting for the next stabilization round.
struct MsgChordSuccHint {
    uint64_t leaver = 0;
    uint64_t succ = 0;  // packed
};

struct MsgFloodControl {
    uint64_t flow = 0;
    TriplePattern pattern;
    uint64_t origin = 0;
    std::set<std::string> covered;
    int ttl = 0;
};
struct MsgFloodSpread {
    uint64_t flow = 0;
    TriplePattern pattern;
    uint64_t origin = 0;
    int ttl = 0;
};
struct MsgFloodUpdate {
    std::string sub_cluster_id;
    std::set<uint64_t> neighbors;
    std::map<std::string, uint64_t> gateways;
};
struct MsgIndexHandoff {
    std::vector<IndexEntry> entries;
};

struct MsgResults {
    uint64_t flow = 0;
    std::vector<StoredItem> items;
    bool unsupported = false;  // chord entry could not serve a 1-bound pattern
};
struct MsgDerefReq {
    uint64_t flow = 0;
    Triple triple;
    uint64_t origin = 0;
};
struct MsgDerefReply {
    uint64_t flow = 0;
    Triple triple;
    bool found = false;
};

// ---- scheduler events (not network traffic) ----

struct EvJoin {
    std::string address;
    Coord coord;
    std::set<Triple> data;
};
struct EvLeave {
    uint64_t peer = 0;  // 0 = pick a random live peer when processed
    bool graceful = true;
};
struct EvMaintTick {};
struct EvRepublishTick {};
struct EvRebuildContacts {};
struct EvRestructure {
    std::string cluster;
};
struct EvQueryLaunch {
    size_t index = 0;
};

using Payload =
    std::variant<MsgRoute, MsgChordFind, MsgChordPredReq, MsgChordPredReply,
                 MsgChordNotify, MsgChordJoinReply, MsgChordTransfer,
                 MsgChordFingerReply, MsgChordSuccHint, MsgFloodControl,
                 MsgFloodSpread, MsgFloodUpdate, MsgIndexHandoff, MsgResults,
                 MsgDerefReq, MsgDerefReply, EvJoin, EvLeave, EvMaintTick,
                 EvRepublishTick, EvRebuildContacts, EvRestructure, EvQueryLaunch>;

const char* payload_tag(const Payload& p);
bool payload_is_message(const Payload& p);
uint64_t payload_flow(const Payload& p);

struct Event {
    SimTime time = 0;
    uint64_t seq = 0;
    uint64_t target = 0;  // packed peer id, or 0 for the scheduler
    uint64_t from = 0;    // sender, messages only
    MsgTag tag = MsgTag::Maintenance;
    Payload payload;
};

// ---- accounting ----

struct RouteRecord {
    uint64_t flow = 0;
    uint64_t src = 0;
    std::string target_cluster;
    int hops = 0;
    bool delivered = false;
    int path_len = 0;
    std::vector<uint64_t> path;
};

struct ChurnRecord {
    SimTime time = 0;
    std::string kind;  // join | leave_graceful | leave_abrupt
    uint64_t peer = 0;
};

// A flow groups every event belonging to one injected operation (a route, a
// lookup, a store, a flood, or a full query). The flow completes when its
// last in-flight event drains.
struct Flow {
    enum class Kind { Route, Lookup, Store, Flood, Query, Register };
    uint64_t id = 0;
    Kind kind = Kind::Route;
    SimTime issued = 0;
    SimTime completed = -1;
    int pending = 0;

    bool failed = false;       // ttl exhausted, lookup failure, dropped chain
    bool unsupported = false;  // pattern not servable on the chosen path
    std::string error;

    // routing
    std::vector<uint64_t> path;
    bool delivered = false;
    int hops = 0;

    // chord
    int chord_hops = 0;
    int stores = 0;

    // flood
    std::map<uint64_t, int> processed;  // peer -> times the query was evaluated
    int control_msgs = 0;
    int spread_msgs = 0;
    int result_msgs = 0;
    int suppressed = 0;

    // results
    std::set<StoredItem> items;

    bool done() const { return completed >= 0; }
};

struct QueryOutcome {
    uint64_t flow = 0;
    uint64_t origin = 0;
    std::string text;
    TriplePattern pattern;
    SimTime issued = 0;
    SimTime completed = -1;
    std::vector<std::string> clusters;
    int routes_delivered = 0;
    int routes_failed = 0;
    int inter_hops = 0;
    int intra_msgs = 0;
    int unsupported_clusters = 0;
    bool parse_error = false;
    bool unsupported_pattern = false;
    std::set<Triple> results;
    std::set<Triple> oracle;
    std::set<std::pair<Triple, uint64_t>> deref_requested;

    double recall() const {
        if (oracle.empty()) return 1.0;
        size_t hit = 0;
        for (const auto& t : oracle)
            if (results.count(t)) ++hit;
        return static_cast<double>(hit) / static_cast<double>(oracle.size());
    }
    bool precise() const {
        for (const auto& t : results)
            if (!oracle.count(t)) return false;
        return true;
    }
};

struct TagCounts {
    uint64_t sent = 0;
    uint64_t delivered = 0;
    uint64_t dropped = 0;
};

struct Metrics {
    TagCounts query, response, maintenance;
    uint64_t joins = 0;
    uint64_t leaves_graceful = 0;
    uint64_t leaves_abrupt = 0;
    std::vector<RouteRecord> routes;
    std::vector<ChurnRecord> churn;
    uint64_t register_failures = 0;

    TagCounts& by_tag(MsgTag t) {
        switch (t) {
            case MsgTag::Query: return query;
            case MsgTag::Response: return response;
            default: return maintenance;
        }
    }
};

// ---- per-peer and per-cluster simulation state ----

struct SimPeer {
    PeerId id;
    uint64_t packed = 0;
    std::string address;
    std::string home_cluster;
    Coord coord;
    bool alive = true;
    std::set<Triple> repository;
    PeerPlacement placement;
    ContactTable contacts;
    OverlayKind overlay = OverlayKind::Chord;
    ChordState chord;
    FloodState flood;
    std::set<IndexEntry> flood_index;  // foreign indices held in a flood cluster
};

struct ClusterRuntime {
    std::string name;
    ClusterKey key;
    OverlayKind kind = OverlayKind::Chord;
    std::set<uint64_t> members;                  // live packed ids
    std::map<uint64_t, uint64_t> chord_ids;      // chord id -> packed
    std::map<std::string, SubCluster> leaves;    // flood split tree leaves
    std::map<std::string, std::map<uint64_t, std::set<uint64_t>>> graphs;
    std::set<std::string> dirty_leaves;
    bool restructure_scheduled = false;
};

struct SimConfig {
    IdParams idp;
    int chord_bits = 16;
    int succ_list = 3;
    SimTime t_stab = 500;
    SimTime t_republish = 2000;
    FloodParams flood;
    int q_long = 2;
    int route_ttl_factor = 4;  // route ttl = factor * cluster count
    double latency_base = 10.0;
    double latency_alpha = 90.0;
    uint64_t seed = 1;
};

// Deterministic discrete-event simulator for the two-level overlay. Single
// virtual clock; events process in (time, seq) order; all cross-peer
// interaction flows through send(). Directory and membership bookkeeping is
// globally visible (it stands in for out-of-band coordination), while every
// data- and maintenance-plane interaction costs messages.
class Simulation {
public:
    Simulation(Ontology ontology, ClusterDirectory directory, SimConfig cfg);

    // lifecycle scheduling
    void schedule_join(SimTime at, const std::string& address, Coord coord,
                       std::set<Triple> data);
    void schedule_leave(SimTime at, uint64_t peer, bool graceful);
    void schedule_query(SimTime at, size_t workload_index);
    void set_workload(std::vector<std::string> query_texts);

    // direct operation injection (schedules at the current clock)
    uint64_t inject_route(uint64_t src, const std::string& target_cluster,
                          int ttl = -1);
    uint64_t inject_chord_lookup(uint64_t entry, const TriplePattern& q);
    uint64_t inject_chord_store(uint64_t entry, const StoredItem& item);
    uint64_t inject_flood(uint64_t entry, const TriplePattern& q);
    uint64_t inject_query(uint64_t origin, const std::string& text);

    // clock control
    void run_until(SimTime t);
    void run_for(SimTime dt) { run_until(now_ + dt); }
    // Runs until every flow has completed. Periodic maintenance keeps firing.
    void settle();
    // Disables periodic maintenance and drains the queue.
    void finalize();

    SimTime now() const { return now_; }
    uint64_t event_hash() const { return event_hash_; }

    const Flow& flow(uint64_t id) const { return flows_.at(id); }
    const QueryOutcome& query(uint64_t flow_id) const { return queries_.at(flow_id); }
    const std::map<uint64_t, QueryOutcome>& queries() const { return queries_; }
    Metrics& metrics() { return metrics_; }
    const Metrics& metrics() const { return metrics_; }

    const std::map<uint64_t, SimPeer>& peers() const { return peers_; }
    SimPeer& peer(uint64_t packed) { return peers_.at(packed); }
    bool alive(uint64_t packed) const {
        auto it = peers_.find(packed);
        return it != peers_.end() && it->second.alive;
    }
    ClusterRuntime& cluster(const std::string& name) { return clusters_.at(name); }
    const std::map<std::string, ClusterRuntime>& clusters() const { return clusters_; }
    const ClusterDirectory& directory() const { return directory_; }
    const Ontology& ontology() const { return ontology_; }
    const SimConfig& config() const { return cfg_; }

    // global-scan oracle over all live repositories
    std::set<Triple> global_scan(const TriplePattern& q) const;

    size_t live_peer_count() const;
    Membership live_membership() const;

private:
    // engine core
    void push_event(SimTime at, uint64_t target, uint64_t from, MsgTag tag,
                    Payload payload);
    void send(const SimPeer& from, uint64_t to_packed, MsgTag tag, Payload payload);
    void step();
    void handle(Event& e);
    void on_drop(Event& e);

    // flows
    uint64_t new_flow(Flow::Kind kind);
    void flow_add_pending(uint64_t id);
    void flow_drain(uint64_t id);
    void flow_seal_if_idle(uint64_t id);
    void fail_flow(uint64_t id, const std::string& why);

    // lifecycle
    void do_join(const EvJoin& ev);
    void do_leave(uint64_t packed, bool graceful);
    void join_chord(SimPeer& p, ClusterRuntime& cr);
    void join_flood(SimPeer& p, ClusterRuntime& cr);
    void store_initial_data(SimPeer& p);
    void register_foreign(SimPeer& p);
    void schedule_contact_rebuild();
    void schedule_restructure(const std::string& cluster);

    // handlers, grouped per module
    void on_route(SimPeer& p, MsgRoute msg);
    void deliver_route(SimPeer& p, MsgRoute& msg);
    void start_intra(SimPeer& entry, uint64_t flow, RoutedAction action);

    void on_chord_find(SimPeer& p, MsgChordFind msg);
    void chord_execute(SimPeer& p, MsgChordFind& msg);
    void chord_forward(SimPeer& p, MsgChordFind msg, uint64_t to);
    uint64_t chord_closest_preceding(const SimPeer& p, uint64_t key) const;
    std::optional<uint64_t> chord_live_successor(SimPeer& p);
    void on_chord_pred_req(SimPeer& p, const MsgChordPredReq& msg);
    void on_chord_pred_reply(SimPeer& p, const MsgChordPredReply& msg);
    void on_chord_notify(SimPeer& p, const MsgChordNotify& msg);
    void on_chord_join_reply(SimPeer& p, const MsgChordJoinReply& msg);
    void on_chord_transfer(SimPeer& p, const MsgChordTransfer& msg);
    void on_chord_finger_reply(SimPeer& p, const MsgChordFingerReply& msg);
    void on_chord_succ_hint(SimPeer& p, const MsgChordSuccHint& msg);
    void chord_stabilize(SimPeer& p);
    void chord_fix_finger(SimPeer& p);
    void start_chord_find(SimPeer& entry, uint64_t flow, uint64_t key,
                          FindPurpose purpose, MsgTag tag);

    void on_flood_control(SimPeer& p, MsgFloodControl msg);
    void on_flood_spread(SimPeer& p, MsgFloodSpread msg);
    void flood_process_local(SimPeer& p, uint64_t flow, const TriplePattern& pattern,
                             uint64_t origin);
    void flood_dispatch_and_spread(SimPeer& p, uint64_t flow,
                                   const TriplePattern& pattern, uint64_t origin,
                                   std::set<std::string> covered, int ttl);
    bool subtree_fully_covered(const ClusterRuntime& cr,
                               const std::set<std::string>& covered,
                               const std::string& subtree) const;
    std::optional<uint64_t> live_gateway(SimPeer& p, const ClusterRuntime& cr,
                                         const std::string& subtree,
                                         const std::set<std::string>& covered) const;
    void on_flood_update(SimPeer& p, const MsgFloodUpdate& msg);
    void on_index_handoff(SimPeer& p, const MsgIndexHandoff& msg);
    void do_restructure(const std::string& cluster);
    void push_flood_updates(ClusterRuntime& cr, const std::string& leaf_id);

    void on_results(SimPeer& p, const MsgResults& msg);
    void on_deref_req(SimPeer& p, const MsgDerefReq& msg);
    void on_deref_reply(SimPeer& p, const MsgDerefReply& msg);
    void launch_query(size_t index);
    void start_query_flow(uint64_t origin_packed, const std::string& text);
    void merge_query_items(QueryOutcome& q, const std::vector<StoredItem>& items);
    void rebuild_all_contacts();

    SimTime latency(const SimPeer& a, const SimPeer& b) const;
    uint64_t pick_live_peer(Rng& rng) const;

    Ontology ontology_;
    ClusterDirectory directory_;
    SimConfig cfg_;

    SimTime now_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t next_flow_ = 1;
    int active_flows_ = 0;
    uint64_t event_hash_ = 1469598103934665603ULL;
    bool maintenance_enabled_ = true;
    bool rebuild_scheduled_ = false;

    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;

    std::map<uint64_t, SimPeer> peers_;
    std::map<std::string, ClusterRuntime> clusters_;
    std::map<uint64_t, Flow> flows_;
    std::map<uint64_t, QueryOutcome> queries_;
    std::vector<std::string> workload_;
    Metrics metrics_;

    Rng rng_contacts_;
    Rng rng_churn_;
    Rng rng_graph_;
    Rng rng_boot_;
    Rng rng_workload_;
};

}  // namespace semo
