#include "semoverlay/simnet.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "semoverlay/errors.hpp"

namespace semo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

const char* payload_tag(const Payload& p) {
    return std::visit(
        overloaded{
            [](const MsgRoute&) { return "route"; },
            [](const MsgChordFind&) { return "chord_find"; },
            [](const MsgChordPredReq&) { return "chord_pred_req"; },
            [](const MsgChordPredReply&) { return "chord_pred_reply"; },
            [](const MsgChordNotify&) { return "chord_notify"; },
            [](const MsgChordJoinReply&) { return "chord_join_reply"; },
            [](const MsgChordTransfer&) { return "chord_transfer"; },
            [](const MsgChordFingerReply&) { return "chord_finger_reply"; },
            [](const MsgChordSuccHint&) { return "chord_succ_hint"; },
            [](const MsgFloodControl&) { return "flood_control"; },
            [](const MsgFloodSpread&) { return "flood_spread"; },
            [](const MsgFloodUpdate&) { return "flood_update"; },
            [](const MsgIndexHandoff&) { return "index_handoff"; },
            [](const MsgResults&) { return "results"; },
            [](const MsgDerefReq&) { return "deref_req"; },
            [](const MsgDerefReply&) { return "deref_reply"; },
            [](const EvJoin&) { return "ev_join"; },
            [](const EvLeave&) { return "ev_leave"; },
            [](const EvMaintTick&) { return "ev_maint"; },
            [](const EvRepublishTick&) { return "ev_republish"; },
            [](const EvRebuildContacts&) { return "ev_rebuild_contacts"; },
            [](const EvRestructure&) { return "ev_restructure"; },
            [](const EvQueryLaunch&) { return "ev_query_launch"; },
        },
        p);
}

bool payload_is_message(const Payload& p) {
    return std::visit(overloaded{
                          [](const EvJoin&) { return false; },
                          [](const EvLeave&) { return false; },
                          [](const EvMaintTick&) { return false; },
                          [](const EvRepublishTick&) { return false; },
                          [](const EvRebuildContacts&) { return false; },
                          [](const EvRestructure&) { return false; },
                          [](const EvQueryLaunch&) { return false; },
                          [](const auto&) { return true; },
                      },
                      p);
}

uint64_t payload_flow(const Payload& p) {
    return std::visit(
        overloaded{
            [](const MsgRoute& m) { return m.flow; },
            [](const MsgChordFind& m) { return m.flow; },
            [](const MsgFloodControl& m) { return m.flow; },
            [](const MsgFloodSpread& m) { return m.flow; },
            [](const MsgResults& m) { return m.flow; },
            [](const MsgDerefReq& m) { return m.flow; },
            [](const MsgDerefReply& m) { return m.flow; },
            [](const auto&) { return uint64_t{0}; },
        },
        p);
}

Simulation::Simulation(Ontology ontology, ClusterDirectory directory, SimConfig cfg)
    : ontology_(std::move(ontology)),
      directory_(std::move(directory)),
      cfg_(cfg),
      rng_contacts_(fork_rng(cfg.seed, "contacts")),
      rng_churn_(fork_rng(cfg.seed, "churn")),
      rng_graph_(fork_rng(cfg.seed, "graph")),
      rng_boot_(fork_rng(cfg.seed, "bootstrap")),
      rng_workload_(fork_rng(cfg.seed, "workload")) {
    for (const auto& [name, info] : directory_.entries) {
        ClusterRuntime cr;
        cr.name = name;
        cr.key = info.key;
        cr.kind = info.overlay;
        clusters_[name] = std::move(cr);
    }
}

// ---- engine core ----

void Simulation::push_event(SimTime at, uint64_t target, uint64_t from, MsgTag tag,
                            Payload payload) {
    Event e;
    e.time = std::max(at, now_);
    e.seq = next_seq_++;
    e.target = target;
    e.from = from;
    e.tag = tag;
    e.payload = std::move(payload);
    if (uint64_t f = payload_flow(e.payload)) flow_add_pending(f);
    queue_.push(std::move(e));
}

void Simulation::send(const SimPeer& from, uint64_t to_packed, MsgTag tag,
                      Payload payload) {
    metrics_.by_tag(tag).sent++;
    SimTime delay = 1;
    auto it = peers_.find(to_packed);
    if (it != peers_.end()) delay = latency(from, it->second);
    push_event(now_ + delay, to_packed, from.packed, tag, std::move(payload));
}

SimTime Simulation::latency(const SimPeer& a, const SimPeer& b) const {
    double d = coord_distance(a.coord, b.coord);
    return static_cast<SimTime>(
        std::llround(cfg_.latency_base + cfg_.latency_alpha * d));
}

void Simulation::step() {
    assert(!queue_.empty());
    Event e = queue_.top();
    queue_.pop();
    assert(e.time >= now_);
    now_ = e.time;

    // determinism trace: fnv over (time, seq, target, payload tag)
    auto mix = [&](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            event_hash_ ^= (v >> (i * 8)) & 0xff;
            event_hash_ *= 1099511628211ULL;
        }
    };
    mix(static_cast<uint64_t>(e.time));
    mix(e.seq);
    mix(e.target);
    for (const char* c = payload_tag(e.payload); *c; ++c) {
        event_hash_ ^= static_cast<unsigned char>(*c);
        event_hash_ *= 1099511628211ULL;
    }

    handle(e);
}

void Simulation::run_until(SimTime t) {
    while (!queue_.empty() && queue_.top().time <= t) step();
    now_ = std::max(now_, t);
}

void Simulation::settle() {
    while (active_flows_ > 0 && !queue_.empty()) step();
}

void Simulation::finalize() {
    maintenance_enabled_ = false;
    while (!queue_.empty()) step();
}

void Simulation::handle(Event& e) {
    if (payload_is_message(e.payload)) {
        auto it = peers_.find(e.target);
        if (it == peers_.end() || !it->second.alive) {
            metrics_.by_tag(e.tag).dropped++;
            on_drop(e);
            return;
        }
        metrics_.by_tag(e.tag).delivered++;
        SimPeer& p = it->second;
        uint64_t f = payload_flow(e.payload);
        std::visit(
            overloaded{
                [&](MsgRoute& m) { on_route(p, std::move(m)); },
                [&](MsgChordFind& m) { on_chord_find(p, std::move(m)); },
                [&](MsgChordPredReq& m) { on_chord_pred_req(p, m); },
                [&](MsgChordPredReply& m) { on_chord_pred_reply(p, m); },
                [&](MsgChordNotify& m) { on_chord_notify(p, m); },
                [&](MsgChordJoinReply& m) { on_chord_join_reply(p, m); },
                [&](MsgChordTransfer& m) { on_chord_transfer(p, m); },
                [&](MsgChordFingerReply& m) { on_chord_finger_reply(p, m); },
                [&](MsgChordSuccHint& m) { on_chord_succ_hint(p, m); },
                [&](MsgFloodControl& m) { on_flood_control(p, std::move(m)); },
                [&](MsgFloodSpread& m) { on_flood_spread(p, std::move(m)); },
                [&](MsgFloodUpdate& m) { on_flood_update(p, m); },
                [&](MsgIndexHandoff& m) { on_index_handoff(p, m); },
                [&](MsgResults& m) { on_results(p, m); },
                [&](MsgDerefReq& m) { on_deref_req(p, m); },
                [&](MsgDerefReply& m) { on_deref_reply(p, m); },
                [&](auto&) {},
            },
            e.payload);
        if (f) flow_drain(f);
        return;
    }

    // scheduler / timer events
    std::visit(
        overloaded{
            [&](EvJoin& m) { do_join(m); },
            [&](EvLeave& m) {
                uint64_t victim = m.peer;
                if (victim == 0) {
                    if (live_peer_count() <= 1) return;
                    victim = pick_live_peer(rng_churn_);
                }
                if (alive(victim)) do_leave(victim, m.graceful);
            },
            [&](EvMaintTick&) {
                auto it = peers_.find(e.target);
                if (it == peers_.end() || !it->second.alive) return;
                SimPeer& p = it->second;
                if (p.overlay == OverlayKind::Chord) {
                    chord_stabilize(p);
                    chord_fix_finger(p);
                }
                if (maintenance_enabled_)
                    push_event(now_ + cfg_.t_stab, p.packed, 0, MsgTag::Maintenance,
                               EvMaintTick{});
            },
            [&](EvRepublishTick&) {
                auto it = peers_.find(e.target);
                if (it == peers_.end() || !it->second.alive) return;
                SimPeer& p = it->second;
                store_initial_data(p);
                register_foreign(p);
                if (maintenance_enabled_)
                    push_event(now_ + cfg_.t_republish, p.packed, 0,
                               MsgTag::Maintenance, EvRepublishTick{});
            },
            [&](EvRebuildContacts&) {
                rebuild_scheduled_ = false;
                rebuild_all_contacts();
            },
            [&](EvRestructure& m) { do_restructure(m.cluster); },
            [&](EvQueryLaunch& m) { launch_query(m.index); },
            [&](auto&) {},
        },
        e.payload);
}

// A dropped message still drains its flow; a route or find chain that dies
// this way marks the flow failed so callers see the loss.
void Simulation::on_drop(Event& e) {
    if (const auto* r = std::get_if<MsgRoute>(&e.payload)) {
        if (std::holds_alternative<ActionStoreIndex>(r->action))
            metrics_.register_failures++;
    }
    uint64_t f = payload_flow(e.payload);
    if (!f) return;
    auto it = flows_.find(f);
    if (it != flows_.end()) {
        if (std::holds_alternative<MsgRoute>(e.payload) ||
            std::holds_alternative<MsgChordFind>(e.payload)) {
            it->second.failed = true;
            if (it->second.kind == Flow::Kind::Query) {
                auto q = queries_.find(f);
                if (q != queries_.end()) q->second.routes_failed++;
            }
        }
    }
    flow_drain(f);
}

// ---- flows ----

uint64_t Simulation::new_flow(Flow::Kind kind) {
    uint64_t id = next_flow_++;
    Flow f;
    f.id = id;
    f.kind = kind;
    f.issued = now_;
    flows_[id] = std::move(f);
    active_flows_++;
    return id;
}

void Simulation::flow_add_pending(uint64_t id) {
    auto it = flows_.find(id);
    if (it != flows_.end()) it->second.pending++;
}

void Simulation::flow_drain(uint64_t id) {
    auto it = flows_.find(id);
    if (it == flows_.end()) return;
    Flow& f = it->second;
    if (--f.pending <= 0 && !f.done()) {
        f.completed = now_;
        active_flows_--;
        auto q = queries_.find(id);
        if (q != queries_.end()) q->second.completed = now_;
    }
}

void Simulation::flow_seal_if_idle(uint64_t id) {
    auto it = flows_.find(id);
    if (it == flows_.end()) return;
    Flow& f = it->second;
    if (f.pending <= 0 && !f.done()) {
        f.completed = now_;
        active_flows_--;
        auto q = queries_.find(id);
        if (q != queries_.end()) q->second.completed = now_;
    }
}

void Simulation::fail_flow(uint64_t id, const std::string& why) {
    auto it = flows_.find(id);
    if (it == flows_.end()) return;
    it->second.failed = true;
    if (it->second.error.empty()) it->second.error = why;
}

// ---- membership and oracles ----

size_t Simulation::live_peer_count() const {
    size_t n = 0;
    for (const auto& [id, p] : peers_)
        if (p.alive) ++n;
    return n;
}

Membership Simulation::live_membership() const {
    Membership m;
    for (const auto& [name, cr] : clusters_) {
        auto& set = m[name];
        for (uint64_t packed : cr.members) set.insert(unpack(packed, cfg_.idp));
    }
    return m;
}

std::set<Triple> Simulation::global_scan(const TriplePattern& q) const {
    std::set<Triple> out;
    for (const auto& [id, p] : peers_) {
        if (!p.alive) continue;
        for (const auto& t : p.repository)
            if (matches(t, q)) out.insert(t);
    }
    return out;
}

uint64_t Simulation::pick_live_peer(Rng& rng) const {
    std::vector<uint64_t> live;
    live.reserve(peers_.size());
    for (const auto& [id, p] : peers_)
        if (p.alive) live.push_back(id);
    assert(!live.empty());
    return live[rng.below(live.size())];
}

// ---- lifecycle ----

void Simulation::schedule_join(SimTime at, const std::string& address, Coord coord,
                               std::set<Triple> data) {
    push_event(at, 0, 0, MsgTag::Maintenance, EvJoin{address, coord, std::move(data)});
}

void Simulation::schedule_leave(SimTime at, uint64_t peer, bool graceful) {
    push_event(at, 0, 0, MsgTag::Maintenance, EvLeave{peer, graceful});
}

void Simulation::schedule_query(SimTime at, size_t workload_index) {
    push_event(at, 0, 0, MsgTag::Query, EvQueryLaunch{workload_index});
}

void Simulation::set_workload(std::vector<std::string> query_texts) {
    workload_ = std::move(query_texts);
}

void Simulation::do_join(const EvJoin& ev) {
    SimPeer p;
    p.address = ev.address;
    p.coord = ev.coord;
    p.repository = ev.data;
    p.placement = place_peer(p.repository, ontology_);
    p.home_cluster = p.placement.home;
    p.id = make_peer_id(p.home_cluster, p.address, cfg_.idp);
    p.packed = pack(p.id, cfg_.idp);
    if (peers_.count(p.packed)) return;  // packed-id collision: reject the join

    auto cit = clusters_.find(p.home_cluster);
    if (cit == clusters_.end()) return;  // home cluster missing from directory
    ClusterRuntime& cr = cit->second;
    p.overlay = cr.kind;

    uint64_t packed = p.packed;
    peers_[packed] = std::move(p);
    SimPeer& peer_ref = peers_[packed];
    cr.members.insert(packed);
    metrics_.joins++;
    metrics_.churn.push_back(ChurnRecord{now_, "join", packed});

    if (cr.kind == OverlayKind::Chord)
        join_chord(peer_ref, cr);
    else
        join_flood(peer_ref, cr);

    peer_ref.contacts = build_contacts(peer_ref.id, peer_ref.home_cluster, directory_,
                                       live_membership(), cfg_.q_long, rng_contacts_);
    store_initial_data(peer_ref);
    register_foreign(peer_ref);

    push_event(now_ + cfg_.t_stab, packed, 0, MsgTag::Maintenance, EvMaintTick{});
    push_event(now_ + cfg_.t_republish, packed, 0, MsgTag::Maintenance,
               EvRepublishTick{});
    schedule_contact_rebuild();
}

void Simulation::do_leave(uint64_t packed, bool graceful) {
    SimPeer& p = peers_.at(packed);
    ClusterRuntime& cr = clusters_.at(p.home_cluster);

    metrics_.churn.push_back(
        ChurnRecord{now_, graceful ? "leave_graceful" : "leave_abrupt", packed});
    if (graceful) {
        metrics_.leaves_graceful++;
        if (p.overlay == OverlayKind::Chord) {
            // hand the whole store to the successor and splice the ring
            if (auto succ = chord_live_successor(p); succ && *succ != packed) {
                MsgChordTransfer tr;
                for (const auto& [key, items] : p.chord.store)
                    for (const auto& item : items) tr.items.emplace_back(key, item);
                if (!tr.items.empty())
                    send(p, *succ, MsgTag::Maintenance, std::move(tr));
                if (p.chord.predecessor) {
                    auto pit = cr.chord_ids.find(*p.chord.predecessor);
                    if (pit != cr.chord_ids.end() && alive(pit->second) &&
                        pit->second != packed) {
                        send(p, pit->second, MsgTag::Maintenance,
                             MsgChordSuccHint{packed, *succ});
                        send(p, *succ, MsgTag::Maintenance,
                             MsgChordNotify{pit->second});
                    }
                }
            }
        } else {
            if (!p.flood_index.empty()) {
                // hand held indices to a live neighbor, or any leaf member
                std::optional<uint64_t> heir;
                for (uint64_t nb : p.flood.neighbors)
                    if (alive(nb)) {
                        heir = nb;
                        break;
                    }
                if (!heir) {
                    auto lit = cr.leaves.find(p.flood.sub_cluster_id);
                    if (lit != cr.leaves.end())
                        for (uint64_t m : lit->second.members)
                            if (m != packed && alive(m)) {
                                heir = m;
                                break;
                            }
                }
                if (heir) {
                    MsgIndexHandoff h;
                    h.entries.assign(p.flood_index.begin(), p.flood_index.end());
                    send(p, *heir, MsgTag::Maintenance, std::move(h));
                }
            }
        }
    } else {
        metrics_.leaves_abrupt++;
    }

    p.alive = false;
    cr.members.erase(packed);
    if (p.overlay == OverlayKind::Chord) {
        cr.chord_ids.erase(p.chord.self_id);
    } else {
        auto lit = cr.leaves.find(p.flood.sub_cluster_id);
        if (lit != cr.leaves.end()) {
            lit->second.members.erase(packed);
            cr.dirty_leaves.insert(lit->first);
        }
        schedule_restructure(cr.name);
    }
    schedule_contact_rebuild();
}

void Simulation::schedule_contact_rebuild() {
    if (rebuild_scheduled_) return;
    rebuild_scheduled_ = true;
    push_event(now_ + cfg_.t_stab / 2, 0, 0, MsgTag::Maintenance, EvRebuildContacts{});
}

void Simulation::rebuild_all_contacts() {
    Membership membership = live_membership();
    for (auto& [id, p] : peers_) {
        if (!p.alive) continue;
        p.contacts = build_contacts(p.id, p.home_cluster, directory_, membership,
                                    cfg_.q_long, rng_contacts_);
    }
}

void Simulation::schedule_restructure(const std::string& cluster) {
    ClusterRuntime& cr = clusters_.at(cluster);
    if (cr.restructure_scheduled) return;
    cr.restructure_scheduled = true;
    push_event(now_ + 1, 0, 0, MsgTag::Maintenance, EvRestructure{cluster});
}

// Stores the peer's home-cluster data into its own cluster's overlay and
// (re-)registers foreign indices. Both paths are idempotent, so the periodic
// republish tick doubles as the retry mechanism for registrations that could
// not be routed earlier.
void Simulation::store_initial_data(SimPeer& p) {
    if (p.overlay != OverlayKind::Chord) return;  // flood search scans repositories
    auto it = p.placement.assignments.find(p.home_cluster);
    if (it == p.placement.assignments.end()) return;
    for (const auto& t : it->second) {
        for (const auto& key : keys_for_triple(t, cfg_.chord_bits))
            start_chord_find(p, 0, key.value, PStore{StoredItem{t}},
                             MsgTag::Maintenance);
    }
}

void Simulation::register_foreign(SimPeer& p) {
    for (const auto& [cluster, triples] : p.placement.foreign) {
        auto cit = clusters_.find(cluster);
        if (cit == clusters_.end() || cit->second.members.empty()) {
            metrics_.register_failures++;
            continue;
        }
        ActionStoreIndex action;
        for (const auto& t : triples) action.entries.push_back(IndexEntry{t, p.id});
        MsgRoute msg;
        msg.flow = 0;
        msg.target_key = cit->second.key.value;
        msg.target_cluster = cluster;
        msg.ttl = cfg_.route_ttl_factor * static_cast<int>(clusters_.size());
        msg.action = std::move(action);
        on_route(p, std::move(msg));  // starts at the owner itself
    }
}

}  // namespace semo
