// Top-level routing and end-to-end query execution: greedy sid routing with
// per-hop contact tables, intra-cluster resolution through Chord lookups or
// parallel flooding, result merging at the origin, and dereferencing of
// foreign-index hits with one extra round trip to the owning peer.

#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"
#include "semoverlay/simnet.hpp"

namespace semo {

namespace {

MsgTag route_tag(const RoutedAction& a) {
    return std::holds_alternative<ActionStoreIndex>(a) ? MsgTag::Maintenance
                                                       : MsgTag::Query;
}

}  // namespace

void Simulation::on_route(SimPeer& p, MsgRoute msg) {
    msg.path.push_back(p.packed);
    if (p.id.sid == msg.target_key) {
        deliver_route(p, msg);
        return;
    }
    int hops = static_cast<int>(msg.path.size()) - 1;
    if (hops >= msg.ttl) {
        if (msg.flow)
            metrics_.routes.push_back(RouteRecord{msg.flow, msg.path.front(),
                                                  msg.target_cluster, hops, false,
                                                  static_cast<int>(msg.path.size()),
                                                  msg.path});
        if (std::holds_alternative<ActionStoreIndex>(msg.action))
            metrics_.register_failures++;
        if (msg.flow) {
            fail_flow(msg.flow, "route ttl exceeded");
            if (auto q = queries_.find(msg.flow); q != queries_.end())
                q->second.routes_failed++;
        }
        return;
    }
    std::optional<PeerId> next;
    try {
        next = greedy_next_hop(p.id, p.contacts, ClusterKey{msg.target_key}, cfg_.idp);
    } catch (const NoContacts&) {
        if (msg.flow)
            metrics_.routes.push_back(RouteRecord{msg.flow, msg.path.front(),
                                                  msg.target_cluster, hops, false,
                                                  static_cast<int>(msg.path.size()),
                                                  msg.path});
        if (msg.flow) {
            fail_flow(msg.flow, "no contacts");
            if (auto q = queries_.find(msg.flow); q != queries_.end())
                q->second.routes_failed++;
        }
        return;
    }
    assert(next);  // sid mismatch guarantees a hop
    send(p, pack(*next, cfg_.idp), route_tag(msg.action), std::move(msg));
}

void Simulation::deliver_route(SimPeer& p, MsgRoute& msg) {
    int hops = static_cast<int>(msg.path.size()) - 1;
    if (msg.flow)
        metrics_.routes.push_back(RouteRecord{msg.flow, msg.path.front(),
                                              msg.target_cluster, hops, true,
                                              static_cast<int>(msg.path.size()),
                                              msg.path});
    if (msg.flow) {
        auto fit = flows_.find(msg.flow);
        if (fit != flows_.end()) {
            fit->second.delivered = true;
            fit->second.hops = hops;
            fit->second.path = msg.path;
        }
        auto q = queries_.find(msg.flow);
        if (q != queries_.end()) {
            q->second.routes_delivered++;
            q->second.inter_hops += hops;
        }
    }
    start_intra(p, msg.flow, std::move(msg.action));
}

void Simulation::start_intra(SimPeer& entry, uint64_t flow, RoutedAction action) {
    std::visit(
        [&](auto& act) {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, ActionStoreIndex>) {
                if (entry.overlay == OverlayKind::Chord) {
                    for (const auto& e : act.entries) {
                        for (const auto& key : keys_for_triple(e.triple, cfg_.chord_bits))
                            start_chord_find(entry, flow, key.value,
                                             PStore{StoredItem{e}},
                                             MsgTag::Maintenance);
                    }
                } else {
                    // gateway placement: the registration sticks to whichever
                    // peer the route delivered it to
                    for (const auto& e : act.entries) entry.flood_index.insert(e);
                    if (flow) {
                        auto fit = flows_.find(flow);
                        if (fit != flows_.end())
                            fit->second.stores += static_cast<int>(act.entries.size());
                    }
                }
            } else if constexpr (std::is_same_v<T, ActionQuery>) {
                if (entry.overlay == OverlayKind::Chord) {
                    if (act.pattern.bound_count() < 2) {
                        // the pair index cannot serve this shape; report back
                        if (act.origin == entry.packed) {
                            MsgResults r{flow, {}, true};
                            on_results(entry, r);
                        } else {
                            if (auto q = queries_.find(flow); q != queries_.end())
                                q->second.intra_msgs++;
                            send(entry, act.origin, MsgTag::Response,
                                 MsgResults{flow, {}, true});
                        }
                        return;
                    }
                    PairKey key = key_for_pattern(act.pattern, cfg_.chord_bits);
                    start_chord_find(entry, flow, key.value,
                                     PFetch{act.pattern, act.origin}, MsgTag::Query);
                } else {
                    if (entry.flood.seen(flow)) return;
                    entry.flood.mark_seen(flow);
                    flood_process_local(entry, flow, act.pattern, act.origin);
                    flood_dispatch_and_spread(entry, flow, act.pattern, act.origin,
                                              {}, cfg_.flood.ttl);
                }
            }
        },
        action);
}

void Simulation::merge_query_items(QueryOutcome& q, const std::vector<StoredItem>& items) {
    SimPeer& origin = peers_.at(q.origin);
    for (const auto& item : items) {
        if (const auto* t = std::get_if<Triple>(&item)) {
            q.results.insert(*t);
            continue;
        }
        const IndexEntry& e = std::get<IndexEntry>(item);
        if (q.results.count(e.triple)) continue;
        uint64_t owner = pack(e.owner, cfg_.idp);
        if (!q.deref_requested.insert({e.triple, owner}).second) continue;
        if (owner == q.origin) {
            if (origin.repository.count(e.triple)) q.results.insert(e.triple);
            continue;
        }
        // one extra request to the data owner; a dead owner simply never
        // answers and the stale index entry drops out of the results
        q.intra_msgs++;
        send(origin, owner, MsgTag::Query, MsgDerefReq{q.flow, e.triple, q.origin});
    }
}

void Simulation::on_results(SimPeer& p, const MsgResults& msg) {
    auto fit = flows_.find(msg.flow);
    if (fit == flows_.end()) return;
    Flow& f = fit->second;
    if (f.kind == Flow::Kind::Query) {
        auto q = queries_.find(msg.flow);
        if (q == queries_.end()) return;
        if (msg.unsupported) q->second.unsupported_clusters++;
        merge_query_items(q->second, msg.items);
        return;
    }
    if (msg.unsupported) f.unsupported = true;
    for (const auto& item : msg.items) f.items.insert(item);
    (void)p;
}

void Simulation::on_deref_req(SimPeer& p, const MsgDerefReq& msg) {
    bool found = p.repository.count(msg.triple) > 0;
    if (auto q = queries_.find(msg.flow); q != queries_.end())
        q->second.intra_msgs++;
    send(p, msg.origin, MsgTag::Response, MsgDerefReply{msg.flow, msg.triple, found});
}

void Simulation::on_deref_reply(SimPeer& p, const MsgDerefReply& msg) {
    (void)p;
    if (!msg.found) return;
    auto q = queries_.find(msg.flow);
    if (q != queries_.end()) q->second.results.insert(msg.triple);
}

void Simulation::launch_query(size_t index) {
    if (index >= workload_.size() || peers_.empty()) return;
    if (live_peer_count() == 0) return;
    uint64_t origin = pick_live_peer(rng_workload_);
    start_query_flow(origin, workload_[index]);
}

void Simulation::start_query_flow(uint64_t origin_packed, const std::string& text) {
    uint64_t flow = new_flow(Flow::Kind::Query);
    QueryOutcome q;
    q.flow = flow;
    q.origin = origin_packed;
    q.text = text;
    q.issued = now_;

    ClusterSet targets;
    bool ok = true;
    try {
        q.pattern = parse_query(text);
        targets = clusters_of_pattern(ontology_, q.pattern);
    } catch (const UnsupportedPattern& e) {
        q.unsupported_pattern = true;
        ok = false;
        fail_flow(flow, e.what());
    } catch (const UnknownProperty& e) {
        q.unsupported_pattern = true;
        ok = false;
        fail_flow(flow, e.what());
    } catch (const std::runtime_error& e) {
        q.parse_error = true;
        ok = false;
        fail_flow(flow, e.what());
    }

    if (ok) {
        q.oracle = global_scan(q.pattern);
        q.clusters.assign(targets.begin(), targets.end());
    }
    queries_[flow] = std::move(q);

    if (ok) {
        SimPeer& origin = peers_.at(origin_packed);
        for (const auto& cluster : targets) {
            auto cit = clusters_.find(cluster);
            if (cit == clusters_.end() || cit->second.members.empty()) {
                queries_[flow].routes_failed++;
                continue;
            }
            MsgRoute msg;
            msg.flow = flow;
            msg.target_key = cit->second.key.value;
            msg.target_cluster = cluster;
            msg.ttl = cfg_.route_ttl_factor * static_cast<int>(clusters_.size());
            msg.action = ActionQuery{queries_[flow].pattern, origin_packed};
            on_route(origin, std::move(msg));
        }
    }
    flow_seal_if_idle(flow);
}

// ---- direct operation injection ----

uint64_t Simulation::inject_route(uint64_t src, const std::string& target_cluster,
                                  int ttl) {
    uint64_t flow = new_flow(Flow::Kind::Route);
    auto cit = clusters_.find(target_cluster);
    if (cit == clusters_.end()) {
        fail_flow(flow, "unknown target cluster");
        flow_seal_if_idle(flow);
        return flow;
    }
    MsgRoute msg;
    msg.flow = flow;
    msg.target_key = cit->second.key.value;
    msg.target_cluster = target_cluster;
    msg.ttl = ttl > 0 ? ttl : cfg_.route_ttl_factor * static_cast<int>(clusters_.size());
    msg.action = ActionProbe{};
    on_route(peers_.at(src), std::move(msg));
    flow_seal_if_idle(flow);
    return flow;
}

uint64_t Simulation::inject_chord_lookup(uint64_t entry, const TriplePattern& q) {
    uint64_t flow = new_flow(Flow::Kind::Lookup);
    SimPeer& p = peers_.at(entry);
    try {
        PairKey key = key_for_pattern(q, cfg_.chord_bits);
        start_chord_find(p, flow, key.value, PFetch{q, entry}, MsgTag::Query);
    } catch (const UnsupportedPattern& e) {
        flows_.at(flow).unsupported = true;
        fail_flow(flow, e.what());
    }
    flow_seal_if_idle(flow);
    return flow;
}

uint64_t Simulation::inject_chord_store(uint64_t entry, const StoredItem& item) {
    uint64_t flow = new_flow(Flow::Kind::Store);
    SimPeer& p = peers_.at(entry);
    for (const auto& key : keys_for_triple(item_triple(item), cfg_.chord_bits))
        start_chord_find(p, flow, key.value, PStore{item}, MsgTag::Maintenance);
    flow_seal_if_idle(flow);
    return flow;
}

uint64_t Simulation::inject_flood(uint64_t entry, const TriplePattern& q) {
    uint64_t flow = new_flow(Flow::Kind::Flood);
    SimPeer& p = peers_.at(entry);
    p.flood.mark_seen(flow);
    flood_process_local(p, flow, q, entry);
    flood_dispatch_and_spread(p, flow, q, entry, {}, cfg_.flood.ttl);
    flow_seal_if_idle(flow);
    return flow;
}

uint64_t Simulation::inject_query(uint64_t origin, const std::string& text) {
    uint64_t before = next_flow_;
    start_query_flow(origin, text);
    return before;
}

}  // namespace semo
