// Gnutella-like low-level overlay: proximity-grouped sub-clusters maintained
// by a registry-driven restructure pass (split above maxSize, merge below
// minSize, graph repair on membership change) and the parallel flooding
// search that covers sibling subtrees through gateway peers before spreading
// inside the local random graph.

#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"
#include "semoverlay/simnet.hpp"

namespace semo {

namespace {

Coord centroid(const std::map<uint64_t, SimPeer>& peers,
               const std::set<uint64_t>& members) {
    Coord c;
    if (members.empty()) return c;
    for (uint64_t m : members) {
        const Coord& mc = peers.at(m).coord;
        c.x += mc.x;
        c.y += mc.y;
    }
    c.x /= static_cast<double>(members.size());
    c.y /= static_cast<double>(members.size());
    return c;
}

}  // namespace

void Simulation::join_flood(SimPeer& p, ClusterRuntime& cr) {
    p.flood = FloodState{};
    if (cr.leaves.empty()) {
        SubCluster root;
        root.id = "";
        root.members.insert(p.packed);
        cr.leaves[""] = std::move(root);
        cr.graphs[""][p.packed];
        p.flood.sub_cluster_id = "";
        cr.dirty_leaves.insert("");
        schedule_restructure(cr.name);
        return;
    }
    // proximity placement: the leaf whose member centroid is nearest
    std::string best;
    double best_d = 0.0;
    bool have = false;
    for (const auto& [id, leaf] : cr.leaves) {
        if (leaf.members.empty()) continue;
        double d = coord_distance(p.coord, centroid(peers_, leaf.members));
        if (!have || d < best_d) {
            best = id;
            best_d = d;
            have = true;
        }
    }
    if (!have) best = cr.leaves.begin()->first;
    cr.leaves[best].members.insert(p.packed);
    p.flood.sub_cluster_id = best;
    cr.dirty_leaves.insert(best);
    schedule_restructure(cr.name);
}

bool Simulation::subtree_fully_covered(const ClusterRuntime& cr,
                                       const std::set<std::string>& covered,
                                       const std::string& subtree) const {
    for (const auto& [id, leaf] : cr.leaves) {
        if (leaf.members.empty()) continue;
        if (!is_prefix(subtree, id)) continue;
        bool hit = false;
        for (const auto& c : covered) {
            if (is_prefix(c, id)) {
                hit = true;
                break;
            }
        }
        if (!hit) return false;
    }
    return true;  // vacuously covered when no live leaf remains under it
}

std::optional<uint64_t> Simulation::live_gateway(SimPeer& p, const ClusterRuntime& cr,
                                                 const std::string& subtree,
                                                 const std::set<std::string>& covered) const {
    auto leaf_covered = [&](const std::string& id) {
        for (const auto& c : covered)
            if (is_prefix(c, id)) return true;
        return false;
    };
    auto it = p.flood.gateways.find(subtree);
    if (it != p.flood.gateways.end() && alive(it->second)) {
        const SimPeer& gw = peers_.at(it->second);
        // the recorded peer must still sit in an uncovered leaf of the
        // subtree, otherwise its arrival would be suppressed and the rest
        // of the subtree missed
        if (is_prefix(subtree, gw.flood.sub_cluster_id) &&
            !leaf_covered(gw.flood.sub_cluster_id))
            return it->second;
    }
    for (const auto& [id, leaf] : cr.leaves) {
        if (!is_prefix(subtree, id) || leaf_covered(id)) continue;
        for (uint64_t m : leaf.members)
            if (alive(m)) return m;
    }
    return std::nullopt;
}

void Simulation::flood_process_local(SimPeer& p, uint64_t flow,
                                     const TriplePattern& pattern, uint64_t origin) {
    if (auto fit = flows_.find(flow); fit != flows_.end())
        fit->second.processed[p.packed]++;
    std::vector<StoredItem> found;
    for (const auto& t : p.repository)
        if (matches(t, pattern)) found.push_back(StoredItem{t});
    for (const auto& e : p.flood_index)
        if (matches(e.triple, pattern)) found.push_back(StoredItem{e});
    if (found.empty()) return;
    if (origin == p.packed) {
        MsgResults r{flow, std::move(found), false};
        on_results(p, r);
        return;
    }
    if (auto fit = flows_.find(flow); fit != flows_.end()) fit->second.result_msgs++;
    if (auto q = queries_.find(flow); q != queries_.end()) q->second.intra_msgs++;
    send(p, origin, MsgTag::Response, MsgResults{flow, std::move(found), false});
}

void Simulation::flood_dispatch_and_spread(SimPeer& p, uint64_t flow,
                                           const TriplePattern& pattern,
                                           uint64_t origin,
                                           std::set<std::string> covered, int ttl) {
    const ClusterRuntime& cr = clusters_.at(p.home_cluster);
    covered.insert(p.flood.sub_cluster_id);
    if (ttl < 1) return;

    // claim every sibling subtree not already handled, then tell each gateway
    // about all the others so no sub-cluster is entered twice
    std::vector<std::string> targets;
    for (const auto& s : sibling_subtrees(p.flood.sub_cluster_id)) {
        if (!subtree_fully_covered(cr, covered, s)) targets.push_back(s);
    }
    std::set<std::string> full = covered;
    full.insert(targets.begin(), targets.end());
    for (const auto& s : targets) {
        std::set<std::string> others = full;
        others.erase(s);
        auto gw = live_gateway(p, cr, s, others);
        if (!gw) continue;
        MsgFloodControl msg;
        msg.flow = flow;
        msg.pattern = pattern;
        msg.origin = origin;
        msg.covered = full;
        msg.covered.erase(s);  // the recipient is responsible for s itself
        msg.ttl = ttl - 1;
        if (auto fit = flows_.find(flow); fit != flows_.end())
            fit->second.control_msgs++;
        if (auto q = queries_.find(flow); q != queries_.end()) q->second.intra_msgs++;
        send(p, *gw, MsgTag::Query, std::move(msg));
    }

    for (uint64_t nb : p.flood.neighbors) {
        MsgFloodSpread msg{flow, pattern, origin, ttl - 1};
        if (auto fit = flows_.find(flow); fit != flows_.end())
            fit->second.spread_msgs++;
        if (auto q = queries_.find(flow); q != queries_.end()) q->second.intra_msgs++;
        send(p, nb, MsgTag::Query, std::move(msg));
    }
}

void Simulation::on_flood_control(SimPeer& p, MsgFloodControl msg) {
    if (p.flood.seen(msg.flow)) {
        if (auto fit = flows_.find(msg.flow); fit != flows_.end())
            fit->second.suppressed++;
        return;
    }
    p.flood.mark_seen(msg.flow);
    flood_process_local(p, msg.flow, msg.pattern, msg.origin);
    flood_dispatch_and_spread(p, msg.flow, msg.pattern, msg.origin,
                              std::move(msg.covered), msg.ttl);
}

void Simulation::on_flood_spread(SimPeer& p, MsgFloodSpread msg) {
    if (p.flood.seen(msg.flow)) {
        if (auto fit = flows_.find(msg.flow); fit != flows_.end())
            fit->second.suppressed++;
        return;
    }
    p.flood.mark_seen(msg.flow);
    flood_process_local(p, msg.flow, msg.pattern, msg.origin);
    if (msg.ttl < 1) return;
    for (uint64_t nb : p.flood.neighbors) {
        MsgFloodSpread fwd{msg.flow, msg.pattern, msg.origin, msg.ttl - 1};
        if (auto fit = flows_.find(msg.flow); fit != flows_.end())
            fit->second.spread_msgs++;
        if (auto q = queries_.find(msg.flow); q != queries_.end())
            q->second.intra_msgs++;
        send(p, nb, MsgTag::Query, std::move(fwd));
    }
}

void Simulation::on_flood_update(SimPeer& p, const MsgFloodUpdate& msg) {
    p.flood.sub_cluster_id = msg.sub_cluster_id;
    p.flood.neighbors = msg.neighbors;
    p.flood.gateways = msg.gateways;
}

void Simulation::on_index_handoff(SimPeer& p, const MsgIndexHandoff& msg) {
    for (const auto& e : msg.entries) p.flood_index.insert(e);
}

void Simulation::push_flood_updates(ClusterRuntime& cr, const std::string& leaf_id) {
    auto lit = cr.leaves.find(leaf_id);
    if (lit == cr.leaves.end()) return;
    SubCluster& leaf = lit->second;
    auto& graph = cr.graphs[leaf_id];

    // refresh gateway entries: keep live ones that still sit under their
    // subtree, fill the rest with the member nearest this leaf's centroid
    Coord center = centroid(peers_, leaf.members);
    std::map<std::string, uint64_t> gateways;
    for (const auto& s : sibling_subtrees(leaf_id)) {
        auto old = leaf.gateways.find(s);
        if (old != leaf.gateways.end() && alive(old->second) &&
            is_prefix(s, peers_.at(old->second).flood.sub_cluster_id)) {
            gateways[s] = old->second;
            continue;
        }
        std::optional<uint64_t> pick;
        double pick_d = 0.0;
        for (const auto& [id, other] : cr.leaves) {
            if (!is_prefix(s, id)) continue;
            for (uint64_t m : other.members) {
                if (!alive(m)) continue;
                double d = coord_distance(center, peers_.at(m).coord);
                if (!pick || d < pick_d) {
                    pick = m;
                    pick_d = d;
                }
            }
        }
        if (pick) gateways[s] = *pick;
    }
    leaf.gateways = gateways;

    if (leaf.members.empty()) return;
    uint64_t coordinator = *leaf.members.begin();
    for (uint64_t m : leaf.members) {
        MsgFloodUpdate upd;
        upd.sub_cluster_id = leaf_id;
        auto git = graph.find(m);
        if (git != graph.end()) upd.neighbors = git->second;
        upd.gateways = leaf.gateways;
        if (m == coordinator) {
            on_flood_update(peers_.at(m), upd);
        } else {
            send(peers_.at(coordinator), m, MsgTag::Maintenance, std::move(upd));
        }
    }
}

void Simulation::do_restructure(const std::string& cluster) {
    ClusterRuntime& cr = clusters_.at(cluster);
    cr.restructure_scheduled = false;
    if (cr.kind != OverlayKind::Flood) return;

    std::set<std::string> affected = std::move(cr.dirty_leaves);
    cr.dirty_leaves.clear();

    for (int guard = 0; guard < 64; ++guard) {
        // drop emptied leaves first; their region simply goes dark
        bool erased = false;
        for (auto it = cr.leaves.begin(); it != cr.leaves.end();) {
            if (it->second.members.empty()) {
                affected.erase(it->first);
                cr.graphs.erase(it->first);
                it = cr.leaves.erase(it);
                erased = true;
            } else {
                ++it;
            }
        }
        if (erased) continue;

        auto oversized = std::find_if(cr.leaves.begin(), cr.leaves.end(), [&](auto& kv) {
            return kv.second.members.size() > cfg_.flood.max_size;
        });
        if (oversized != cr.leaves.end()) {
            std::map<uint64_t, Coord> coords;
            for (uint64_t m : oversized->second.members)
                coords[m] = peers_.at(m).coord;
            SplitOutcome so;
            try {
                so = split_subcluster(oversized->second, coords, cfg_.flood);
            } catch (const ValidationError&) {
                break;  // split would underflow minSize; leave oversized
            }
            std::string old_id = oversized->first;
            cr.leaves.erase(old_id);
            cr.graphs.erase(old_id);
            affected.erase(old_id);
            for (auto& child : {std::ref(so.lower), std::ref(so.upper)}) {
                std::string id = child.get().id;
                for (uint64_t m : child.get().members)
                    peers_.at(m).flood.sub_cluster_id = id;  // registry view
                cr.leaves[id] = std::move(child.get());
                affected.insert(id);
            }
            continue;
        }

        if (cr.leaves.size() > 1) {
            auto shrunken = std::find_if(cr.leaves.begin(), cr.leaves.end(), [&](auto& kv) {
                return kv.second.members.size() < cfg_.flood.min_size;
            });
            if (shrunken != cr.leaves.end()) {
                std::set<std::string> live_ids;
                for (const auto& [id, leaf] : cr.leaves) live_ids.insert(id);
                auto plan = plan_merge(shrunken->first, live_ids);
                if (!plan) break;
                SubCluster merged;
                merged.id = plan->merged_id;
                auto& a = cr.leaves.at(shrunken->first);
                auto& b = cr.leaves.at(plan->partner_id);
                merged.members = a.members;
                merged.members.insert(b.members.begin(), b.members.end());
                std::string ida = shrunken->first, idb = plan->partner_id;
                cr.leaves.erase(ida);
                cr.leaves.erase(idb);
                cr.graphs.erase(ida);
                cr.graphs.erase(idb);
                affected.erase(ida);
                affected.erase(idb);
                for (uint64_t m : merged.members)
                    peers_.at(m).flood.sub_cluster_id = merged.id;
                affected.insert(merged.id);
                cr.leaves[merged.id] = std::move(merged);
                continue;
            }
        }
        break;
    }

    for (const auto& id : affected) {
        auto lit = cr.leaves.find(id);
        if (lit == cr.leaves.end()) continue;
        cr.graphs[id] =
            build_subcluster_graph(lit->second.members, cfg_.flood.degree, rng_graph_);
        push_flood_updates(cr, id);
    }
}

}  // namespace semo
