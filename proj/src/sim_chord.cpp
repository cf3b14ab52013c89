// Chord low-level overlay: iterative find_successor walks, join with key
// transfer, graceful-leave handoff, and timer-driven stabilize/fix_fingers.
// Peer references in ChordState are packed ids; the chord identifier of a
// packed id is read off the peer table (dead peers stay addressable so stale
// entries resolve, they just never pass the liveness check).

#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"
#include "semoverlay/simnet.hpp"

namespace semo {

namespace {

int find_ttl(const SimConfig& cfg) { return cfg.chord_bits + cfg.succ_list + 4; }

}  // namespace

uint64_t chord_id_of_packed(const Simulation& sim, uint64_t packed) {
    return sim.peers().at(packed).chord.self_id;
}

void Simulation::join_chord(SimPeer& p, ClusterRuntime& cr) {
    uint64_t mask = (cfg_.chord_bits == 64) ? ~0ULL : ((1ULL << cfg_.chord_bits) - 1);
    uint64_t cid = chord_id_of(p.id, cfg_.idp, cfg_.chord_bits);
    // linear probe on the rare chord-id collision inside one cluster
    while (cr.chord_ids.count(cid)) cid = (cid + 1) & mask;
    p.chord = ChordState{};
    p.chord.self_id = cid;
    p.chord.fingers.assign(cfg_.chord_bits, p.packed);
    cr.chord_ids[cid] = p.packed;

    std::vector<uint64_t> others;
    for (const auto& [id, packed] : cr.chord_ids)
        if (packed != p.packed && alive(packed)) others.push_back(packed);
    if (others.empty()) return;  // first member: own successor, fingers self

    uint64_t bootstrap = others[rng_boot_.below(others.size())];
    MsgChordFind msg;
    msg.flow = 0;
    msg.key = cid;
    msg.ttl = find_ttl(cfg_);
    msg.purpose = PJoin{p.packed};
    send(p, bootstrap, MsgTag::Maintenance, std::move(msg));
}

std::optional<uint64_t> Simulation::chord_live_successor(SimPeer& p) {
    auto& succ = p.chord.successors;
    while (!succ.empty() && (!alive(succ.front()) || succ.front() == p.packed))
        succ.erase(succ.begin());
    if (!succ.empty()) return succ.front();
    // last-resort repair when the whole list died at once: adopt the live
    // member the registry places first clockwise after us
    ClusterRuntime& cr = clusters_.at(p.home_cluster);
    std::optional<uint64_t> wrap;
    for (const auto& [cid, packed] : cr.chord_ids) {
        if (packed == p.packed || !alive(packed)) continue;
        if (!wrap) wrap = packed;
        if (cid > p.chord.self_id) {
            succ.push_back(packed);
            return packed;
        }
    }
    if (wrap) succ.push_back(*wrap);
    return wrap;
}

uint64_t Simulation::chord_closest_preceding(const SimPeer& p, uint64_t key) const {
    uint64_t best = 0;
    uint64_t best_id = 0;
    bool have = false;
    auto consider = [&](uint64_t packed) {
        if (packed == p.packed || !alive(packed)) return;
        uint64_t cid = peers_.at(packed).chord.self_id;
        if (!in_interval_oo(cid, p.chord.self_id, key, cfg_.chord_bits)) return;
        if (!have || in_interval_oo(best_id, p.chord.self_id, cid, cfg_.chord_bits)) {
            best = packed;
            best_id = cid;
            have = true;
        }
    };
    for (auto it = p.chord.fingers.rbegin(); it != p.chord.fingers.rend(); ++it)
        consider(*it);
    for (uint64_t s : p.chord.successors) consider(s);
    return have ? best : 0;
}

void Simulation::start_chord_find(SimPeer& entry, uint64_t flow, uint64_t key,
                                  FindPurpose purpose, MsgTag tag) {
    MsgChordFind msg;
    msg.flow = flow;
    msg.key = key;
    msg.hops = 0;
    msg.ttl = find_ttl(cfg_);
    msg.purpose = std::move(purpose);
    (void)tag;
    on_chord_find(entry, std::move(msg));  // the walk starts at the entry itself
}

void Simulation::chord_forward(SimPeer& p, MsgChordFind msg, uint64_t to) {
    msg.hops++;
    if (--msg.ttl < 0) {
        if (msg.flow) fail_flow(msg.flow, "chord lookup ttl exceeded");
        return;
    }
    MsgTag tag = std::holds_alternative<PFetch>(msg.purpose) ? MsgTag::Query
                                                             : MsgTag::Maintenance;
    if (msg.flow) {
        auto q = queries_.find(msg.flow);
        if (q != queries_.end()) q->second.intra_msgs++;
    }
    send(p, to, tag, std::move(msg));
}

void Simulation::on_chord_find(SimPeer& p, MsgChordFind msg) {
    if (msg.terminal) {
        chord_execute(p, msg);
        return;
    }
    auto succ = chord_live_successor(p);
    if (!succ) {  // singleton ring
        chord_execute(p, msg);
        return;
    }
    uint64_t succ_id = peers_.at(*succ).chord.self_id;
    if (p.chord.predecessor && alive(*p.chord.predecessor) &&
        in_interval_oc(msg.key, peers_.at(*p.chord.predecessor).chord.self_id,
                       p.chord.self_id, cfg_.chord_bits)) {
        chord_execute(p, msg);
        return;
    }
    if (in_interval_oc(msg.key, p.chord.self_id, succ_id, cfg_.chord_bits)) {
        msg.terminal = true;
        chord_forward(p, std::move(msg), *succ);
        return;
    }
    uint64_t next = chord_closest_preceding(p, msg.key);
    if (next == 0) next = *succ;
    chord_forward(p, std::move(msg), next);
}

void Simulation::chord_execute(SimPeer& p, MsgChordFind& msg) {
    std::visit(
        [&](auto& purpose) {
            using T = std::decay_t<decltype(purpose)>;
            if constexpr (std::is_same_v<T, PFetch>) {
                std::vector<StoredItem> found;
                auto it = p.chord.store.find(msg.key);
                if (it != p.chord.store.end()) {
                    for (const auto& item : it->second)
                        if (matches(item_triple(item), purpose.pattern))
                            found.push_back(item);
                }
                if (msg.flow) {
                    auto fit = flows_.find(msg.flow);
                    if (fit != flows_.end())
                        fit->second.chord_hops =
                            std::max(fit->second.chord_hops, msg.hops);
                }
                if (purpose.origin == p.packed) {
                    MsgResults r{msg.flow, std::move(found), false};
                    on_results(p, r);
                } else {
                    if (msg.flow) {
                        auto q = queries_.find(msg.flow);
                        if (q != queries_.end()) q->second.intra_msgs++;
                    }
                    send(p, purpose.origin, MsgTag::Response,
                         MsgResults{msg.flow, std::move(found), false});
                }
            } else if constexpr (std::is_same_v<T, PStore>) {
                p.chord.store[msg.key].insert(purpose.item);
                if (msg.flow) {
                    auto fit = flows_.find(msg.flow);
                    if (fit != flows_.end()) {
                        fit->second.stores++;
                        fit->second.chord_hops =
                            std::max(fit->second.chord_hops, msg.hops);
                    }
                }
            } else if constexpr (std::is_same_v<T, PJoin>) {
                // the joiner's key range moves over: (pred, joiner] of my keys
                if (!alive(purpose.joiner)) return;
                const SimPeer& joiner = peers_.at(purpose.joiner);
                uint64_t from = p.chord.predecessor && alive(*p.chord.predecessor)
                                    ? peers_.at(*p.chord.predecessor).chord.self_id
                                    : p.chord.self_id;
                MsgChordJoinReply reply;
                reply.successor = p.packed;
                reply.successors = p.chord.successors;
                std::vector<uint64_t> gone;
                // hand over (pred, joiner] only when the joiner really falls
                // into our range; a misrouted join gets its keys later via
                // republish instead of gutting our store
                if (in_interval_oc(joiner.chord.self_id, from, p.chord.self_id,
                                   cfg_.chord_bits)) {
                    for (auto& [key, items] : p.chord.store) {
                        if (in_interval_oc(key, from, joiner.chord.self_id,
                                           cfg_.chord_bits)) {
                            for (const auto& item : items)
                                reply.items.emplace_back(key, item);
                            gone.push_back(key);
                        }
                    }
                }
                for (uint64_t key : gone) p.chord.store.erase(key);
                send(p, purpose.joiner, MsgTag::Maintenance, std::move(reply));
            } else if constexpr (std::is_same_v<T, PFinger>) {
                if (alive(purpose.requester) && purpose.requester != p.packed)
                    send(p, purpose.requester, MsgTag::Maintenance,
                         MsgChordFingerReply{purpose.slot, p.packed});
                else if (purpose.requester == p.packed &&
                         purpose.slot < static_cast<int>(p.chord.fingers.size()))
                    p.chord.fingers[purpose.slot] = p.packed;
            }
        },
        msg.purpose);
}

void Simulation::on_chord_join_reply(SimPeer& p, const MsgChordJoinReply& msg) {
    for (const auto& [key, item] : msg.items) p.chord.store[key].insert(item);

    // a reply that crawled through a still-forming ring can arrive after
    // stabilization already built topology; only adopt when we have none
    bool have_live = false;
    for (uint64_t s : p.chord.successors)
        if (alive(s) && s != p.packed) have_live = true;
    if (have_live || !alive(msg.successor)) return;

    p.chord.successors.clear();
    p.chord.successors.push_back(msg.successor);
    for (uint64_t s : msg.successors) {
        if (s == p.packed || s == msg.successor) continue;
        if (static_cast<int>(p.chord.successors.size()) >= cfg_.succ_list) break;
        p.chord.successors.push_back(s);
    }
    std::fill(p.chord.fingers.begin(), p.chord.fingers.end(), msg.successor);

    // eager finger bootstrap; fix_fingers keeps them fresh afterwards
    uint64_t mask = (cfg_.chord_bits == 64) ? ~0ULL : ((1ULL << cfg_.chord_bits) - 1);
    for (int slot = 0; slot < cfg_.chord_bits; ++slot) {
        uint64_t target = (p.chord.self_id + (1ULL << slot)) & mask;
        start_chord_find(p, 0, target, PFinger{p.packed, slot}, MsgTag::Maintenance);
    }
}

void Simulation::on_chord_transfer(SimPeer& p, const MsgChordTransfer& msg) {
    for (const auto& [key, item] : msg.items) p.chord.store[key].insert(item);
}

void Simulation::on_chord_succ_hint(SimPeer& p, const MsgChordSuccHint& msg) {
    auto& succ = p.chord.successors;
    std::erase(succ, msg.leaver);
    if (msg.succ != p.packed && alive(msg.succ) &&
        std::find(succ.begin(), succ.end(), msg.succ) == succ.end()) {
        succ.insert(succ.begin(), msg.succ);
        if (static_cast<int>(succ.size()) > cfg_.succ_list) succ.resize(cfg_.succ_list);
    }
}

void Simulation::chord_stabilize(SimPeer& p) {
    if (p.chord.predecessor &&
        (!alive(*p.chord.predecessor) || *p.chord.predecessor == p.packed))
        p.chord.predecessor.reset();
    auto succ = chord_live_successor(p);
    if (!succ) return;  // singleton
    send(p, *succ, MsgTag::Maintenance, MsgChordPredReq{p.packed});

    // key migration: placements that predate ring changes can sit outside
    // our (pred, self] range; push them to their real successor
    if (p.chord.predecessor && alive(*p.chord.predecessor)) {
        uint64_t pred_id = peers_.at(*p.chord.predecessor).chord.self_id;
        std::vector<uint64_t> out;
        for (const auto& [key, items] : p.chord.store) {
            if (!in_interval_oc(key, pred_id, p.chord.self_id, cfg_.chord_bits))
                out.push_back(key);
        }
        for (uint64_t key : out) {
            auto items = std::move(p.chord.store.at(key));
            p.chord.store.erase(key);
            for (const auto& item : items)
                start_chord_find(p, 0, key, PStore{item}, MsgTag::Maintenance);
        }
    }
}

void Simulation::on_chord_pred_req(SimPeer& p, const MsgChordPredReq& msg) {
    if (!alive(msg.from)) return;
    MsgChordPredReply reply;
    reply.from = p.packed;
    reply.pred = p.chord.predecessor;
    reply.successors = p.chord.successors;
    send(p, msg.from, MsgTag::Maintenance, std::move(reply));
}

void Simulation::on_chord_pred_reply(SimPeer& p, const MsgChordPredReply& msg) {
    uint64_t succ = msg.from;
    if (!alive(succ)) return;
    uint64_t succ_id = peers_.at(succ).chord.self_id;
    if (msg.pred && alive(*msg.pred) && *msg.pred != p.packed) {
        uint64_t cand_id = peers_.at(*msg.pred).chord.self_id;
        if (in_interval_oo(cand_id, p.chord.self_id, succ_id, cfg_.chord_bits))
            succ = *msg.pred;
    }
    std::vector<uint64_t> list{succ};
    for (uint64_t s : msg.successors) {
        if (s == p.packed || !alive(s)) continue;
        if (std::find(list.begin(), list.end(), s) != list.end()) continue;
        if (static_cast<int>(list.size()) >= cfg_.succ_list) break;
        list.push_back(s);
    }
    p.chord.successors = std::move(list);
    if (!p.chord.fingers.empty()) p.chord.fingers[0] = p.chord.successors.front();
    send(p, p.chord.successors.front(), MsgTag::Maintenance,
         MsgChordNotify{p.packed});
}

void Simulation::on_chord_notify(SimPeer& p, const MsgChordNotify& msg) {
    if (!alive(msg.candidate) || msg.candidate == p.packed) return;
    if (p.chord.predecessor && !alive(*p.chord.predecessor))
        p.chord.predecessor.reset();
    if (!p.chord.predecessor) {
        p.chord.predecessor = msg.candidate;
        return;
    }
    uint64_t cand_id = peers_.at(msg.candidate).chord.self_id;
    uint64_t pred_id = peers_.at(*p.chord.predecessor).chord.self_id;
    if (in_interval_oo(cand_id, pred_id, p.chord.self_id, cfg_.chord_bits))
        p.chord.predecessor = msg.candidate;
}

void Simulation::chord_fix_finger(SimPeer& p) {
    if (p.chord.fingers.empty()) return;
    int slot = p.chord.next_finger;
    p.chord.next_finger = (slot + 1) % static_cast<int>(p.chord.fingers.size());
    auto succ = chord_live_successor(p);
    if (!succ) {
        p.chord.fingers[slot] = p.packed;
        return;
    }
    uint64_t mask = (cfg_.chord_bits == 64) ? ~0ULL : ((1ULL << cfg_.chord_bits) - 1);
    uint64_t target = (p.chord.self_id + (1ULL << slot)) & mask;
    start_chord_find(p, 0, target, PFinger{p.packed, slot}, MsgTag::Maintenance);
}

void Simulation::on_chord_finger_reply(SimPeer& p, const MsgChordFingerReply& msg) {
    if (msg.slot < 0 || msg.slot >= static_cast<int>(p.chord.fingers.size())) return;
    p.chord.fingers[msg.slot] = msg.peer;
}

}  // namespace semo
