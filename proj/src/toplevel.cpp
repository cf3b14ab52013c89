#include "semoverlay/toplevel.hpp"

#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"

namespace semo {

ClusterDirectory build_directory(const std::vector<std::string>& cluster_names,
                                 const std::map<std::string, OverlayKind>& kinds,
                                 OverlayKind default_kind, IdParams params) {
    ClusterDirectory dir;
    dir.params = params;
    std::map<uint64_t, std::string> seen;
    for (const auto& name : cluster_names) {
        ClusterKey key = cluster_key(name, params);
        auto [it, fresh] = seen.emplace(key.value, name);
        if (!fresh && it->second != name)
            throw ValidationError("cluster key collision between '" + it->second +
                                  "' and '" + name + "' at m=" + std::to_string(params.m));
        OverlayKind kind = default_kind;
        if (auto k = kinds.find(name); k != kinds.end()) kind = k->second;
        dir.entries[name] = ClusterInfo{key, kind, 0};
    }
    return dir;
}

std::vector<PeerId> ContactTable::short_range() const {
    std::vector<PeerId> out;
    auto push = [&](const std::optional<PeerId>& c) {
        if (c && std::find(out.begin(), out.end(), *c) == out.end()) out.push_back(*c);
    };
    push(same_cluster);
    push(ring_pred);
    push(ring_succ);
    return out;
}

std::vector<PeerId> ContactTable::all() const {
    std::vector<PeerId> out = short_range();
    for (const auto& c : long_range)
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    return out;
}

bool ContactTable::contains(PeerId id) const {
    auto v = all();
    return std::find(v.begin(), v.end(), id) != v.end();
}

bool ContactTable::references(uint64_t packed, IdParams p) const {
    for (const auto& c : all())
        if (pack(c, p) == packed) return true;
    return false;
}

PeerPlacement place_peer(const std::set<Triple>& local_data, const Ontology& o) {
    PeerPlacement out;
    for (const auto& t : local_data) {
        for (const auto& cluster : clusters_of_triple(o, t))
            out.assignments[cluster].insert(t);
    }
    if (out.assignments.empty()) {
        out.home = kDefaultCluster;
        return out;
    }
    // largest triple count, ties to the lexicographically smallest name;
    // map iteration is already name-ordered so > keeps the first max
    size_t best = 0;
    for (const auto& [name, triples] : out.assignments) {
        if (triples.size() > best) {
            best = triples.size();
            out.home = name;
        }
    }
    for (const auto& [name, triples] : out.assignments) {
        if (name != out.home) out.foreign[name] = triples;
    }
    return out;
}

size_t sample_long_range_cluster(uint64_t self_key,
                                 const std::vector<uint64_t>& keys, int m_bits,
                                 Rng& rng) {
    assert(!keys.empty());
    std::vector<double> weights(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) {
        uint64_t d = ring_distance(self_key, keys[i], m_bits);
        weights[i] = d == 0 ? 0.0 : 1.0 / static_cast<double>(d);
    }
    return rng.weighted(weights);
}

namespace {

// Uniform member of a cluster, excluding self; nullopt when none remains.
std::optional<PeerId> pick_member(const std::set<PeerId>& members, PeerId self,
                                  Rng& rng) {
    std::vector<PeerId> pool;
    pool.reserve(members.size());
    for (const auto& m : members)
        if (m != self) pool.push_back(m);
    if (pool.empty()) return std::nullopt;
    return pool[rng.below(pool.size())];
}

}  // namespace

ContactTable build_contacts(PeerId self, const std::string& self_cluster,
                            const ClusterDirectory& dir, const Membership& members,
                            int q, Rng& rng) {
    ContactTable table;
    const ClusterInfo* self_info = dir.find(self_cluster);
    assert(self_info);

    auto members_of = [&](const std::string& name) -> const std::set<PeerId>* {
        auto it = members.find(name);
        if (it == members.end() || it->second.empty()) return nullptr;
        return &it->second;
    };

    if (auto* own = members_of(self_cluster))
        table.same_cluster = pick_member(*own, self, rng);

    // ring order over populated clusters only; empty clusters are skipped
    std::vector<std::pair<uint64_t, std::string>> ring;
    for (const auto& [name, info] : dir.entries) {
        if (name != self_cluster && members_of(name)) ring.emplace_back(info.key.value, name);
    }
    std::sort(ring.begin(), ring.end());
    if (!ring.empty()) {
        // successor: first key clockwise after self's; predecessor: last before
        size_t succ_idx = 0;
        while (succ_idx < ring.size() && ring[succ_idx].first < self_info->key.value)
            ++succ_idx;
        if (succ_idx == ring.size()) succ_idx = 0;
        size_t pred_idx = (succ_idx + ring.size() - 1) % ring.size();
        table.ring_succ = pick_member(*members_of(ring[succ_idx].second), self, rng);
        if (pred_idx != succ_idx)
            table.ring_pred = pick_member(*members_of(ring[pred_idx].second), self, rng);
        else
            table.ring_pred = table.ring_succ;
    }

    // long-range: q independent 1/d draws over every other cluster in the
    // directory; empty or duplicate outcomes are redrawn a bounded number of
    // times, then omitted
    std::vector<uint64_t> keys;
    std::vector<std::string> names;
    for (const auto& [name, info] : dir.entries) {
        if (name == self_cluster) continue;
        keys.push_back(info.key.value);
        names.push_back(name);
    }
    if (!keys.empty()) {
        for (int i = 0; i < q; ++i) {
            for (int attempt = 0; attempt < 8; ++attempt) {
                size_t idx = sample_long_range_cluster(self_info->key.value, keys,
                                                       dir.params.m, rng);
                auto* pool = members_of(names[idx]);
                if (!pool) continue;
                auto pick = pick_member(*pool, self, rng);
                if (!pick || table.contains(*pick)) continue;
                table.long_range.push_back(*pick);
                break;
            }
        }
    }
    return table;
}

std::optional<PeerId> greedy_next_hop(PeerId current, const ContactTable& contacts,
                                      ClusterKey target, IdParams p) {
    if (current.sid == target.value) return std::nullopt;
    auto candidates = contacts.all();
    if (candidates.empty()) throw NoContacts();

    uint64_t own_dist = ring_distance(current.sid, target.value, p.m);
    const PeerId* best = nullptr;
    uint64_t best_dist = 0;
    for (const auto& c : candidates) {
        uint64_t d = ring_distance(c.sid, target.value, p.m);
        if (!best || d < best_dist ||
            (d == best_dist && pack(c, p) < pack(*best, p))) {
            best = &c;
            best_dist = d;
        }
    }
    if (best_dist < own_dist) return *best;
    // no strict progress available: step clockwise so routing cannot stall
    if (contacts.ring_succ) return *contacts.ring_succ;
    return *best;
}

}  // namespace semo
