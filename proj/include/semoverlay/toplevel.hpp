#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semoverlay/identity.hpp"
#include "semoverlay/ontology.hpp"
#include "semoverlay/rdf.hpp"
#include "semoverlay/rng.hpp"

namespace semo {

enum class OverlayKind { Chord, Flood };

struct ClusterInfo {
    ClusterKey key;
    OverlayKind overlay = OverlayKind::Chord;
    size_t member_count = 0;
};

// Cluster name -> key/overlay registry. Keys must be pairwise distinct; a
// hash collision between cluster names aborts construction.
struct ClusterDirectory {
    std::map<std::string, ClusterInfo> entries;
    IdParams params;

    const ClusterInfo* find(const std::string& name) const {
        auto it = entries.find(name);
        return it == entries.end() ? nullptr : &it->second;
    }
    std::optional<std::string> name_of_key(uint64_t key) const {
        for (const auto& [name, info] : entries)
            if (info.key.value == key) return name;
        return std::nullopt;
    }
};

ClusterDirectory build_directory(const std::vector<std::string>& cluster_names,
                                 const std::map<std::string, OverlayKind>& kinds,
                                 OverlayKind default_kind, IdParams params);

// A data triple held by `owner` but registered in a cluster other than the
// owner's home cluster.
struct IndexEntry {
    Triple triple;
    PeerId owner;

    auto operator<=>(const IndexEntry&) const = default;
};

// Small-world neighbor table: one contact inside the peer's own cluster, one
// in each ring-adjacent cluster, and q long-range contacts drawn with
// probability proportional to 1/d.
struct ContactTable {
    std::optional<PeerId> same_cluster;
    std::optional<PeerId> ring_pred;
    std::optional<PeerId> ring_succ;
    std::vector<PeerId> long_range;

    // short-range view: own-cluster plus ring neighbors, deduplicated
    std::vector<PeerId> short_range() const;
    // every distinct contact, deterministic order
    std::vector<PeerId> all() const;
    bool contains(PeerId id) const;
    bool references(uint64_t packed, IdParams p) const;
};

struct PeerPlacement {
    std::string home;
    std::map<std::string, std::set<Triple>> foreign;
    // full partition, home included; useful for storing home data
    std::map<std::string, std::set<Triple>> assignments;
};

// Chooses the semantic cluster holding the largest share of the peer's data
// (ties to the lexicographically smallest name); the rest become foreign
// registrations. Empty data lands in __default.
PeerPlacement place_peer(const std::set<Triple>& local_data, const Ontology& o);

using Membership = std::map<std::string, std::set<PeerId>>;

// Draws a target cluster index with probability proportional to
// 1/ring_distance(self_key, key, m). `keys` excludes the peer's own cluster.
size_t sample_long_range_cluster(uint64_t self_key,
                                 const std::vector<uint64_t>& keys, int m_bits,
                                 Rng& rng);

ContactTable build_contacts(PeerId self, const std::string& self_cluster,
                            const ClusterDirectory& dir, const Membership& members,
                            int q, Rng& rng);

// One greedy routing step: nullopt means the query is already at its target
// cluster. Falls back to the ring-successor contact when no contact improves
// on the current position. Throws NoContacts when the table is empty.
std::optional<PeerId> greedy_next_hop(PeerId current, const ContactTable& contacts,
                                      ClusterKey target, IdParams p);

struct RouteResult {
    std::vector<PeerId> path;
    int hops = 0;
    bool delivered = false;
    bool ttl_exceeded = false;
};

}  // namespace semo
