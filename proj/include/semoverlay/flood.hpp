#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "semoverlay/identity.hpp"
#include "semoverlay/rng.hpp"

namespace semo {

// Synthetic proximity coordinate in the unit square; latency and the
// proximity-based split both derive from it.
struct Coord {
    double x = 0.0;
    double y = 0.0;
};

inline double coord_distance(Coord a, Coord b) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// A node of the binary split tree, identified by its root path over {0,1}.
// The root sub-cluster has the empty id. Live sub-cluster ids stay prefix-free.
struct SubCluster {
    std::string id;
    std::set<uint64_t> members;  // packed peer ids
    std::map<std::string, uint64_t> gateways;  // sibling-subtree id -> packed peer

    auto size() const { return members.size(); }
};

struct FloodParams {
    size_t max_size = 32;
    size_t min_size = 4;
    size_t degree = 4;  // intra-sub-cluster random graph target degree c
    int ttl = 16;
};

// Per-peer flooding state: neighbors within the sub-cluster's random graph
// and a bounded dedup window of recently seen query ids.
struct FloodState {
    std::string sub_cluster_id;
    std::set<uint64_t> neighbors;  // packed peer ids, subset of own sub-cluster
    std::map<std::string, uint64_t> gateways;
    std::unordered_set<uint64_t> seen_queries;
    std::deque<uint64_t> seen_order;

    bool seen(uint64_t query_id) const { return seen_queries.count(query_id) > 0; }
    void mark_seen(uint64_t query_id, size_t window = 1024) {
        if (seen_queries.insert(query_id).second) {
            seen_order.push_back(query_id);
            while (seen_order.size() > window) {
                seen_queries.erase(seen_order.front());
                seen_order.pop_front();
            }
        }
    }
};

// Sibling subtree ids along the path from a leaf to the root: every prefix of
// `leaf_id` with its last bit flipped. These are exactly the subtrees a member
// holds gateways into.
std::vector<std::string> sibling_subtrees(const std::string& leaf_id);

bool is_prefix(const std::string& prefix, const std::string& id);

struct SplitOutcome {
    SubCluster lower;   // id + "0", members below the median
    SubCluster upper;   // id + "1"
};

// Median split along the axis with the larger coordinate spread; each child
// records the member of the other child nearest the split boundary as its
// gateway. Throws ValidationError on SplitUnderflow.
SplitOutcome split_subcluster(const SubCluster& sc,
                              const std::map<uint64_t, Coord>& coords,
                              const FloodParams& params);

// Picks the merge partner for a shrunken leaf: the live leaf sharing the
// longest id prefix (ties to the lexicographically smallest id). Returns the
// merged sub-cluster id: the common parent when the two leaves are exact
// siblings, otherwise the partner's id. Empty result set means there is
// nothing to merge with.
struct MergePlan {
    std::string partner_id;
    std::string merged_id;
};
std::optional<MergePlan> plan_merge(const std::string& leaf_id,
                                    const std::set<std::string>& live_leaves);

// Connected random graph over the members: a shuffled ring plus random edges
// until every degree reaches min(degree, n-1), capped at 2*degree.
std::map<uint64_t, std::set<uint64_t>> build_subcluster_graph(
    const std::set<uint64_t>& members, size_t degree, Rng& rng);

bool graph_connected(const std::map<uint64_t, std::set<uint64_t>>& adj);

}  // namespace semo
