#include "semoverlay/flood.hpp"

#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"

namespace semo {

std::vector<std::string> sibling_subtrees(const std::string& leaf_id) {
    std::vector<std::string> out;
    for (size_t i = 0; i < leaf_id.size(); ++i) {
        std::string sib = leaf_id.substr(0, i + 1);
        sib.back() = sib.back() == '0' ? '1' : '0';
        out.push_back(std::move(sib));
    }
    return out;
}

bool is_prefix(const std::string& prefix, const std::string& id) {
    return id.size() >= prefix.size() &&
           id.compare(0, prefix.size(), prefix) == 0;
}

SplitOutcome split_subcluster(const SubCluster& sc,
                              const std::map<uint64_t, Coord>& coords,
                              const FloodParams& params) {
    if (sc.members.size() <= params.max_size)
        throw ValidationError("sub-cluster " + (sc.id.empty() ? "<root>" : sc.id) +
                              " is not above maxSize");
    size_t lower_count = (sc.members.size() + 1) / 2;
    if (lower_count < params.min_size || sc.members.size() - lower_count < params.min_size)
        throw ValidationError("split of sub-cluster would underflow minSize; raise maxSize");

    auto coord_of = [&](uint64_t id) {
        auto it = coords.find(id);
        return it == coords.end() ? Coord{} : it->second;
    };

    double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
    for (uint64_t m : sc.members) {
        Coord c = coord_of(m);
        min_x = std::min(min_x, c.x);
        max_x = std::max(max_x, c.x);
        min_y = std::min(min_y, c.y);
        max_y = std::max(max_y, c.y);
    }
    bool use_x = (max_x - min_x) >= (max_y - min_y);

    std::vector<std::pair<double, uint64_t>> order;
    order.reserve(sc.members.size());
    for (uint64_t m : sc.members) {
        Coord c = coord_of(m);
        order.emplace_back(use_x ? c.x : c.y, m);
    }
    std::sort(order.begin(), order.end());

    SplitOutcome out;
    out.lower.id = sc.id + "0";
    out.upper.id = sc.id + "1";
    for (size_t i = 0; i < order.size(); ++i)
        (i < lower_count ? out.lower : out.upper).members.insert(order[i].second);

    // inherited gateways stay valid: peers recorded for an outer subtree are
    // still inside that subtree after this split
    out.lower.gateways = sc.gateways;
    out.upper.gateways = sc.gateways;
    // each child gets the other's boundary-nearest member as gateway
    out.lower.gateways[out.upper.id] = order[lower_count].second;
    out.upper.gateways[out.lower.id] = order[lower_count - 1].second;
    return out;
}

std::optional<MergePlan> plan_merge(const std::string& leaf_id,
                                    const std::set<std::string>& live_leaves) {
    std::optional<MergePlan> best;
    size_t best_len = 0;
    for (const auto& other : live_leaves) {
        if (other == leaf_id) continue;
        size_t len = 0;
        while (len < other.size() && len < leaf_id.size() && other[len] == leaf_id[len])
            ++len;
        if (!best || len > best_len) {
            best = MergePlan{other, ""};
            best_len = len;
        }
    }
    if (!best) return std::nullopt;

    // exact siblings collapse into their parent, otherwise the shrunken leaf
    // is absorbed into the partner and its own region goes dark
    const std::string& partner = best->partner_id;
    bool exact_siblings = partner.size() == leaf_id.size() &&
                          best_len + 1 == leaf_id.size();
    best->merged_id = exact_siblings ? leaf_id.substr(0, best_len) : partner;
    return best;
}

std::map<uint64_t, std::set<uint64_t>> build_subcluster_graph(
    const std::set<uint64_t>& members, size_t degree, Rng& rng) {
    std::map<uint64_t, std::set<uint64_t>> adj;
    for (uint64_t m : members) adj[m];
    if (members.size() < 2) return adj;

    std::vector<uint64_t> order(members.begin(), members.end());
    rng.shuffle(order);

    auto link = [&](uint64_t a, uint64_t b) {
        adj[a].insert(b);
        adj[b].insert(a);
    };

    // shuffled ring guarantees connectivity
    if (order.size() == 2) {
        link(order[0], order[1]);
    } else {
        for (size_t i = 0; i < order.size(); ++i)
            link(order[i], order[(i + 1) % order.size()]);
    }

    size_t target = std::min(degree, members.size() - 1);
    size_t cap = 2 * degree;
    for (uint64_t m : order) {
        int attempts = 0;
        while (adj[m].size() < target && attempts < 32) {
            ++attempts;
            uint64_t other = order[rng.below(order.size())];
            if (other == m || adj[m].count(other) || adj[other].size() >= cap) continue;
            link(m, other);
        }
    }
    return adj;
}

bool graph_connected(const std::map<uint64_t, std::set<uint64_t>>& adj) {
    if (adj.empty()) return true;
    std::set<uint64_t> seen;
    std::vector<uint64_t> stack{adj.begin()->first};
    seen.insert(adj.begin()->first);
    while (!stack.empty()) {
        uint64_t cur = stack.back();
        stack.pop_back();
        auto it = adj.find(cur);
        if (it == adj.end()) continue;
        for (uint64_t nb : it->second) {
            if (seen.insert(nb).second) stack.push_back(nb);
        }
    }
    return seen.size() == adj.size();
}

}  // namespace semo
