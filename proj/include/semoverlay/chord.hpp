#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "semoverlay/identity.hpp"
#include "semoverlay/rdf.hpp"
#include "semoverlay/toplevel.hpp"

namespace semo {

enum class PairKind { SubPred, PredObj, SubObj };

// A triple is indexed three times, under the hashes of its <sub pred>,
// <pred obj> and <sub obj> pairs. The pair string joins the two canonical
// term texts with '|'.
struct PairKey {
    PairKind kind = PairKind::SubPred;
    uint64_t value = 0;

    auto operator<=>(const PairKey&) const = default;
};

// Items a Chord node stores under a key: the data triples themselves, or
// foreign-index entries pointing at the owning peer.
using StoredItem = std::variant<Triple, IndexEntry>;

inline const Triple& item_triple(const StoredItem& item) {
    if (const auto* t = std::get_if<Triple>(&item)) return *t;
    return std::get<IndexEntry>(item).triple;
}

std::array<PairKey, 3> keys_for_triple(const Triple& t, int key_bits);

// Key selection for lookups: sub_pred when subject+predicate are bound (this
// also covers fully bound patterns), else pred_obj, else sub_obj. Patterns
// with fewer than two bound positions cannot use the pair index.
PairKey key_for_pattern(const TriplePattern& q, int key_bits);

// Per-peer Chord state. Identifiers live in a key_bits-wide subspace of the
// nid (prefix truncation), so fixtures stay readable while hashes stay SHA-1.
struct ChordState {
    uint64_t self_id = 0;
    std::vector<uint64_t> successors;  // ordered, entry 0 is the successor
    std::optional<uint64_t> predecessor;
    std::vector<uint64_t> fingers;  // fingers[i] targets self_id + 2^i
    int next_finger = 0;            // round-robin fix_fingers slot
    std::map<uint64_t, std::set<StoredItem>> store;

    uint64_t successor() const { return successors.empty() ? self_id : successors[0]; }
    size_t stored_items() const {
        size_t n = 0;
        for (const auto& [k, items] : store) n += items.size();
        return n;
    }
};

// True when x lies in the half-open ring interval (from, to].
bool in_interval_oc(uint64_t x, uint64_t from, uint64_t to, int bits);
// True when x lies in the open ring interval (from, to).
bool in_interval_oo(uint64_t x, uint64_t from, uint64_t to, int bits);

// Chord identifier of a peer: the top key_bits bits of its nid.
uint64_t chord_id_of(PeerId id, IdParams p, int key_bits);

// Sorted-membership oracle: the first id at or clockwise-after key.
uint64_t successor_oracle(const std::vector<uint64_t>& sorted_ids, uint64_t key,
                          int bits);

}  // namespace semo
