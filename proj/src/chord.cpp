#include "semoverlay/chord.hpp"

#include <algorithm>
#include <cassert>

#include "semoverlay/errors.hpp"

namespace semo {

namespace {

uint64_t hash_pair(const Term& a, const Term& b, int key_bits) {
    return hash_bits(render_term(a) + "|" + render_term(b), key_bits);
}

}  // namespace

std::array<PairKey, 3> keys_for_triple(const Triple& t, int key_bits) {
    return {
        PairKey{PairKind::SubPred, hash_pair(t.subject, t.predicate, key_bits)},
        PairKey{PairKind::PredObj, hash_pair(t.predicate, t.object, key_bits)},
        PairKey{PairKind::SubObj, hash_pair(t.subject, t.object, key_bits)},
    };
}

PairKey key_for_pattern(const TriplePattern& q, int key_bits) {
    bool s = q.subject.is_bound(), p = q.predicate.is_bound(), o = q.object.is_bound();
    if (s && p)
        return PairKey{PairKind::SubPred, hash_pair(q.subject, q.predicate, key_bits)};
    if (p && o)
        return PairKey{PairKind::PredObj, hash_pair(q.predicate, q.object, key_bits)};
    if (s && o)
        return PairKey{PairKind::SubObj, hash_pair(q.subject, q.object, key_bits)};
    throw UnsupportedPattern("pair index needs at least two bound positions: " +
                             render_pattern(q));
}

bool in_interval_oc(uint64_t x, uint64_t from, uint64_t to, int bits) {
    uint64_t mask = (bits == 64) ? ~0ULL : ((1ULL << bits) - 1);
    uint64_t span = (to - from) & mask;
    if (span == 0) return true;  // (a, a] wraps the whole ring
    uint64_t off = (x - from) & mask;
    return off != 0 && off <= span;
}

bool in_interval_oo(uint64_t x, uint64_t from, uint64_t to, int bits) {
    uint64_t mask = (bits == 64) ? ~0ULL : ((1ULL << bits) - 1);
    uint64_t span = (to - from) & mask;
    uint64_t off = (x - from) & mask;
    if (span == 0) return off != 0;  // (a, a) wraps the whole ring minus a
    return off != 0 && off < span;
}

uint64_t chord_id_of(PeerId id, IdParams p, int key_bits) {
    assert(key_bits >= 1 && key_bits <= p.n);
    return id.nid >> (p.n - key_bits);
}

uint64_t successor_oracle(const std::vector<uint64_t>& sorted_ids, uint64_t key,
                          int bits) {
    (void)bits;
    assert(!sorted_ids.empty());
    assert(std::is_sorted(sorted_ids.begin(), sorted_ids.end()));
    auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), key);
    if (it == sorted_ids.end()) return sorted_ids.front();
    return *it;
}

}  // namespace semo
