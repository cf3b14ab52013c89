#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace semo {

// Bit layout of a peer identifier: the top m bits carry the hashed semantic
// cluster (sid), the low n bits the hashed address (nid), k = m + n.
struct IdParams {
    int m = 16;
    int n = 48;

    int k() const { return m + n; }
    bool valid() const { return m >= 1 && m <= 64 && n >= 1 && n <= 64; }
};

struct PeerId {
    uint64_t sid = 0;
    uint64_t nid = 0;

    auto operator<=>(const PeerId&) const = default;
};

struct ClusterKey {
    uint64_t value = 0;

    auto operator<=>(const ClusterKey&) const = default;
};

// SHA-1 of the UTF-8 bytes of `text`, truncated to the most significant
// `bits` bits of the digest (big-endian). 1 <= bits <= 64.
uint64_t hash_bits(std::string_view text, int bits);

PeerId make_peer_id(const std::string& cluster, const std::string& address, IdParams p);

ClusterKey cluster_key(const std::string& cluster, IdParams p);

// Packed form (sid << n) | nid. Only valid when k <= 64.
uint64_t pack(PeerId id, IdParams p);
PeerId unpack(uint64_t packed, IdParams p);

// Circular distance on a `bits`-wide ring: min((a-b) mod 2^bits, (b-a) mod 2^bits).
uint64_t ring_distance(uint64_t a, uint64_t b, int bits);

// `sid:nid`, lowercase hex, zero-padded to ceil(m/4) and ceil(n/4) digits.
std::string format_peer_id(PeerId id, IdParams p);

}  // namespace semo
