#include "semoverlay/identity.hpp"

#include <openssl/evp.h>

#include <cassert>
#include <cstdio>

namespace semo {

uint64_t hash_bits(std::string_view text, int bits) {
    assert(bits >= 1 && bits <= 64);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha1(), nullptr);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | digest[i];
    if (bits == 64) return v;
    return v >> (64 - bits);
}

PeerId make_peer_id(const std::string& cluster, const std::string& address, IdParams p) {
    return PeerId{hash_bits(cluster, p.m), hash_bits(address, p.n)};
}

ClusterKey cluster_key(const std::string& cluster, IdParams p) {
    return ClusterKey{hash_bits(cluster, p.m)};
}

uint64_t pack(PeerId id, IdParams p) {
    return (id.sid << p.n) | id.nid;
}

PeerId unpack(uint64_t packed, IdParams p) {
    uint64_t nid_mask = (p.n == 64) ? ~0ULL : ((1ULL << p.n) - 1);
    return PeerId{packed >> p.n, packed & nid_mask};
}

uint64_t ring_distance(uint64_t a, uint64_t b, int bits) {
    uint64_t mask = (bits == 64) ? ~0ULL : ((1ULL << bits) - 1);
    uint64_t d1 = (a - b) & mask;
    uint64_t d2 = (b - a) & mask;
    return d1 < d2 ? d1 : d2;
}

std::string format_peer_id(PeerId id, IdParams p) {
    int sid_digits = (p.m + 3) / 4;
    int nid_digits = (p.n + 3) / 4;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%0*llx:%0*llx", sid_digits,
                  static_cast<unsigned long long>(id.sid), nid_digits,
                  static_cast<unsigned long long>(id.nid));
    return buf;
}

}  // namespace semo
