#include <doctest.h>

#include "semoverlay/identity.hpp"
#include "semoverlay/rng.hpp"

using namespace semo;

// Reference digests computed with an independent SHA-1 tool (python hashlib)
// and frozen as regression constants.
TEST_CASE("hash_bits matches independent SHA-1 truncation") {
    CHECK(hash_bits("Adult", 16) == 0x1774);
    CHECK(hash_bits("Adult", 32) == 0x17748728);
    CHECK(hash_bits("Adult", 64) == 0x17748728d42a0477ULL);
    CHECK(hash_bits("IndoorSpace", 16) == 0xa8cc);
    CHECK(hash_bits("OutdoorSpace", 16) == 0x8838);
    CHECK(hash_bits("137.132.74.135", 48) == 0xb5c5663364c7ULL);
    CHECK(hash_bits("socam:TaoGu|socam:homeAddress", 16) == 0x310e);
    CHECK(hash_bits("__default", 16) == 0xacbb);
}

TEST_CASE("hash_bits truncation bound and prefix property") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string text = "t" + std::to_string(rng.next());
        int bits = 1 + static_cast<int>(rng.below(64));
        uint64_t v = hash_bits(text, bits);
        if (bits < 64) CHECK(v < (1ULL << bits));
        // truncation keeps the most significant digest bits
        int wider = bits + static_cast<int>(rng.below(static_cast<uint64_t>(65 - bits)));
        if (wider > bits && wider <= 64)
            CHECK((hash_bits(text, wider) >> (wider - bits)) == v);
    }
    CHECK(hash_bits("Adult", 16) == (hash_bits("Adult", 32) >> 16));
}

TEST_CASE("make_peer_id packs sid and nid") {
    IdParams p{16, 48};
    PeerId id = make_peer_id("Adult", "137.132.74.135", p);
    CHECK(id.sid == hash_bits("Adult", 16));
    CHECK(id.nid == hash_bits("137.132.74.135", 48));
    CHECK(unpack(pack(id, p), p) == id);

    PeerId other = make_peer_id("Adult", "10.0.0.1", p);
    CHECK(other.sid == id.sid);
    CHECK(other.nid != id.nid);
    CHECK(other.nid == 0xed1665c19014ULL);
}

TEST_CASE("make_peer_id deterministic across instances") {
    IdParams p{16, 48};
    for (int i = 0; i < 16; ++i) {
        std::string addr = "10.0.0." + std::to_string(i);
        CHECK(make_peer_id("Child", addr, p) == make_peer_id("Child", addr, p));
    }
}

TEST_CASE("ring_distance basics") {
    int m = 16;
    CHECK(ring_distance(1234, 1234, m) == 0);
    CHECK(ring_distance(0, 1ULL << 15, m) == (1ULL << 15));  // antipodal max
    CHECK(ring_distance(1, (1ULL << 16) - 1, m) == 2);       // wraparound
    CHECK(ring_distance(0, 1, 64) == 1);
}

TEST_CASE("ring_distance symmetry, bound, triangle inequality (exhaustive small rings)") {
    for (int bits = 1; bits <= 8; ++bits) {
        uint64_t n = 1ULL << bits;
        for (uint64_t a = 0; a < n; ++a) {
            for (uint64_t b = 0; b < n; ++b) {
                uint64_t d = ring_distance(a, b, bits);
                CHECK(d == ring_distance(b, a, bits));
                CHECK(d <= n / 2);
            }
        }
        // triangle inequality on a coarser grid to keep runtime sane
        uint64_t step = bits <= 5 ? 1 : 5;
        for (uint64_t a = 0; a < n; a += step)
            for (uint64_t b = 0; b < n; b += step)
                for (uint64_t c = 0; c < n; c += step)
                    CHECK(ring_distance(a, c, bits) <=
                          ring_distance(a, b, bits) + ring_distance(b, c, bits));
    }
}

TEST_CASE("peer id rendering is zero-padded hex") {
    IdParams p{16, 48};
    CHECK(format_peer_id(PeerId{0x1774, 0xb5c5663364c7ULL}, p) ==
          "1774:b5c5663364c7");
    CHECK(format_peer_id(PeerId{0x1, 0x2}, p) == "0001:000000000002");
    IdParams small{5, 7};
    CHECK(format_peer_id(PeerId{0x1f, 0x7f}, small) == "1f:7f");
}
