#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace semo {

// Counter-based deterministic RNG. Every subsystem forks its own stream from
// the root seed via derive(), so adding a consumer never shifts the draws of
// another. SplitMix64 core keeps results identical across platforms, which
// std::uniform_int_distribution does not guarantee.
class Rng {
public:
    Rng() : state_(0x9e3779b97f4a7c15ULL) {}
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Rejection sampling, no modulo bias.
    uint64_t below(uint64_t bound) {
        if (bound <= 1) return 0;
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform double in [0, 1) with 53 bits of entropy.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Exponential with the given rate (events per unit time).
    double exponential(double rate) {
        double u = unit();
        // unit() can return 0; clamp away from log(0)
        if (u <= 0.0) u = 0x1.0p-53;
        return -std::log(u) / rate;
    }

    // Sample an index from non-negative weights (sum > 0).
    size_t weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double x = unit() * total;
        double acc = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// FNV-1a over a label plus salt; used to fork independent streams.
inline uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t salt = 0) {
    uint64_t h = 1469598103934665603ULL ^ root;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    for (int i = 0; i < 8; ++i) {
        h ^= (salt >> (i * 8)) & 0xff;
        h *= 1099511628211ULL;
    }
    return h;
}

inline Rng fork_rng(uint64_t root, std::string_view label, uint64_t salt = 0) {
    return Rng(derive_seed(root, label, salt));
}

}  // namespace semo
