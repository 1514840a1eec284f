#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "gpn/common.hpp"

namespace gpn {

/// Deterministic 64-bit engine with explicit variate transforms on top, so
/// streams are reproducible across platforms and standard-library versions
/// (std::mt19937_64's raw output is pinned by the standard; the
/// distribution adaptors in <random> are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) {
        if (!std::isfinite(a) || !std::isfinite(b) || a > b) {
            throw invalid_input("uniform bounds must satisfy a <= b");
        }
        return a + uniform01() * (b - a);
    }

    /// exp(uniform(ln a, ln b)); multiplicative scales.
    double log_uniform(double a, double b) {
        if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b) || a > b) {
            throw invalid_input("log_uniform bounds must satisfy 0 < a <= b");
        }
        return std::exp(uniform(std::log(a), std::log(b)));
    }

    /// Standard normal via Box-Muller; the paired variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    double normal(double mean, double sigma) {
        if (!std::isfinite(mean) || !std::isfinite(sigma) || sigma < 0.0) {
            throw invalid_input("normal requires finite mean and sigma >= 0");
        }
        return mean + sigma * normal();
    }

    /// Knuth's product method; fine for the small rates used here.
    int poisson(double lambda) {
        if (!std::isfinite(lambda) || lambda < 0.0 || lambda > 100.0) {
            throw invalid_input("poisson rate must be in [0, 100]");
        }
        const double limit = std::exp(-lambda);
        int k = 0;
        double prod = 1.0;
        while (true) {
            prod *= uniform01();
            if (prod <= limit) return k;
            ++k;
        }
    }

    /// Uniform integer on [lo, hi], both inclusive.
    int uniform_int(int lo, int hi) {
        if (lo > hi) throw invalid_input("uniform_int requires lo <= hi");
        const std::uint64_t span =
            static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        auto k = static_cast<std::uint64_t>(uniform01() *
                                            static_cast<double>(span));
        if (k >= span) k = span - 1;
        return static_cast<int>(static_cast<std::uint64_t>(lo) + k);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent substream for (seed, index): the draw sequence of one stream
/// never depends on how many other streams exist or who consumes them.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ index));
}

inline Rng derive_stream(std::uint64_t seed, std::string_view key) {
    return derive_stream(seed, fnv1a64(key));
}

}  // namespace gpn
