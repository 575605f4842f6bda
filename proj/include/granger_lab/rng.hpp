#pragma once

// Reproducible random streams. Seeds for each (cell, iteration) are derived
// from a master seed by SplitMix64 mixing, so the stream a worker sees depends
// only on its coordinates and never on scheduling. Variates are produced from
// a std::mt19937_64 engine (bit-exact across standard libraries) with
// hand-written transforms, because the std distributions are
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace granger_lab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based split: a distinct, well-mixed seed per (master, cell, iteration).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                           std::uint64_t iteration) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ splitmix64(cell + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ splitmix64(iteration + 0x85157af5ULL));
    return h;
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the Box-Muller transform; both variates are used.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace granger_lab
