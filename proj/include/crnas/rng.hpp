// Deterministic random number utilities. All stochastic code in this
// project draws through these helpers so that a seed fully determines
// every dataset and every experiment, independent of the standard
// library's distribution implementations.
#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace crnas {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// xoshiro256** by Blackman & Vigna; seeded via splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s = splitmix64(s);
            w = s;
        }
    }

    // Derive an independent stream, e.g. one per (dataset, start) task.
    Rng derive(std::uint64_t stream) const {
        return Rng(splitmix64(state_[0] ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Log-uniform on [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Standard normal via Box-Muller (fresh pair each call, second value dropped
    // to keep streams insensitive to call parity).
    double normal01() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal01(); }

    // Exponential with given rate (> 0).
    double exponential(double rate) {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return -std::log(u) / rate;
    }

    // Symmetric Dirichlet(1): uniform over the simplex.
    std::vector<double> dirichlet1(int k) {
        std::vector<double> w(static_cast<std::size_t>(k));
        double sum = 0.0;
        for (auto& wi : w) {
            wi = exponential(1.0);
            sum += wi;
        }
        for (auto& wi : w) wi /= sum;
        return w;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace crnas
