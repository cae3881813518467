#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "multilink/util.hpp"

// Self-contained RNG (xoshiro256++ seeded through SplitMix64) with the handful
// of distributions the engine needs.  Nothing here uses <random> distribution
// classes, whose algorithms are implementation-defined, so every draw is
// reproducible byte-for-byte across platforms and standard libraries.
namespace multilink {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Child-stream seed: master seed combined with a role tag and an index.
// Documented contract: seed(role, i) = splitmix64 chain over
// (master, fnv1a64(role), i), so distinct roles/indices give distinct streams.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& role,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= fnv1a64(role);
    std::uint64_t b = splitmix64(s);
    s ^= index + 0x9e3779b97f4a7c15ull;
    return a ^ b ^ splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1): 53-bit mantissa.
    double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).  Rejection keeps it unbiased.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below(0)");
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_below(i)]);
    }

    // Standard normal via Box-Muller (fresh pair each call; no cached state).
    double normal() {
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 boosted via U^{1/shape}.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma shape <= 0");
        if (shape < 1.0) {
            double u = uniform01();
            while (u <= 0.0) u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    std::vector<double> dirichlet(std::span<const double> alpha) {
        std::vector<double> x(alpha.size());
        double total = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            x[i] = gamma(alpha[i]);
            total += x[i];
        }
        if (total <= 0.0) total = std::numeric_limits<double>::min();
        for (double& v : x) v /= total;
        return x;
    }

    // Index draw from unnormalised probabilities (CDF inversion).
    std::size_t categorical(std::span<const double> weights) {
        double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(total > 0.0)) throw std::invalid_argument("categorical: no mass");
        double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        // Round-off may leave u just past the last bin; return the last
        // positive-weight index.
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0.0) return i;
        return weights.size() - 1;
    }

    // Draw from log-weights: normalise by the max, prune entries more than
    // `prune_nats` below it, then invert the CDF.
    std::size_t categorical_log(std::span<const double> logw,
                                double prune_nats = 50.0) {
        double m = kNegInf;
        for (double w : logw)
            if (w > m) m = w;
        if (m == kNegInf)
            throw std::invalid_argument("categorical_log: all weights are -inf");
        std::vector<double> p(logw.size());
        for (std::size_t i = 0; i < logw.size(); ++i)
            p[i] = (logw[i] >= m - prune_nats) ? std::exp(logw[i] - m) : 0.0;
        return categorical(p);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace multilink
