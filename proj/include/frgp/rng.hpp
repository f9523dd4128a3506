#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace frgp {

/* Seed splitting rule: all randomness in a run flows from one 64-bit master
   seed.  Component stream k uses an mt19937_64 engine seeded with
   splitmix64(master ^ splitmix64(k + 1)), so streams are decorrelated and a
   (master, stream) pair always yields the same engine state.  Variate
   transforms below are written out explicitly (no std::*_distribution), so a
   seeded stream produces identical draws on any platform. */

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static Rng stream(std::uint64_t master, std::uint64_t stream_id) {
        return Rng(splitmix64(master ^ splitmix64(stream_id + 1)));
    }

    std::uint64_t next_u64() { return gen_(); }

    // uniform on [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1], safe under log()
    double uniform_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

    // standard normal via Box-Muller; second variate of each pair is cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double t = 6.283185307179586476925286766559 * uniform();
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Gamma(shape, scale) via Marsaglia-Tsang squeeze; shape < 1 boosted
    double gamma(double shape, double scale) {
        if (shape <= 0.0 || scale <= 0.0)
            throw std::domain_error("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // bounded rejection keeps the draw unbiased
        const std::uint64_t lim = n * ((~0ull) / n);
        std::uint64_t x;
        do { x = gen_(); } while (x >= lim);
        return x % n;
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace frgp
