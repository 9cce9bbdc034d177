#pragma once

#include <cmath>
#include <cstdint>

namespace pixinla {

/// Identifier embedded in reports so corrupted data can be regenerated
/// bit-exactly by any build that ships the same generator.
inline constexpr const char* kRngName = "xoshiro256ss-v1";

/// xoshiro256** seeded through splitmix64 from a single 64-bit value.
///
/// Self-contained so that streams are identical across platforms and standard
/// libraries; std::*_distribution is implementation-defined and unusable for
/// the bit-stable corruption contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            // splitmix64
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
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

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar method (one spare cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        have_spare_ = true;
        return u * factor;
    }

    /// Poisson(mu): Knuth multiplication below 30, PTRD rejection above.
    std::uint64_t poisson(double mu) {
        if (mu < 30.0) return poisson_knuth(mu);
        return poisson_ptrd(mu);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t poisson_knuth(double mu) {
        const double limit = std::exp(-mu);
        std::uint64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    // Hormann's PTRD transformed-rejection sampler.
    std::uint64_t poisson_ptrd(double mu) {
        const double smu = std::sqrt(mu);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double kd = std::floor((2.0 * a / us + b) * u + mu + 0.43);
            if (kd < 0.0) continue;
            const auto k = static_cast<std::uint64_t>(kd);
            if (us >= 0.07 && v <= v_r) return k;
            if (us < 0.013 && v > us) continue;
            const double lhs =
                std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs =
                kd * std::log(mu) - mu - std::lgamma(kd + 1.0);
            if (lhs <= rhs) return k;
        }
    }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pixinla
