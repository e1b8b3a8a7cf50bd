#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace riskgate {

/// Counter-based generator. Every draw is a pure function of
/// (seed, path, t_index, stream, counter): grids can be filled in any order
/// or in parallel and still reproduce the serial sequence sample by sample.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t path = 0,
                        std::uint64_t t_index = 0, std::uint64_t stream = 0) {
        key_ = mix(seed + 0x9e3779b97f4a7c15ull);
        key_ = mix(key_ ^ mix(path + 0xbf58476d1ce4e5b9ull));
        key_ = mix(key_ ^ mix(t_index + 0x94d049bb133111ebull));
        key_ = mix(key_ ^ mix(stream + 0x2545f4914f6cdd1dull));
    }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + counter_ * 0x9e3779b97f4a7c15ull);
    }

    /// Uniform in [0, 1), 53 mantissa bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * next_uniform(); }

    /// Standard normal via Box-Muller; the paired value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - next_uniform();  // (0, 1]
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace riskgate
