#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace jumpsim {

// SplitMix64 step, used to derive independent stream seeds from
// (master seed, stream index) pairs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Random stream with explicitly implemented samplers. The standard
// distributions are implementation-defined, which would break the
// bit-identical reproducibility contract, so everything is derived
// from raw mt19937_64 output here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent, reproducible replicate stream.
    static Rng stream(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t s = master_seed;
        std::uint64_t a = splitmix64(s);
        s ^= index * 0x9e3779b97f4a7c15ULL;
        std::uint64_t b = splitmix64(s);
        return Rng(a ^ (b + 0x632be59bd9b4e019ULL + (index << 1)));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1], safe as a log argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_cached_) {
            have_cached_ = false;
            return mean + stddev * cached_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    // Poisson by inversion for small means, PTRS-style normal bridge is
    // not needed at desk scale; means here stay modest.
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) {
            double p = std::exp(-mean);
            double cum = p;
            double u = uniform();
            long k = 0;
            while (u > cum && k < 10000) {
                ++k;
                p *= mean / static_cast<double>(k);
                cum += p;
            }
            return k;
        }
        // Split large means; keeps the inversion numerically sane.
        long half = poisson(mean / 2.0);
        return half + poisson(mean - mean / 2.0);
    }

    // Index draw proportional to nonnegative weights; total must be
    // the sum of weights.
    template <typename WeightAt>
    std::size_t categorical(std::size_t n, double total, WeightAt&& weight) {
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            acc += weight(i);
            if (u < acc) return i;
        }
        return n == 0 ? 0 : n - 1;
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace jumpsim
