#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fignet {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derive an independent stream seed, e.g. per figure or per tensor.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x9e3779b97f4a7c15ull));
}

// mt19937_64 with hand-rolled distributions so sequences do not depend on
// the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0,n)
    std::uint64_t uniform_int(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fignet
