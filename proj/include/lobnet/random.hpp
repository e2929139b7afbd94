#pragma once

// Portable seeded randomness. Distributions are written out here instead of
// using <random> distributions so that streams are identical across standard
// library implementations.

#include <cstdint>
#include <random>

namespace lobnet {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for stream `index` under `master`; serial and parallel runs agree.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_open_low() { return 1.0 - uniform(); }

    // Uniform integer on [0, n), n > 0. Rejection keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace lobnet
