#pragma once

#include <cstdint>
#include <random>

namespace msim {

/// Deterministic stream derivation: every consumer of randomness owns a
/// generator seeded by derive_stream(master, purpose, a, b). One master seed
/// reproduces the whole experiment; replication order never matters because
/// streams never share state.
///
/// purpose ids (a, b give the within-purpose coordinates):
///   kBrownianPath  a = path index
///   kScenario      a = grid step, b = replication/path index
///   kRegime        a = trader id
///   kPopulation    a = group index, b = trader index within group
///   kEnsembleRun   a = run index
enum StreamPurpose : std::uint64_t {
    kBrownianPath = 1,
    kScenario = 2,
    kRegime = 3,
    kPopulation = 4,
    kEnsembleRun = 5,
    kUnderlying = 6,
};

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t purpose,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t x = mix64(master);
    x = mix64(x ^ purpose);
    x = mix64(x ^ a);
    x = mix64(x ^ b);
    return x;
}

/// splitmix64 as a UniformRandomBitGenerator. Streams are cheap to construct
/// (one word of state), which matters because scenario resampling opens a
/// fresh stream per (step, path).
class SplitMix64 {
  public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~std::uint64_t{0}; }
    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

  private:
    std::uint64_t state_;
};

/// N(0,1) stream over a dedicated engine.
class GaussStream {
  public:
    explicit GaussStream(std::uint64_t stream_seed) : engine_(stream_seed) {}
    double operator()() { return dist_(engine_); }

  private:
    SplitMix64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace msim
