#pragma once

#include <cstdint>
#include <limits>

namespace jsi {

std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** generator. Streams are keyed by (seed, stream, index) so
/// work split across threads draws the same numbers as a serial run.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on (0, 1].
    double uniform_pos();
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }
    std::uint64_t poisson(double mean);
    std::uint64_t binomial(std::uint64_t n, double p);
    /// Photon number of a single thermal mode with the given mean.
    std::uint64_t geometric(double mean);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t s_[4];
    double spare_ = 0;
    bool has_spare_ = false;
};

/// Stream identifiers used across the library.
namespace streams {
inline constexpr std::uint64_t sample_pairs = 1;
inline constexpr std::uint64_t detection = 2;
inline constexpr std::uint64_t dark_counts = 3;
inline constexpr std::uint64_t routing = 4;
inline constexpr std::uint64_t mono = 5;
inline constexpr std::uint64_t bootstrap = 6;
inline constexpr std::uint64_t fourier = 7;
inline constexpr std::uint64_t stimulated = 8;
inline constexpr std::uint64_t hbt = 9;
inline constexpr std::uint64_t hom = 10;
inline constexpr std::uint64_t reference = 11;
inline constexpr std::uint64_t fibre_loss = 12;
}  // namespace streams

}  // namespace jsi
