#include "jsi/rng.hpp"

#include <cmath>
#include <random>

#include "jsi/units.hpp"

namespace jsi {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t st = seed;
    std::uint64_t key = splitmix64(st);
    st = key ^ (stream * 0xd1b54a32d192ed03ULL);
    key = splitmix64(st);
    st = key ^ (index * 0xaef17502108ef2d9ULL);
    for (auto& w : s_) w = splitmix64(st);
}

Rng::result_type Rng::operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2 * pi * u2);
    has_spare_ = true;
    return r * std::cos(2 * pi * u2);
}

std::uint64_t Rng::poisson(double mean) {
    if (!(mean > 0)) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(*this);
}

std::uint64_t Rng::binomial(std::uint64_t n, double p) {
    if (n == 0 || p <= 0) return 0;
    if (p >= 1) return n;
    std::binomial_distribution<std::uint64_t> d(n, p);
    return d(*this);
}

std::uint64_t Rng::geometric(double mean) {
    if (!(mean > 0)) return 0;
    double q = mean / (1.0 + mean);
    return static_cast<std::uint64_t>(std::floor(std::log(uniform_pos()) / std::log(q)));
}

}  // namespace jsi
