#include <doctest.h>

#include <cmath>
#include <vector>

#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"

using namespace jsi;

TEST_CASE("streams are reproducible and distinct") {
    Rng a(42, 3, 7), b(42, 3, 7), c(42, 3, 8), d(42, 4, 7);
    std::uint64_t x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("uniform and normal moments") {
    Rng r(1);
    const int n = 200000;
    double s = 0, s2 = 0, m = 0, m2 = 0;
    for (int k = 0; k < n; ++k) {
        double u = r.uniform();
        REQUIRE(u >= 0);
        REQUIRE(u < 1);
        s += u;
        s2 += u * u;
        double z = r.normal();
        m += z;
        m2 += z * z;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
    CHECK(std::abs(m / n) < 0.01);
    CHECK(m2 / n == doctest::Approx(1).epsilon(0.02));
}

TEST_CASE("geometric draws follow single-mode thermal statistics") {
    // Thermal light: <n(n-1)> = 2 <n>^2.
    Rng r(9);
    const double mu = 0.3;
    const int n = 400000;
    double s = 0, f = 0;
    for (int k = 0; k < n; ++k) {
        double x = static_cast<double>(r.geometric(mu));
        s += x;
        f += x * (x - 1);
    }
    double mean = s / n;
    CHECK(mean == doctest::Approx(mu).epsilon(0.02));
    CHECK(f / n / (mean * mean) == doctest::Approx(2).epsilon(0.04));
}

TEST_CASE("poisson and binomial means") {
    Rng r(5);
    double p = 0, b = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        p += static_cast<double>(r.poisson(3.5));
        b += static_cast<double>(r.binomial(10, 0.3));
    }
    CHECK(p / n == doctest::Approx(3.5).epsilon(0.02));
    CHECK(b / n == doctest::Approx(3).epsilon(0.02));
    CHECK(r.poisson(0) == 0);
}

TEST_CASE("parallel_for output does not depend on the thread count") {
    auto run = [](unsigned threads) {
        std::vector<std::uint64_t> v(1000);
        parallel_for(v.size(), [&](std::size_t i) {
            Rng r(77, 1, i);
            v[i] = r() ^ r();
        }, threads);
        return v;
    };
    auto one = run(1);
    CHECK(one == run(2));
    CHECK(one == run(7));
}

TEST_CASE("parallel_for visits every index exactly once") {
    std::vector<int> hits(513, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
    for (int h : hits) REQUIRE(h == 1);
    parallel_for(0, [&](std::size_t) { FAIL("no work expected"); }, 4);
}
