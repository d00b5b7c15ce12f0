#include "hfrl/parallel.hpp"
#include "hfrl/rng.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

using hfrl::Rng;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived seeds are distinct across streams and masters") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 20; ++m)
        for (std::uint64_t s = 0; s < 20; ++s)
            seen.insert(hfrl::derive_seed(m, s));
    CHECK(seen.size() == 400);
    CHECK(hfrl::derive_seed(7, 3) == hfrl::derive_seed(7, 3));
}

TEST_CASE("uniform stays in [0,1) with mean near 1/2") {
    Rng rng(1);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal draws have unit variance") {
    Rng rng(2);
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
    }
    CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("categorical frequencies follow unnormalized weights") {
    Rng rng(3);
    const std::vector<double> w{1.0, 0.0, 3.0, -2.0};
    const int n = 40000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i)
        ++counts[rng.categorical(w)];
    CHECK(counts[1] == 0);
    CHECK(counts[3] == 0);
    const double p = 0.25;
    CHECK(std::abs(counts[0] / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
    CHECK_THROWS_AS(rng.categorical(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("uniform_int covers the range") {
    Rng rng(4);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i)
        ++counts[rng.uniform_int(7)];
    for (int c : counts)
        CHECK(c > 800);
    CHECK_THROWS(rng.uniform_int(0));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(101);
    hfrl::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits)
        CHECK(h.load() == 1);
    CHECK_THROWS_AS(hfrl::parallel_for(10, 3,
                                       [](std::size_t i) {
                                           if (i == 7)
                                               throw std::runtime_error("boom");
                                       }),
                    std::runtime_error);
}
