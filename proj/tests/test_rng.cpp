#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ehfl/rng.hpp"

using namespace ehfl;

TEST_CASE("canonical draws lie in [0, 1)") {
    RandomStream rng(1, StreamPurpose::Charging);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.next_canonical();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_int stays in range and is roughly uniform") {
    RandomStream rng(2, StreamPurpose::Grouping);
    const std::uint64_t n = 7;
    std::vector<int> counts(n, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t v = rng.uniform_int(n);
        REQUIRE(v < n);
        ++counts[v];
    }
    for (const int c : counts) {
        // expectation 10000, sd ~ sqrt(10000 * 6/7) ~ 93; 5 sd band
        CHECK(c > 10000 - 465);
        CHECK(c < 10000 + 465);
    }
}

TEST_CASE("normal draws have the right first two moments") {
    RandomStream rng(3, StreamPurpose::TaskGen);
    const int n = 200000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("gamma draws match mean and variance alpha") {
    for (const double alpha : {0.5, 1.0, 2.5}) {
        RandomStream rng(4, StreamPurpose::Partition);
        const int n = 200000;
        double sum = 0.0;
        double sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = rng.gamma(alpha);
            REQUIRE(x >= 0.0);
            sum += x;
            sumsq += x * x;
        }
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        CHECK(std::abs(mean - alpha) < 0.03 * (1.0 + alpha));
        CHECK(std::abs(var - alpha) < 0.08 * (1.0 + alpha));
    }
}

TEST_CASE("streams replay bit-exactly and purposes decorrelate") {
    RandomStream a(42, StreamPurpose::Charging, 3);
    RandomStream b(42, StreamPurpose::Charging, 3);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    RandomStream c(42, StreamPurpose::Charging, 4);   // different client index
    RandomStream d(42, StreamPurpose::Batching, 3);   // different purpose
    RandomStream e(43, StreamPurpose::Charging, 3);   // different root seed
    RandomStream base(42, StreamPurpose::Charging, 3);
    int same_c = 0;
    int same_d = 0;
    int same_e = 0;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t v = base.next_u64();
        same_c += (c.next_u64() == v);
        same_d += (d.next_u64() == v);
        same_e += (e.next_u64() == v);
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
    CHECK(same_e == 0);
}

TEST_CASE("shuffle permutes and replays deterministically") {
    std::vector<std::int64_t> v(100);
    std::iota(v.begin(), v.end(), 0);
    RandomStream rng(9, StreamPurpose::Grouping);
    rng.shuffle(v);

    std::vector<std::int64_t> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::int64_t i = 0; i < 100; ++i) {
        REQUIRE(sorted[static_cast<std::size_t>(i)] == i);
    }

    std::vector<std::int64_t> w(100);
    std::iota(w.begin(), w.end(), 0);
    RandomStream rng2(9, StreamPurpose::Grouping);
    rng2.shuffle(w);
    CHECK(v == w);
}
