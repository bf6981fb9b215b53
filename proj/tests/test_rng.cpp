#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "sdslab/rng.hpp"

using namespace sdslab;

TEST_CASE("splitmix64 matches the published reference sequence") {
    // outputs of the splitmix64 stream seeded with 1234567
    const std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;
    CHECK(splitmix64(1234567ULL) == 6457827717110365317ULL);
    CHECK(splitmix64(1234567ULL + gamma) == 3203168211198807973ULL);
    CHECK(splitmix64(1234567ULL + 2 * gamma) == 9817491932198370423ULL);
}

TEST_CASE("uniform_index stays in range and covers all buckets") {
    Rng rng(42);
    std::vector<long> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const std::uint64_t k = rng.uniform_index(7);
        REQUIRE(k < 7);
        ++counts[k];
    }
    for (long c : counts) CHECK(std::abs(c - 10000) < 500);
    CHECK_THROWS(rng.uniform_index(0));
}

TEST_CASE("uniform01 lies in the half-open unit interval") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("bernoulli respects degenerate probabilities") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        CHECK_FALSE(rng.bernoulli(0.0));
        CHECK(rng.bernoulli(1.0));
    }
    long hits = 0;
    for (int i = 0; i < 100000; ++i) hits += rng.bernoulli(0.3);
    CHECK(std::abs(hits - 30000) < 1000);
}

TEST_CASE("normal has unit moments") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("streams are reproducible and mutually distinct") {
    Rng a = Rng::stream(99, 4);
    Rng b = Rng::stream(99, 4);
    Rng c = Rng::stream(99, 5);
    bool differs = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t va = a.next_u64();
        REQUIRE(va == b.next_u64());
        if (va != c.next_u64()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("shuffle permutes and hits every ordering of three items") {
    Rng rng(5);
    std::vector<int> base = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> v = base;
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == base);

    std::map<std::vector<int>, long> orders;
    for (int i = 0; i < 6000; ++i) {
        std::vector<int> t = {1, 2, 3};
        rng.shuffle(t);
        ++orders[t];
    }
    REQUIRE(orders.size() == 6);
    for (const auto& [perm, count] : orders) CHECK(std::abs(count - 1000) < 200);
}
