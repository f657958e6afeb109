#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "actiml/errors.hpp"
#include "actiml/rng.hpp"

using namespace actiml;

TEST_CASE("splitmix64 matches the published reference sequence for seed 0") {
    SplitMix64 sm(0);
    CHECK(sm.next() == UINT64_C(0xe220a8397b1dcdaf));
    CHECK(sm.next() == UINT64_C(0x6e789e6aa1b965f4));
    CHECK(sm.next() == UINT64_C(0x06c45d188009454f));
}

TEST_CASE("xoshiro256** produces a frozen sequence for seed 42") {
    Rng rng(42);
    CHECK(rng.next_u64() == UINT64_C(0x15780b2e0c2ec716));
    CHECK(rng.next_u64() == UINT64_C(0x6104d9866d113a7e));
    CHECK(rng.next_u64() == UINT64_C(0xae17533239e499a1));
    CHECK(rng.next_u64() == UINT64_C(0xecb8ad4703b360a1));
}

TEST_CASE("split_seed derives frozen sub-stream seeds") {
    CHECK(split_seed(42, 0) == UINT64_C(0x28efe333b266f103));
    CHECK(split_seed(42, 1) == UINT64_C(0x47526757130f9f52));
    CHECK(split_seed(7, 3) == UINT64_C(0x73d33b666a1e21da));
    CHECK(split_seed(42, 0) != split_seed(42, 1));
    CHECK(split_seed(42, 0) != split_seed(43, 0));
}

TEST_CASE("identical seeds give identical streams") {
    Rng a(123456789);
    Rng b(123456789);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("next_below stays in range and covers small ranges") {
    Rng rng(7);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 2000; ++i) {
        const std::uint64_t v = rng.next_below(5);
        REQUIRE(v < 5);
        seen[v]++;
    }
    for (const int count : seen) CHECK(count > 300);
    CHECK(rng.next_below(1) == 0);
    CHECK_THROWS_AS(rng.next_below(0), DomainError);
}

TEST_CASE("next_double lies in [0, 1)") {
    Rng rng(11);
    for (int i = 0; i < 5000; ++i) {
        const double v = rng.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("next_uniform respects its bounds") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.next_uniform(-2.5, 4.0);
        REQUIRE(v >= -2.5);
        REQUIRE(v <= 4.0);
    }
}

TEST_CASE("shuffle permutes in place, deterministically") {
    std::vector<int> items(20);
    std::iota(items.begin(), items.end(), 0);
    const std::vector<int> original = items;

    Rng rng(99);
    shuffle(rng, items);
    CHECK(items != original); // 1/20! chance of a false alarm

    std::vector<int> sorted = items;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == original);

    std::vector<int> again(20);
    std::iota(again.begin(), again.end(), 0);
    Rng rng2(99);
    shuffle(rng2, again);
    CHECK(again == items);
}

TEST_CASE("standard normal draws have plausible moments") {
    Rng rng(2024);
    const int n = 20000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_standard_normal(rng);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("gamma draws match the requested mean and are positive") {
    Rng rng(31);
    const double shape = 2.0;
    const double scale = 3.0;
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_gamma(rng, shape, scale);
        REQUIRE(v > 0.0);
        sum += v;
    }
    CHECK(sum / n == doctest::Approx(shape * scale).epsilon(0.05));
    CHECK_THROWS_AS(sample_gamma(rng, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(sample_gamma(rng, 1.0, -1.0), DomainError);
}

TEST_CASE("gamma handles shape below one") {
    Rng rng(32);
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_gamma(rng, 0.5, 2.0);
        REQUIRE(v >= 0.0);
        sum += v;
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("poisson draws match the requested mean, including large rates") {
    Rng rng(77);
    for (const double mean : {0.5, 4.0, 75.0}) {
        const int n = 20000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::int64_t v = sample_poisson(rng, mean);
            REQUIRE(v >= 0);
            sum += static_cast<double>(v);
        }
        CHECK(sum / n == doctest::Approx(mean).epsilon(0.05));
    }
    CHECK(sample_poisson(rng, 0.0) == 0);
    CHECK_THROWS_AS(sample_poisson(rng, -1.0), DomainError);
}

TEST_CASE("gamma-poisson is overdispersed relative to its mean") {
    Rng rng(88);
    const double mean = 20.0;
    const double dispersion = 2.0;
    const int n = 20000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto v = static_cast<double>(sample_gamma_poisson(rng, mean, dispersion));
        sum += v;
        sq += v * v;
    }
    const double sample_mean = sum / n;
    const double sample_var = sq / n - sample_mean * sample_mean;
    CHECK(sample_mean == doctest::Approx(mean).epsilon(0.05));
    // Expected variance mean + mean^2/dispersion = 220.
    CHECK(sample_var == doctest::Approx(mean + mean * mean / dispersion).epsilon(0.15));
    CHECK(sample_var > 2.0 * sample_mean);
}
