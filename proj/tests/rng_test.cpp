#include <doctest.h>

#include <cmath>
#include <vector>

#include "mudet/rng.hpp"

using mudet::rng::Stream;

TEST_SUITE_BEGIN("rng");

TEST_CASE("identical (seed, path) gives identical sequences") {
    Stream a(42, {mudet::rng::kNoise, 7, 123});
    Stream b(42, {mudet::rng::kNoise, 7, 123});
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different path components decorrelate streams") {
    Stream a(42, {mudet::rng::kNoise, 7, 123});
    Stream b(42, {mudet::rng::kNoise, 7, 124});
    Stream c(42, {mudet::rng::kBits, 7, 123});
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.next_u64();
        equal_ab += va == b.next_u64();
        equal_ac += va == c.next_u64();
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
}

TEST_CASE("uniform doubles live in [0,1)") {
    Stream s(7, {mudet::rng::kTest});
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("gaussian moments at 1e5 samples") {
    Stream s(123, {mudet::rng::kTest, 1});
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next_gaussian();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("signs are fair") {
    Stream s(99, {mudet::rng::kTest, 2});
    int pos = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) pos += s.next_sign() > 0;
    CHECK(std::abs(pos - n / 2) < 4 * std::sqrt(n / 4.0));
}

TEST_SUITE_END();
