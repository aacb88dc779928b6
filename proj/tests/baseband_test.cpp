#include <doctest.h>

#include <cmath>

#include "mudet/baseband.hpp"

using namespace mudet;
using namespace mudet::baseband;

namespace {

SystemConfig make_config(int K, int N, CodeKind kind = CodeKind::pseudo_random,
                         std::uint64_t seed = 42) {
    SystemConfig c;
    c.K = K;
    c.N = N;
    c.code_kind = kind;
    c.seed = seed;
    return c;
}

BitVector bits(std::initializer_list<double> v) {
    BitVector b(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) b[i++] = x;
    return b;
}

}  // namespace

TEST_SUITE_BEGIN("baseband");

TEST_CASE("walsh order-2 codes are the forced Hadamard pair") {
    const auto set = generate_codes(make_config(2, 2, CodeKind::walsh_hadamard));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(set.codes(0, 0) == doctest::Approx(r).epsilon(1e-15));
    CHECK(set.codes(0, 1) == doctest::Approx(r).epsilon(1e-15));
    CHECK(set.codes(1, 0) == doctest::Approx(r).epsilon(1e-15));
    CHECK(set.codes(1, 1) == doctest::Approx(-r).epsilon(1e-15));
    CHECK(set.codes.row(0).dot(set.codes.row(1)) == 0.0);
}

TEST_CASE("single pseudo-random row has unit norm") {
    const auto set = generate_codes(make_config(1, 13));
    CHECK(std::abs(set.codes.row(0).squaredNorm() - 1.0) < 1e-12);
}

TEST_CASE("code generation is deterministic") {
    const auto a = generate_codes(make_config(8, 16));
    const auto b = generate_codes(make_config(8, 16));
    CHECK(a.codes == b.codes);
    const auto c = generate_codes(make_config(8, 16, CodeKind::pseudo_random, 43));
    CHECK(a.codes != c.codes);
}

TEST_CASE("all rows are unit energy") {
    const auto set = generate_codes(make_config(12, 64));
    for (int k = 0; k < set.K(); ++k)
        CHECK(std::abs(set.codes.row(k).squaredNorm() - 1.0) < 1e-12);
}

TEST_CASE("walsh requires power-of-two N and K <= N") {
    CHECK_THROWS_AS(generate_codes(make_config(2, 3, CodeKind::walsh_hadamard)),
                    ConfigError);
    CHECK_THROWS_AS(generate_codes(make_config(5, 4, CodeKind::walsh_hadamard)),
                    ConfigError);
}

TEST_CASE("config invariants rejected") {
    CHECK_THROWS_AS(generate_codes(make_config(0, 4)), ConfigError);
    CHECK_THROWS_AS(generate_codes(make_config(4, 0)), ConfigError);
    auto bad = make_config(2, 4);
    bad.noise_sigma = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("orthogonal walsh codes give the identity correlation matrix") {
    const auto set = generate_codes(make_config(8, 8, CodeKind::walsh_hadamard));
    const auto corr = correlation_matrix(set);
    CHECK(corr.R == Mat::Identity(8, 8));
}

TEST_CASE("hand-built two-code correlation") {
    SpreadingCodeSet set;
    set.codes.resize(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    set.codes << r, r, 1.0, 0.0;
    const auto corr = correlation_matrix(set);
    CHECK(corr.R(0, 1) == doctest::Approx(r).epsilon(1e-12));
    CHECK(corr.R(1, 0) == corr.R(0, 1));
    CHECK(corr.R(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlation matrix is exactly symmetric") {
    const auto set = generate_codes(make_config(7, 32));
    const auto corr = correlation_matrix(set);
    CHECK(corr.R == corr.R.transpose().eval());
    for (int i = 0; i < 7; ++i) CHECK(std::abs(corr.R(i, i) - 1.0) < 1e-12);
    CHECK((corr.R.array().abs() <= 1.0 + 1e-12).all());
}

TEST_CASE("single-user chips equal the code row") {
    const auto config = make_config(1, 8);
    const auto set = generate_codes(config);
    const Vec chips = transmit_chips(bits({+1}), config, set);
    CHECK(chips == set.codes.row(0).transpose().eval());
}

TEST_CASE("orthogonal two-user superposition projects back to the bits") {
    const auto config = make_config(2, 4, CodeKind::walsh_hadamard);
    const auto set = generate_codes(config);
    const Vec chips = transmit_chips(bits({+1, -1}), config, set);
    const auto rv = matched_filter_bank(chips, set);
    CHECK(rv.y[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rv.y[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("negated bits negate the chip vector exactly") {
    const auto config = make_config(5, 16);
    const auto set = generate_codes(config);
    const Vec plus = transmit_chips(BitVector::Ones(5), config, set);
    const Vec minus = transmit_chips((-BitVector::Ones(5)).eval(), config, set);
    CHECK(minus == (-plus).eval());
}

TEST_CASE("transmit rejects wrong lengths and non-bipolar bits") {
    const auto config = make_config(3, 8);
    const auto set = generate_codes(config);
    CHECK_THROWS_AS(transmit_chips(BitVector::Ones(2), config, set), ContractError);
    BitVector b = BitVector::Ones(3);
    b[1] = 0.5;
    CHECK_THROWS_AS(transmit_chips(b, config, set), ContractError);
}

TEST_CASE("zero noise is the exact identity") {
    rng::Stream stream(1, {rng::kTest, 3});
    Vec chips(4);
    chips << 0.25, -1.0, 3.5, 0.0;
    CHECK(add_awgn(chips, 0.0, stream) == chips);
}

TEST_CASE("awgn moments at sigma=1 over 1e5 chips") {
    rng::Stream stream(7, {rng::kTest, 4});
    const int n = 100000;
    const Vec noisy = add_awgn(Vec::Zero(n), 1.0, stream);
    const double mean = noisy.mean();
    const double var = noisy.squaredNorm() / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("awgn determinism per (seed, stream)") {
    rng::Stream a(5, {rng::kNoise, 1, 2});
    rng::Stream b(5, {rng::kNoise, 1, 2});
    const Vec chips = Vec::LinSpaced(32, -1.0, 1.0);
    CHECK(add_awgn(chips, 0.7, a) == add_awgn(chips, 0.7, b));
}

TEST_CASE("negative sigma rejected") {
    rng::Stream stream(1, {rng::kTest});
    CHECK_THROWS_AS(add_awgn(Vec::Zero(4), -0.1, stream), ConfigError);
}

TEST_CASE("matched filter: K=2 rho=0.5 without noise gives y = Rb") {
    SystemConfig config = make_config(2, 2);
    SpreadingCodeSet set;
    set.codes.resize(2, 2);
    set.codes << 1.0, 0.0, 0.5, std::sqrt(0.75);
    const Vec chips = transmit_chips(bits({+1, +1}), config, set);
    const auto rv = matched_filter_bank(chips, set);
    CHECK(rv.y[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(rv.y[1] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("matched filter of zero chips is zero") {
    const auto set = generate_codes(make_config(3, 8));
    const auto rv = matched_filter_bank(Vec::Zero(8), set);
    CHECK(rv.y == Vec::Zero(3));
}

TEST_CASE("property: matched filter equals R*A*b on random instances") {
    for (int trial = 0; trial < 100; ++trial) {
        rng::Stream s(1000 + trial, {rng::kTest, 5});
        const int K = 1 + int(s.next_u64() % 8);
        const int N = K + int(s.next_u64() % (33 - K));
        SystemConfig config = make_config(K, N, CodeKind::pseudo_random, 7 + trial);
        config.amplitudes = Vec::Ones(K);
        for (int k = 0; k < K; ++k)
            config.amplitudes[k] = 0.5 + s.next_double();
        const auto set = generate_codes(config);
        const auto corr = correlation_matrix(set);
        BitVector b(K);
        for (int k = 0; k < K; ++k) b[k] = s.next_sign();
        const auto rv = matched_filter_bank(transmit_chips(b, config, set), set);
        const Vec expected = corr.R * config.amplitudes.cwiseProduct(b);
        CHECK((rv.y - expected).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("noise covariance of y - RAb is sigma^2 R") {
    const int K = 4, N = 16, epochs = 100000;
    const double sigma = 0.8;
    SystemConfig config = make_config(K, N);
    config.noise_sigma = sigma;
    const auto set = generate_codes(config);
    const auto corr = correlation_matrix(set);
    const BitVector b = BitVector::Ones(K);
    const Vec clean = transmit_chips(b, config, set);
    const Vec mean_y = corr.R * b;
    Mat cov = Mat::Zero(K, K);
    for (int e = 0; e < epochs; ++e) {
        rng::Stream stream(99, {rng::kNoise, std::uint64_t(K), std::uint64_t(e)});
        const auto rv = matched_filter_bank(add_awgn(clean, sigma, stream), set);
        const Vec eta = rv.y - mean_y;
        cov += eta * eta.transpose();
    }
    cov /= epochs;
    const Mat expected = sigma * sigma * corr.R;
    for (int i = 0; i < K; ++i) {
        CHECK(std::abs(cov(i, i) - expected(i, i)) / expected(i, i) < 0.05);
        for (int j = 0; j < K; ++j)
            if (i != j) CHECK(std::abs(cov(i, j) - expected(i, j)) < 0.05);
    }
}

TEST_CASE("pilot insertion: period 1 alternates data and pilots") {
    std::vector<BitVector> data = {bits({+1, -1}), bits({-1, -1})};
    const auto out = insert_energy_bits(data, 1);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == data[0]);
    CHECK(out[1] == BitVector::Ones(2));
    CHECK(out[2] == data[1]);
    CHECK(out[3] == BitVector::Ones(2));
}

TEST_CASE("pilot insertion boundary cases") {
    std::vector<BitVector> data = {bits({+1}), bits({-1}), bits({+1})};
    SUBCASE("period equal to length appends exactly one pilot") {
        const auto out = insert_energy_bits(data, 3);
        REQUIRE(out.size() == 4);
        CHECK(out[3] == BitVector::Ones(1));
    }
    SUBCASE("period longer than input appends nothing") {
        const auto out = insert_energy_bits(data, 4);
        CHECK(out.size() == 3);
    }
    SUBCASE("period below 1 rejected") {
        CHECK_THROWS_AS(insert_energy_bits(data, 0), ConfigError);
    }
}

TEST_CASE("pilot insertion round-trips") {
    rng::Stream s(11, {rng::kTest, 6});
    std::vector<BitVector> data;
    for (int e = 0; e < 17; ++e) {
        BitVector b(3);
        for (int k = 0; k < 3; ++k) b[k] = s.next_sign();
        data.push_back(b);
    }
    for (int period : {1, 2, 5, 17}) {
        const auto out = insert_energy_bits(data, period);
        CHECK(out.size() == data.size() + data.size() / period);
        std::vector<BitVector> recovered;
        for (std::size_t i = 0; i < out.size(); ++i)
            if ((i + 1) % (period + 1) != 0) recovered.push_back(out[i]);
        REQUIRE(recovered.size() == data.size());
        for (std::size_t i = 0; i < data.size(); ++i) CHECK(recovered[i] == data[i]);
    }
}

TEST_SUITE_END();
