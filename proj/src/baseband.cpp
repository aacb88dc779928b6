#include "mudet/baseband.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace mudet::baseband {

Vec SystemConfig::resolved_amplitudes() const {
    if (amplitudes.size() == 0) return Vec::Ones(K);
    return amplitudes;
}

void SystemConfig::validate() const {
    if (K < 1) throw ConfigError("K must be >= 1, got " + std::to_string(K));
    if (N < 1) throw ConfigError("N must be >= 1, got " + std::to_string(N));
    if (noise_sigma < 0)
        throw ConfigError("noise_sigma must be >= 0, got " + std::to_string(noise_sigma));
    if (amplitudes.size() != 0) {
        if (amplitudes.size() != K)
            throw ConfigError("amplitude vector length != K");
        if ((amplitudes.array() <= 0).any())
            throw ConfigError("amplitudes must be > 0");
    }
    if (code_kind == CodeKind::walsh_hadamard) {
        if (N < 1 || (N & (N - 1)) != 0)
            throw ConfigError("walsh-hadamard requires N a power of two, got N=" +
                              std::to_string(N));
        if (K > N)
            throw ConfigError("walsh-hadamard requires K <= N, got K=" +
                              std::to_string(K) + " N=" + std::to_string(N));
    }
}

namespace {

// Sylvester recursion, entries +-1.  Row r, column c of H_N is
// (-1)^{popcount(r & c)}.
double hadamard_entry(int r, int c) {
    return (std::popcount(static_cast<unsigned>(r & c)) & 1) ? -1.0 : 1.0;
}

}  // namespace

SpreadingCodeSet generate_codes(const SystemConfig& config) {
    config.validate();
    const double scale = 1.0 / std::sqrt(static_cast<double>(config.N));
    Mat codes(config.K, config.N);
    if (config.code_kind == CodeKind::walsh_hadamard) {
        for (int k = 0; k < config.K; ++k)
            for (int n = 0; n < config.N; ++n)
                codes(k, n) = hadamard_entry(k, n) * scale;
    } else {
        rng::Stream stream(config.seed,
                           {rng::kCodes, static_cast<std::uint64_t>(config.K),
                            static_cast<std::uint64_t>(config.N)});
        for (int k = 0; k < config.K; ++k)
            for (int n = 0; n < config.N; ++n)
                codes(k, n) = stream.next_sign() * scale;
    }
    return SpreadingCodeSet{std::move(codes), config.seed, scale};
}

CorrelationMatrix correlation_matrix(const SpreadingCodeSet& codes) {
    const int K = codes.K();
    const int N = codes.N();
    Mat R(K, K);
    if (codes.chip_scale > 0.0) {
        // Bipolar rows: the inner product is (signed chip agreement) / N,
        // computed exactly in integers.  Orthogonal rows give exactly 0 and
        // the diagonal is exactly 1.
        for (int i = 0; i < K; ++i) {
            for (int j = i; j < K; ++j) {
                std::int64_t count = 0;
                for (int n = 0; n < N; ++n)
                    count += (codes.codes(i, n) > 0) == (codes.codes(j, n) > 0) ? 1 : -1;
                R(i, j) = R(j, i) = double(count) / double(N);
            }
        }
    } else {
        for (int i = 0; i < K; ++i) {
            for (int j = i; j < K; ++j) {
                const double v = codes.codes.row(i).dot(codes.codes.row(j));
                // The Gram of unit vectors lies in [-1, 1]; shave float excess.
                R(i, j) = R(j, i) = std::clamp(v, -1.0, 1.0);
            }
        }
    }
    return CorrelationMatrix{std::move(R)};
}

Vec transmit_chips(const BitVector& b, const SystemConfig& config,
                   const SpreadingCodeSet& codes) {
    if (b.size() != codes.codes.rows())
        throw ContractError("transmit_chips: bit vector length " +
                            std::to_string(b.size()) + " != K " +
                            std::to_string(codes.codes.rows()));
    if (!is_bipolar(b))
        throw ContractError("transmit_chips: bits must be exactly +-1");
    Vec a = config.resolved_amplitudes();
    if (a.size() != b.size())
        throw ContractError("transmit_chips: amplitude length != K");
    return codes.codes.transpose() * (a.cwiseProduct(b));
}

Vec add_awgn(const Vec& chips, double noise_sigma, rng::Stream& stream) {
    if (noise_sigma < 0)
        throw ConfigError("add_awgn: noise_sigma must be >= 0");
    if (noise_sigma == 0.0) return chips;
    Vec out(chips.size());
    for (Eigen::Index i = 0; i < chips.size(); ++i)
        out[i] = chips[i] + noise_sigma * stream.next_gaussian();
    return out;
}

ReceivedVector matched_filter_bank(const Vec& chips, const SpreadingCodeSet& codes,
                                   std::int64_t epoch) {
    if (chips.size() != codes.codes.cols())
        throw ContractError("matched_filter_bank: chip length != N");
    return ReceivedVector{codes.codes * chips, epoch};
}

std::vector<BitVector> insert_energy_bits(const std::vector<BitVector>& bitstream,
                                          int period) {
    if (period < 1)
        throw ConfigError("insert_energy_bits: period must be >= 1, got " +
                          std::to_string(period));
    std::vector<BitVector> out;
    out.reserve(bitstream.size() + bitstream.size() / period);
    int since_pilot = 0;
    for (const BitVector& b : bitstream) {
        out.push_back(b);
        if (++since_pilot == period) {
            out.push_back(BitVector::Ones(b.size()));
            since_pilot = 0;
        }
    }
    return out;
}

}  // namespace mudet::baseband
