#pragma once

#include <cstdint>
#include <vector>

#include "mudet/common.hpp"
#include "mudet/rng.hpp"

namespace mudet::baseband {

enum class CodeKind { pseudo_random, walsh_hadamard };

/// Uplink configuration for one synchronous DS-CDMA cell.
struct SystemConfig {
    int K = 1;                       // active users
    int N = 32;                      // chips per bit (spreading gain)
    Vec amplitudes;                  // per-user amplitude sqrt(W_k); empty = all 1
    double noise_sigma = 0.0;        // AWGN std dev per chip
    CodeKind code_kind = CodeKind::pseudo_random;
    std::uint64_t seed = 1;

    /// Amplitude vector with the equal-power default applied.
    Vec resolved_amplitudes() const;

    /// Throws ConfigError when an invariant is broken.
    void validate() const;
};

/// K unit-energy signature sequences, one row per user.
struct SpreadingCodeSet {
    Mat codes;  // K x N, rows unit-energy
    std::uint64_t seed = 0;
    // Chip magnitude when every entry is +-chip_scale (generated sets);
    // 0 marks an unstructured, hand-built set.
    double chip_scale = 0.0;

    int K() const { return static_cast<int>(codes.rows()); }
    int N() const { return static_cast<int>(codes.cols()); }
};

/// Gram matrix of the signature set.
struct CorrelationMatrix {
    Mat R;  // K x K, symmetric, unit diagonal
};

/// Matched-filter bank output for one symbol epoch.
struct ReceivedVector {
    Vec y;
    std::int64_t epoch = 0;
};

/// Deterministic signature generation.  pseudo_random rows are +-1/sqrt(N)
/// chips from the (seed, kCodes, K, N) substream; walsh_hadamard rows are the
/// first K rows of the order-N Sylvester-Hadamard matrix scaled by 1/sqrt(N).
SpreadingCodeSet generate_codes(const SystemConfig& config);

CorrelationMatrix correlation_matrix(const SpreadingCodeSet& codes);

/// Synchronous superposition of one symbol epoch:
/// chips = sum_k amplitude_k * b_k * codes[k].
Vec transmit_chips(const BitVector& b, const SystemConfig& config,
                   const SpreadingCodeSet& codes);

/// Adds N(0, sigma^2) noise per chip from the given substream.
Vec add_awgn(const Vec& chips, double noise_sigma, rng::Stream& stream);

ReceivedVector matched_filter_bank(const Vec& chips, const SpreadingCodeSet& codes,
                                   std::int64_t epoch = 0);

/// Inserts an all-(+1) pilot vector after every `period` data epochs.
std::vector<BitVector> insert_energy_bits(const std::vector<BitVector>& bitstream,
                                          int period);

}  // namespace mudet::baseband
