#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mudet/baseband.hpp"
#include "mudet/detect.hpp"
#include "mudet/snrmodel.hpp"

namespace mudet::mc {

using snrmodel::LoadClass;

/// One sweep's worth of scenario settings.  K ranges default to the load
/// class: light 2..50, heavy 2..100.
struct ScenarioSpec {
    LoadClass load_class = LoadClass::light;
    int k_begin = 2;
    int k_end = 50;
    int N = 32;
    std::vector<double> ebn0_db = {6.0};
    std::int64_t symbols_per_point = 10000;
    std::vector<DetectorId> detectors = {DetectorId::conv, DetectorId::zf, DetectorId::ml,
                                         DetectorId::nd, DetectorId::tm};
    std::uint64_t seed = 1;
    detect::TmParams tm_params;
    std::optional<int> pilot_period;
    int nd_max_iters = 1000;
    int k_max = detect::kDefaultKmax;
    int workers = 1;

    void validate() const;
    static ScenarioSpec for_load_class(LoadClass c);
};

/// Aggregated measurements for one (K, detector, Eb/N0) point.
struct MonteCarloStats {
    int K = 0;
    DetectorId detector = DetectorId::conv;
    double ebn0_db = 0.0;
    double ber = 0.0;
    double ber_ci95 = 0.0;  // half-width, normal approximation
    bool low_confidence = false;  // fewer than 20 observed errors
    std::optional<double> empirical_snr_db;
    double mean_metric_evals = 0.0;
    double mean_ambiguous_count = 0.0;
    double mean_nd_flips = 0.0;
    std::int64_t symbols = 0;
    std::int64_t bit_errors = 0;
    std::uint64_t seed = 0;
    bool skipped = false;  // ml point above k_max, left unsimulated
};

/// Eb/N0 (dB) to per-chip noise standard deviation for unit-energy codes and
/// amplitude A: Eb = A^2, N0 = 2 sigma^2, so sigma = A / sqrt(2 * 10^(dB/10)).
double noise_sigma_for_ebn0(double ebn0_db, double amplitude = 1.0);

/// Single-user BPSK error-rate oracle Q(sqrt(2 * 10^(ebn0_db/10))).
double theoretical_ber_single_user(double ebn0_db);

/// Per-user decomposition of matched-filter outputs into desired, MAI, and
/// noise power.  SNR_k = desired_k / (mai_k + noise_k), epoch-averaged;
/// the report averages the linear per-user SNRs before converting to dB.
struct SnrDecomposition {
    Vec desired_power;  // per user
    Vec mai_power;
    Vec noise_power;
    std::optional<double> mean_snr_db;  // absent when the denominator is 0
    std::optional<double> user_snr_db(int k) const;
};

SnrDecomposition empirical_snr(const std::vector<Vec>& y_samples,
                               const baseband::SpreadingCodeSet& codes,
                               const Vec& amplitudes,
                               const std::vector<BitVector>& b_truth);

/// Simulates one (K, detector, Eb/N0) point end to end: bits -> chips ->
/// AWGN -> matched filter -> detector.  Deterministic for fixed (seed, spec,
/// K, detector, ebn0) and independent of the worker count.
MonteCarloStats run_point(const ScenarioSpec& spec, int K, DetectorId detector,
                          double ebn0_db);

/// One stats row per (K, detector, ebn0), ordered by (K, detector, ebn0).
/// ml points with K > k_max come back with skipped = true.
std::vector<MonteCarloStats> sweep_scenario(const ScenarioSpec& spec);

/// Figure-reproduction datasets (analytic model curves).
struct FigureSpec {
    int fig_id;
    int k_max;
    LoadClass load_class;
    std::map<DetectorId, double> anchors_db;  // reference SNR values at k_max
};

/// Figure id -> (K ceiling, load class, reference anchor values).
FigureSpec figure_spec(int fig_id);

struct CalibrationInfo {
    DetectorId algorithm;
    double phi2;
    double target_db;
    int anchor_k;
    bool anchor_from_fallback;  // no quote for this figure; fig-3 anchor reused
    bool inside_stated_range;   // phi2 within the load class's variance range
};

struct FigureDataset {
    int fig_id = 0;
    LoadClass load_class = LoadClass::light;
    std::vector<snrmodel::SnrCurvePoint> points;  // tm, nd, ml curves
    std::vector<CalibrationInfo> calibrations;    // calibrated policy only
};

FigureDataset reproduce_figure(int fig_id, const snrmodel::Phi2Policy& policy,
                               const snrmodel::ComplexityProfile& nd_profile,
                               double C = 1.0, std::uint64_t seed = 1);

}  // namespace mudet::mc
