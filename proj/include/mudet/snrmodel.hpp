#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mudet/common.hpp"
#include "mudet/rng.hpp"

namespace mudet::snrmodel {

enum class LoadClass { light, heavy };

inline const char* to_string(LoadClass c) {
    return c == LoadClass::light ? "light" : "heavy";
}

/// Asymptotic operation-count model of one detection algorithm.
/// ml: 2^K.  tm: (5/4)^K.  nd has no closed form in the source material; it
/// is modeled as a * K^p * iters with the constants recorded in every output.
struct ComplexityProfile {
    DetectorId algorithm = DetectorId::tm;
    double nd_a = 1.0;
    double nd_p = 2.0;
    double nd_iters = 3.5;  // mean neighbor-descent rounds at the K=22, N=32, 6 dB anchor
};

/// Inputs of the deterministic SNR formulas.
struct SnrModelParams {
    double C = 1.0;     // normalization factor
    double phi2 = 0.0;  // MAI variance
    int K = 1;          // active users

    void validate() const;  // C > 0, phi2 >= 0, K >= 1
};

/// Collective complexity: sum of the per-user parts.
double collective_complexity(std::span<const double> parts);

/// Evaluates the profile at K users.  Throws DomainError on K < 1 or when the
/// value exceeds the representable range.
double profile_eval(const ComplexityProfile& profile, int K);

/// log10 of profile_eval, computed without forming the (possibly huge) value.
double profile_log10_eval(const ComplexityProfile& profile, int K);

/// Upper bound 5^K - 4^K on the demodulated bits searched by the decision
/// algorithm.
double search_bound(int K);

/// gamma = aleph - C*K.  May be negative; the caller decides what that means.
double snr_linear(double aleph, double C, int K);

/// gamma_dB = 10 * phi2 * log10(aleph - C*K).  Throws DomainError when
/// aleph - C*K <= 0.
double snr_db(double aleph, double C, int K, double phi2);
double snr_db(const SnrModelParams& params, double aleph);

/// Residuals of the model's algebraic identities under gamma = aleph - C*K,
/// each normalized by the equation's operand scale.
struct IdentityResiduals {
    double inverse_load_sum;      // K/aleph = 1/C - (1/C)(gamma/aleph)
    double per_user_margin;       // aleph/K - gamma/K = C
    double snr_fraction;          // gamma/aleph = 1 - C*K/aleph
    double inverse_load_product;  // K/aleph = (1/C)(1 - gamma/aleph)
    double max() const;
};
IdentityResiduals identity_residuals(double aleph, double C, int K);

/// Uniform draw of the MAI variance phi^2 for the load class:
/// light -> [0.6, 0.9], heavy -> [0.1, 1.0].
double sample_variance(LoadClass load_class, rng::Stream& stream);

/// Inverts snr_db for phi2: target_db / (10 log10(aleph - C*K)).  Throws
/// DomainError when aleph - C*K <= 0 or the log term vanishes with a nonzero
/// target.
double calibrate_variance(double target_db, double aleph, double C, int K);

/// How phi^2 is chosen along a model curve.
struct Phi2Policy {
    enum class Kind { fixed, sampled, calibrated } kind = Kind::fixed;
    double fixed_value = 0.5;
    LoadClass load_class = LoadClass::light;  // sampled
    double target_db = 0.0;                   // calibrated anchor value
    int anchor_k = 0;                         // calibrated anchor K
};

/// One row of a model sweep.  gamma_db_defined is false where
/// aleph - C*K <= 0; such points are emitted, not dropped.
struct SnrCurvePoint {
    int K = 0;
    DetectorId algorithm = DetectorId::tm;
    double aleph = 0.0;
    double phi2 = 0.0;
    double gamma_linear = 0.0;
    double gamma_db = 0.0;
    bool gamma_db_defined = false;
};

/// Evaluates the model over K = k_begin..k_end inclusive.  The seed feeds the
/// sampled-variance substreams (kVariance, algorithm, K).
std::vector<SnrCurvePoint> snr_curve(const ComplexityProfile& profile, int k_begin,
                                     int k_end, double C, const Phi2Policy& policy,
                                     std::uint64_t seed = 1);

}  // namespace mudet::snrmodel
