#include "mudet/snrmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mudet::snrmodel {

namespace {

/// base^K by binary exponentiation; exact for the small-K integer-valued
/// cases the contracts pin down.
double pow_int(double base, int K) {
    double result = 1.0;
    double acc = base;
    for (int e = K; e > 0; e >>= 1) {
        if (e & 1) result *= acc;
        if (e > 1) acc *= acc;
    }
    return result;
}

double log10_of(DetectorId algorithm) {
    switch (algorithm) {
        case DetectorId::ml: return std::log10(2.0);
        case DetectorId::tm: return std::log10(1.25);
        default: return 0.0;
    }
}

}  // namespace

void SnrModelParams::validate() const {
    if (!(C > 0.0)) throw DomainError("model params: C must be > 0");
    if (!(phi2 >= 0.0)) throw DomainError("model params: phi2 must be >= 0");
    if (K < 1) throw DomainError("model params: K must be >= 1");
}

double collective_complexity(std::span<const double> parts) {
    double total = 0.0;
    for (double p : parts) {
        if (p < 0.0)
            throw DomainError("collective_complexity: negative part " + std::to_string(p));
        total += p;
    }
    return total;
}

double profile_eval(const ComplexityProfile& profile, int K) {
    if (K < 1) throw DomainError("profile_eval: K must be >= 1, got " + std::to_string(K));
    double value = 0.0;
    switch (profile.algorithm) {
        case DetectorId::ml:
            value = pow_int(2.0, K);
            break;
        case DetectorId::tm:
            value = pow_int(1.25, K);
            break;
        case DetectorId::nd:
            value = profile.nd_a * std::pow(static_cast<double>(K), profile.nd_p) *
                    profile.nd_iters;
            break;
        default:
            throw DomainError("profile_eval: no complexity profile for detector " +
                              std::string(to_string(profile.algorithm)));
    }
    if (!std::isfinite(value))
        throw DomainError("profile_eval: overflow at K=" + std::to_string(K));
    return value;
}

double profile_log10_eval(const ComplexityProfile& profile, int K) {
    if (K < 1) throw DomainError("profile_log10_eval: K must be >= 1");
    if (profile.algorithm == DetectorId::nd)
        return std::log10(profile.nd_a) + profile.nd_p * std::log10(double(K)) +
               std::log10(profile.nd_iters);
    return K * log10_of(profile.algorithm);
}

double search_bound(int K) {
    if (K < 1) throw DomainError("search_bound: K must be >= 1");
    const double value = pow_int(5.0, K) - pow_int(4.0, K);
    if (!std::isfinite(value))
        throw DomainError("search_bound: overflow at K=" + std::to_string(K));
    return value;
}

double snr_linear(double aleph, double C, int K) { return aleph - C * K; }

double snr_db(const SnrModelParams& params, double aleph) {
    params.validate();
    return snr_db(aleph, params.C, params.K, params.phi2);
}

double snr_db(double aleph, double C, int K, double phi2) {
    const double gamma = snr_linear(aleph, C, K);
    if (!(gamma > 0.0))
        throw DomainError("SNR undefined: complexity budget below C*K (aleph=" +
                          std::to_string(aleph) + ", C*K=" + std::to_string(C * K) + ")");
    return 10.0 * phi2 * std::log10(gamma);
}

namespace {
// Residual of lhs = rhs relative to the equation's operand scale: the
// difference of two O(scale) terms carries O(eps * scale) rounding, so that
// is the scale the identity can be checked at.
double rel_residual(double lhs, double rhs, double scale) {
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs), scale});
}
}  // namespace

double IdentityResiduals::max() const {
    return std::max({inverse_load_sum, per_user_margin, snr_fraction,
                     inverse_load_product});
}

IdentityResiduals identity_residuals(double aleph, double C, int K) {
    if (!(aleph > 0.0) || !(C > 0.0) || K < 1)
        throw DomainError("identity_residuals: need aleph > 0, C > 0, K >= 1");
    const double gamma = snr_linear(aleph, C, K);
    IdentityResiduals r;
    r.inverse_load_sum =
        rel_residual(K / aleph, 1.0 / C - (1.0 / C) * (gamma / aleph), 1.0 / C);
    r.per_user_margin = rel_residual(aleph / K - gamma / K, C, aleph / K);
    r.snr_fraction = rel_residual(gamma / aleph, 1.0 - C * K / aleph, 1.0);
    r.inverse_load_product =
        rel_residual(K / aleph, (1.0 / C) * (1.0 - gamma / aleph), 1.0 / C);
    return r;
}

double sample_variance(LoadClass load_class, rng::Stream& stream) {
    return load_class == LoadClass::light ? stream.next_uniform(0.6, 0.9)
                                          : stream.next_uniform(0.1, 1.0);
}

double calibrate_variance(double target_db, double aleph, double C, int K) {
    const double gamma = snr_linear(aleph, C, K);
    if (!(gamma > 0.0))
        throw DomainError("calibrate_variance: aleph - C*K must be > 0");
    const double denom = 10.0 * std::log10(gamma);
    if (denom == 0.0) {
        if (target_db == 0.0) return 0.0;  // any phi2 works; pick the trivial one
        throw DomainError("calibrate_variance: log term is zero, target unreachable");
    }
    return target_db / denom;
}

std::vector<SnrCurvePoint> snr_curve(const ComplexityProfile& profile, int k_begin,
                                     int k_end, double C, const Phi2Policy& policy,
                                     std::uint64_t seed) {
    if (k_end < k_begin)
        throw ContractError("snr_curve: empty K range");
    if (!(C > 0.0))
        throw DomainError("snr_curve: C must be > 0");

    double calibrated_phi2 = 0.0;
    if (policy.kind == Phi2Policy::Kind::calibrated)
        calibrated_phi2 = calibrate_variance(
            policy.target_db, profile_eval(profile, policy.anchor_k), C, policy.anchor_k);

    std::vector<SnrCurvePoint> points;
    points.reserve(k_end - k_begin + 1);
    for (int K = k_begin; K <= k_end; ++K) {
        SnrCurvePoint p;
        p.K = K;
        p.algorithm = profile.algorithm;
        p.aleph = profile_eval(profile, K);
        switch (policy.kind) {
            case Phi2Policy::Kind::fixed:
                p.phi2 = policy.fixed_value;
                break;
            case Phi2Policy::Kind::sampled: {
                rng::Stream stream(seed, {rng::kVariance,
                                          static_cast<std::uint64_t>(profile.algorithm),
                                          static_cast<std::uint64_t>(K)});
                p.phi2 = sample_variance(policy.load_class, stream);
                break;
            }
            case Phi2Policy::Kind::calibrated:
                p.phi2 = calibrated_phi2;
                break;
        }
        p.gamma_linear = snr_linear(p.aleph, C, K);
        if (p.gamma_linear > 0.0) {
            p.gamma_db_defined = true;
            if (K > 500) {
                // Log-space evaluation keeps accuracy once aleph dwarfs C*K.
                const double log10_aleph = profile_log10_eval(profile, K);
                const double ratio = std::exp((std::log(C * K)) - log10_aleph * std::log(10.0));
                p.gamma_db = 10.0 * p.phi2 *
                             (log10_aleph + std::log1p(-ratio) / std::log(10.0));
            } else {
                p.gamma_db = snr_db(p.aleph, C, K, p.phi2);
            }
        }
        points.push_back(p);
    }
    return points;
}

}  // namespace mudet::snrmodel
