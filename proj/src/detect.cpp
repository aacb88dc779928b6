#include "mudet/detect.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

namespace mudet::detect {

namespace {

BitVector coarse_signs(const Vec& y) {
    BitVector b(y.size());
    for (Eigen::Index k = 0; k < y.size(); ++k) b[k] = sign_pos(y[k]);
    return b;
}

bool lex_less(const BitVector& a, const BitVector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

/// d = Ay and W = ARA for diagonal amplitude matrix A.
void likelihood_terms(const Vec& y, const Mat& R, const Vec& a, Vec& d, Mat& W) {
    d = a.cwiseProduct(y);
    W = R.cwiseProduct(a * a.transpose());
}

// Exact sign of a sum of doubles via a nonoverlapping expansion
// (Shewchuk-style grow-expansion with zero elimination).  Every TwoSum is
// exact, so the expansion always carries the true sum; the sign of the
// largest component is the sign of the sum.
void grow_expansion(std::vector<double>& e, double term) {
    double q = term;
    std::size_t out = 0;
    for (double ei : e) {
        const double s = q + ei;
        const double bv = s - q;
        const double av = s - bv;
        const double round = (q - av) + (ei - bv);
        if (round != 0.0) e[out++] = round;
        q = s;
    }
    e.resize(out);
    if (q != 0.0) e.push_back(q);
}

/// Exact sign of Omega(b1) - Omega(b2) for the metric 2 b'd - b'Wb.
/// The difference is a sum of exactly representable terms: 2 d_r (b1_r-b2_r)
/// and -W_rc (b1_r b1_c - b2_r b2_c), with both coefficients in {-2, 0, +2}.
int compare_omega_exact(const Vec& d, const Mat& W, const BitVector& b1,
                        const BitVector& b2) {
    const int n = static_cast<int>(d.size());
    std::vector<double> expansion;
    for (int r = 0; r < n; ++r) {
        const double coeff = b1[r] - b2[r];
        if (coeff != 0.0) grow_expansion(expansion, 2.0 * d[r] * coeff);
        for (int c = 0; c < n; ++c) {
            const double qc = b1[r] * b1[c] - b2[r] * b2[c];
            if (qc != 0.0) grow_expansion(expansion, -W(r, c) * qc);
        }
    }
    if (expansion.empty()) return 0;
    const double lead = expansion.back();
    return lead > 0.0 ? 1 : -1;
}

/// Exhaustive argmax of omega(s) = 2 s'd - s'Ws over s in {-1,+1}^n via a
/// Gray-code walk; one metric evaluation is charged per candidate.  The
/// running value only screens: any candidate within the drift band of the
/// leader is settled by the exact comparator, so ties (duplicate signatures
/// produce true ones) resolve to the lexicographically smallest candidate
/// regardless of rounding.  Shared by detect_ml and detect_tm's exhaustive
/// refinement so the two agree bit for bit on identical subproblems.
BitVector exhaustive_argmax(const Vec& d, const Mat& W, std::int64_t& metric_evals) {
    const int n = static_cast<int>(d.size());
    if (n > 62) throw ComplexityGuard("exhaustive search over " + std::to_string(n) +
                                      " coordinates exceeds the 62-bit cap");
    BitVector s = -BitVector::Ones(n);
    if (n == 0) {
        metric_evals = 0;
        return s;
    }
    Vec g = W * s;
    double omega = 2.0 * d.dot(s) - s.dot(g);
    BitVector best = s;
    double best_screen = omega;
    metric_evals = 1;
    // Running-value drift stays far below this for n <= 62 (hence the
    // 2^(n-26) widening); candidates outside the band cannot beat the leader.
    const double band_scale = 1e-6 * std::max(1.0, std::ldexp(1.0, std::max(0, n - 26)));
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t i = 1; i < total; ++i) {
        const int j = std::countr_zero(i);
        const double sj = -s[j];
        omega += 4.0 * sj * (d[j] - g[j]) - 4.0 * W(j, j);
        s[j] = sj;
        g += (2.0 * sj) * W.col(j);
        ++metric_evals;
        if (omega >= best_screen - band_scale * (1.0 + std::abs(best_screen))) {
            const int cmp = compare_omega_exact(d, W, s, best);
            if (cmp > 0 || (cmp == 0 && lex_less(s, best))) {
                best_screen = omega;
                best = s;
            }
        }
    }
    return best;
}

/// Steepest-ascent single-bit flips of omega(s) = 2 s'd - s'Ws, restricted to
/// start and subproblem already expressed on the free coordinates.  Stops at
/// a local maximum, after max_iters rounds, or when eval_budget would be
/// exceeded.  Returns accepted flips; charges one evaluation per inspected
/// candidate plus one for the start.
BitVector steepest_ascent(const Vec& d, const Mat& W, BitVector s, int max_iters,
                          std::int64_t eval_budget, std::int64_t& metric_evals,
                          std::int64_t& flips) {
    const int n = static_cast<int>(d.size());
    Vec g = W * s;
    metric_evals = 1;
    flips = 0;
    for (int round = 0; round < max_iters; ++round) {
        if (metric_evals + n > eval_budget) break;
        int best_j = -1;
        double best_delta = 0.0;
        for (int j = 0; j < n; ++j) {
            const double delta = 4.0 * (-s[j]) * (d[j] - g[j]) - 4.0 * W(j, j);
            ++metric_evals;
            if (delta > best_delta) {  // strict: lowest index wins ties
                best_delta = delta;
                best_j = j;
            }
        }
        if (best_j < 0) break;
        const double sj = -s[best_j];
        s[best_j] = sj;
        g += (2.0 * sj) * W.col(best_j);
        ++flips;
    }
    return s;
}

}  // namespace

void TmParams::validate(int K) const {
    if (!(tau >= 0.0))
        throw ConfigError("tm: tau must be >= 0");
    if (s_max < 0)
        throw ConfigError("tm: s_max must be >= 0");
    (void)K;  // s_max above K just means every subset refines exhaustively
}

std::size_t TmCache::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto fold = [&h](std::uint64_t v) {
        h = (h ^ v) * 0x100000001b3ull;
    };
    for (int i : k.subset) fold(static_cast<std::uint64_t>(i));
    for (double s : k.coarse_signs) fold(s > 0 ? 1 : 2);
    for (std::int64_t q : k.quantized) fold(static_cast<std::uint64_t>(q));
    return static_cast<std::size_t>(h);
}

bool TmCache::lookup(const Key& key, const Vec& exact_obs, Vec& resolved_out) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = table_.find(key);
    if (it == table_.end()) return false;
    for (const Entry& e : it->second) {
        if (e.exact_obs.size() == exact_obs.size() && e.exact_obs == exact_obs) {
            resolved_out = e.resolved;
            return true;
        }
    }
    return false;
}

void TmCache::store(const Key& key, Entry entry) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& bucket = table_[key];
    for (const Entry& e : bucket) {
        if (e.exact_obs.size() == entry.exact_obs.size() &&
            e.exact_obs == entry.exact_obs)
            return;  // already resolved by a concurrent worker
    }
    bucket.push_back(std::move(entry));
}

std::size_t TmCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t n = 0;
    for (const auto& [key, bucket] : table_) n += bucket.size();
    return n;
}

DetectorOutcome detect_conventional(const ReceivedVector& y) {
    DetectorOutcome out;
    out.b_hat = coarse_signs(y.y);
    out.detector = DetectorId::conv;
    return out;
}

DetectorOutcome detect_decorrelator(const ReceivedVector& y, const CorrelationMatrix& R,
                                    double rcond_min) {
    if (R.R.rows() != R.R.cols() || R.R.rows() != y.y.size())
        throw ContractError("decorrelator: dimension mismatch");
    Eigen::PartialPivLU<Mat> lu(R.R);
    const double rcond = lu.rcond();
    if (!(rcond >= rcond_min)) {
        char msg[128];
        std::snprintf(msg, sizeof msg,
                      "correlation matrix is singular or ill-conditioned: "
                      "rcond estimate %.3e below %.3e",
                      rcond, rcond_min);
        throw SingularCorrelation(msg, rcond);
    }
    DetectorOutcome out;
    out.b_hat = coarse_signs(lu.solve(y.y));
    out.detector = DetectorId::zf;
    return out;
}

double ml_metric(const BitVector& b, const ReceivedVector& y, const CorrelationMatrix& R,
                 const Vec& amplitudes) {
    if (b.size() != y.y.size() || R.R.rows() != b.size() || amplitudes.size() != b.size())
        throw ContractError("ml_metric: dimension mismatch");
    const Vec w = amplitudes.cwiseProduct(b);
    return 2.0 * w.dot(y.y) - w.dot(R.R * w);
}

DetectorOutcome detect_ml(const ReceivedVector& y, const CorrelationMatrix& R,
                          const Vec& amplitudes, int k_max) {
    const int K = static_cast<int>(y.y.size());
    if (K > k_max)
        throw ComplexityGuard("ml: K=" + std::to_string(K) + " exceeds k_max=" +
                              std::to_string(k_max));
    Vec d;
    Mat W;
    likelihood_terms(y.y, R.R, amplitudes, d, W);
    DetectorOutcome out;
    out.b_hat = exhaustive_argmax(d, W, out.metric_evals);
    out.detector = DetectorId::ml;
    return out;
}

DetectorOutcome detect_nd(const ReceivedVector& y, const CorrelationMatrix& R,
                          const Vec& amplitudes, int max_iters) {
    if (max_iters < 0) throw ConfigError("nd: max_iters must be >= 0");
    Vec d;
    Mat W;
    likelihood_terms(y.y, R.R, amplitudes, d, W);
    DetectorOutcome out;
    out.b_hat = steepest_ascent(d, W, coarse_signs(y.y), max_iters,
                                std::numeric_limits<std::int64_t>::max(),
                                out.metric_evals, out.flips);
    out.detector = DetectorId::nd;
    return out;
}

TransformationMatrix build_change_of_basis(const std::vector<Vec>& local_basis) {
    const int d = static_cast<int>(local_basis.size());
    Mat T(d, d);
    for (int r = 0; r < d; ++r) {
        const Vec& v = local_basis[r];
        if (v.size() != d)
            throw ContractError("change of basis: vector " + std::to_string(r) +
                                " has length " + std::to_string(v.size()) +
                                ", expected " + std::to_string(d));
        const double norm = v.norm();
        if (std::abs(norm - 1.0) > 1e-9)
            throw BasisError("change of basis: vector " + std::to_string(r) +
                             " has norm " + std::to_string(norm) + ", not unit");
        // Row r holds the dot products of local vector r with the global axes.
        T.row(r) = v.transpose();
    }
    return TransformationMatrix{std::move(T)};
}

TransformationMatrix compose_transformations(const TransformationMatrix& T,
                                             const TransformationMatrix& U) {
    if (T.T.cols() != U.T.rows())
        throw ContractError("compose: inner dimensions disagree");
    return TransformationMatrix{T.T * U.T};
}

Vec apply_transformation(const TransformationMatrix& T, const Vec& x) {
    if (T.T.cols() != x.size())
        throw ContractError("apply: dimension mismatch");
    return T.T * x;
}

std::vector<ConstellationPoint> enumerate_constellation(const TransformationMatrix& T) {
    const int d = static_cast<int>(T.T.cols());
    if (d > 20)
        throw ComplexityGuard("constellation enumeration capped at d=20, got " +
                              std::to_string(d));
    std::vector<ConstellationPoint> points;
    points.reserve(std::size_t{1} << d);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << d); ++i) {
        BitVector b(d);
        for (int j = 0; j < d; ++j)
            b[j] = (i >> (d - 1 - j)) & 1 ? 1.0 : -1.0;  // lexicographic order
        points.push_back(ConstellationPoint{T.T * b, std::move(b), 0.0});
    }
    return points;
}

DetectorOutcome detect_tm(const ReceivedVector& y, const CorrelationMatrix& R,
                          const Vec& amplitudes, const TmParams& params,
                          double noise_sigma, TmCache* cache) {
    const int K = static_cast<int>(y.y.size());
    params.validate(K);
    if (noise_sigma < 0) throw ConfigError("tm: noise_sigma must be >= 0");

    DetectorOutcome out;
    out.detector = DetectorId::tm;
    out.b_hat = coarse_signs(y.y);
    if (params.tau == 0.0) return out;  // threshold degeneracy: no refinement

    // Ambiguous set: coordinates whose matched-filter output sits within
    // tau output-noise-scales of the decision boundary.
    const bool all_ambiguous = std::isinf(params.tau);
    std::vector<int> subset;
    for (int k = 0; k < K; ++k) {
        const double scale = noise_sigma * std::sqrt(R.R(k, k));
        if (all_ambiguous || std::abs(y.y[k]) <= params.tau * scale)
            subset.push_back(k);
    }
    out.ambiguous_count = static_cast<int>(subset.size());
    if (subset.empty()) return out;

    const int s = out.ambiguous_count;
    Vec d_full;
    Mat W;
    likelihood_terms(y.y, R.R, amplitudes, d_full, W);

    // Subproblem on S with the confident coordinates frozen at their coarse
    // signs: maximize 2 b_S' d_S - b_S' W_SS b_S  with
    // d_S = (Ay)_S - W_SF b_F.
    Vec d_sub(s);
    Mat W_sub(s, s);
    for (int i = 0; i < s; ++i) {
        double v = d_full[subset[i]];
        std::size_t next_in_subset = 0;
        for (int f = 0; f < K; ++f) {
            if (next_in_subset < subset.size() && subset[next_in_subset] == f) {
                ++next_in_subset;
                continue;
            }
            v -= W(subset[i], f) * out.b_hat[f];
        }
        d_sub[i] = v;
        for (int j = 0; j < s; ++j) W_sub(i, j) = W(subset[i], subset[j]);
    }

    // Local frame of the S-restricted correlation structure: the orthonormal
    // eigenbasis of R_SS.  The subproblem observation expressed there feeds
    // the occurrence cache; the metric itself is basis-invariant, so the
    // decision is evaluated in the global frame (shared with detect_ml).
    Mat R_sub(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) R_sub(i, j) = R.R(subset[i], subset[j]);
    Eigen::SelfAdjointEigenSolver<Mat> eig(R_sub);
    std::vector<Vec> frame;
    frame.reserve(s);
    for (int i = 0; i < s; ++i) {
        Vec v = eig.info() == Eigen::Success ? Vec(eig.eigenvectors().col(i))
                                             : Vec(Vec::Unit(s, i));
        frame.push_back(v / v.norm());
    }
    const TransformationMatrix T = build_change_of_basis(frame);
    const Vec local_obs = apply_transformation(T, d_sub);

    TmCache::Key key;
    const bool use_cache = params.cache_enabled && cache != nullptr;
    if (use_cache) {
        key.subset = subset;
        key.coarse_signs.resize(s);
        key.quantized.resize(s);
        for (int i = 0; i < s; ++i) {
            key.coarse_signs[i] = out.b_hat[subset[i]];
            const double step = 0.25 * noise_sigma * std::sqrt(R.R(subset[i], subset[i]));
            if (step > 0.0) {
                key.quantized[i] = std::llround(local_obs[i] / step);
            } else {
                std::int64_t bits;  // exact key when the noise scale is 0
                std::memcpy(&bits, &local_obs[i], sizeof bits);
                key.quantized[i] = bits;
            }
        }
        Vec resolved;
        if (cache->lookup(key, d_sub, resolved)) {
            for (int i = 0; i < s; ++i) out.b_hat[subset[i]] = resolved[i];
            return out;  // short-circuit: no refinement metric calls
        }
    }

    Vec resolved;
    if (s <= params.s_max && s <= 62) {
        resolved = exhaustive_argmax(d_sub, W_sub, out.metric_evals);
    } else {
        BitVector start(s);
        for (int i = 0; i < s; ++i) start[i] = out.b_hat[subset[i]];
        const std::int64_t budget =
            s >= 62 ? std::numeric_limits<std::int64_t>::max() : (std::int64_t{1} << s);
        resolved = steepest_ascent(d_sub, W_sub, std::move(start), 1000, budget,
                                   out.metric_evals, out.flips);
    }
    for (int i = 0; i < s; ++i) out.b_hat[subset[i]] = resolved[i];
    if (use_cache) cache->store(key, TmCache::Entry{d_sub, resolved});
    return out;
}

}  // namespace mudet::detect
