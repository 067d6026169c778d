#pragma once
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <ihtlab/core_linalg.hpp>
#include <ihtlab/losses.hpp>
#include <ihtlab/synth_data.hpp>

namespace ihtlab {

struct RiskEstimate
{
    double value = 0.0;
    double std_error = 0.0; // 0 for closed forms
    std::size_t n_mc = 0; // 0 for closed forms
};

inline constexpr std::size_t default_n_mc = 100000;

namespace detail {

inline void require_identity_covariance(const GenerativeSpec& spec, const char* who)
{
    if (spec.normalize_features)
        throw DomainError(std::string(who) + ": closed form needs identity feature covariance");
}

/// Expected loss at score `a` given the true score `b`, averaged over the response.
inline double conditional_loss(const GenerativeSpec& spec, double a, double b)
{
    if (spec.kind == ModelKind::LinearGaussian) {
        const double d = b - a;
        return 0.5 * d * d + 0.5 * spec.sigma * spec.sigma;
    }
    const double pos = sigmoid(2.0 * b);
    return pos * softplus(-2.0 * a) + (1.0 - pos) * softplus(2.0 * a);
}

/*
 * Monte Carlo over x for the mean of f(scores), where scores = V'x for the
 * columns of V and the last column is w_bar. With isotropic Gaussian
 * features V'x has the law of R'g for V = QR and g ~ N(0, I_m), so each draw
 * costs m normals instead of p. Normalized features fall back to full draws.
 */
template <class F>
RiskEstimate mc_mean(const GenerativeSpec& spec, const DenseMatrix& v, std::size_t n_mc, std::uint64_t seed,
                     F&& f)
{
    if (n_mc < 1) throw DomainError("population risk: n_mc must be >= 1");
    Rng rng(seed, stream_id(0, StreamPurpose::MonteCarlo, 0, 0));
    const Index m = v.cols();
    DenseMatrix rt;
    if (!spec.normalize_features) {
        Eigen::HouseholderQR<DenseMatrix> qr(v);
        rt = qr.matrixQR().topRows(std::min(v.rows(), m)).template triangularView<Eigen::Upper>();
        rt.transposeInPlace(); // m x r
    }
    Vector scores(m), g(rt.cols()), x(v.rows());
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        if (!spec.normalize_features) {
            for (Index j = 0; j < g.size(); ++j) g(j) = rng.normal();
            scores.noalias() = rt * g;
        } else {
            for (Index j = 0; j < x.size(); ++j) x(j) = rng.normal();
            const double norm = x.norm();
            if (norm > 0.0) x /= norm;
            scores.noalias() = v.transpose() * x;
        }
        const double val = f(scores);
        // Welford
        const double delta = val - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (val - mean);
    }
    RiskEstimate out;
    out.value = mean;
    out.n_mc = n_mc;
    out.std_error = n_mc > 1 ? std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc)) : 0.0;
    return out;
}

inline Vector best_k_sparse(const GenerativeSpec& spec, Index k)
{
    return hard_threshold_raw(spec.w_bar.values(), k);
}

} // namespace detail

/// F(w) = ||w - w_bar||^2 / 2 + sigma^2 / 2 for the linear model with x ~ N(0, I).
inline RiskEstimate population_risk_linear(const Vector& w, const GenerativeSpec& spec)
{
    if (spec.kind != ModelKind::LinearGaussian) throw DomainError("population_risk_linear: spec is not linear");
    detail::require_identity_covariance(spec, "population_risk_linear");
    if (w.size() != spec.p) throw DimensionError("population_risk_linear: dimension mismatch");
    return {0.5 * (w - spec.w_bar.values()).squaredNorm() + 0.5 * spec.sigma * spec.sigma, 0.0, 0};
}

/// Mean loss over n_mc fresh draws from the model (response integrated out exactly).
inline RiskEstimate population_risk_mc(const Vector& w, const GenerativeSpec& spec,
                                       std::size_t n_mc = default_n_mc, std::uint64_t seed = 0)
{
    if (w.size() != spec.p) throw DimensionError("population_risk_mc: dimension mismatch");
    DenseMatrix v(spec.p, 2);
    v.col(0) = w;
    v.col(1) = spec.w_bar.values();
    return detail::mc_mean(spec, v, n_mc, seed,
                           [&](const Vector& s) { return detail::conditional_loss(spec, s(0), s(1)); });
}

/// min over k-sparse w of F(w).
inline RiskEstimate optimal_sparse_risk(const GenerativeSpec& spec, Index k, std::size_t n_mc = default_n_mc,
                                        std::uint64_t seed = 0)
{
    if (k < 0) throw DomainError("optimal_sparse_risk: k must be nonnegative");
    if (spec.kind == ModelKind::LinearGaussian) {
        const Vector best = detail::best_k_sparse(spec, k);
        if (!spec.normalize_features) return population_risk_linear(best, spec);
        return population_risk_mc(best, spec, n_mc, seed);
    }
    if (k < spec.k_bar)
        throw DomainError("optimal_sparse_risk: logistic model with k < k_bar has no tractable optimum");
    return population_risk_mc(spec.w_bar.values(), spec, n_mc, seed);
}

/*
 * F(w) - min_{||v||_0 <= k_target} F(v). Closed form for the linear model;
 * otherwise both risks are estimated on the same Monte Carlo draws and the
 * standard error is that of the paired differences.
 */
inline RiskEstimate excess_risk(const Vector& w, const GenerativeSpec& spec, Index k_target,
                                std::size_t n_mc = default_n_mc, std::uint64_t seed = 0)
{
    if (w.size() != spec.p) throw DimensionError("excess_risk: dimension mismatch");
    if (spec.kind == ModelKind::LogisticGaussian && k_target < spec.k_bar)
        throw DomainError("excess_risk: logistic model with k < k_bar has no tractable optimum");

    const Vector best = spec.kind == ModelKind::LinearGaussian ? detail::best_k_sparse(spec, k_target)
                                                               : spec.w_bar.values();
    if (spec.kind == ModelKind::LinearGaussian && !spec.normalize_features) {
        // coordinatewise, so shared tail terms cancel exactly
        const Vector& wb = spec.w_bar.values();
        const double v = 0.5 * ((w - wb).array().square() - (best - wb).array().square()).sum();
        return {v, 0.0, 0};
    }
    DenseMatrix v(spec.p, 3);
    v.col(0) = w;
    v.col(1) = best;
    v.col(2) = spec.w_bar.values();
    return detail::mc_mean(spec, v, n_mc, seed, [&](const Vector& s) {
        return detail::conditional_loss(spec, s(0), s(2)) - detail::conditional_loss(spec, s(1), s(2));
    });
}

/// Empirical (1 - delta) quantile of ||grad F_S(w_bar)||_inf over `reps` fresh datasets.
inline double gradient_concentration_check(const GenerativeSpec& spec, const Vector& w_bar, Index n,
                                           std::size_t reps, std::uint64_t seed, double delta = 0.1)
{
    if (reps < 1) throw DomainError("gradient_concentration_check: reps must be >= 1");
    const LossModel model = spec.loss();
    std::vector<double> norms;
    norms.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng(seed, stream_id(0, StreamPurpose::TrainData, 0, static_cast<std::uint32_t>(r)));
        const Dataset data = generate(spec, n, rng);
        norms.push_back(empirical_gradient(model, w_bar, data).lpNorm<Eigen::Infinity>());
    }
    std::sort(norms.begin(), norms.end());
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - delta) * static_cast<double>(reps)));
    return norms[std::clamp<std::size_t>(rank, 1, reps) - 1];
}

} // namespace ihtlab
