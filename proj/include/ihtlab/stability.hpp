#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <ihtlab/core_linalg.hpp>
#include <ihtlab/iht_solver.hpp>
#include <ihtlab/losses.hpp>
#include <ihtlab/synth_data.hpp>

namespace ihtlab {

struct StabilityReport
{
    std::vector<double> margins; // margins[t-1] for t = 1..T
    double min_margin = std::numeric_limits<double>::infinity();
    double support_match_rate = 1.0;
    double loo_gamma_hat = 0.0;
};

/// IHT run against an arbitrary gradient field, with its margin profile.
struct FieldTrace
{
    StabilityReport report;
    std::vector<DenseVector> iterates; // iterates[t] = w^(t), t = 0..T
    std::vector<SupportSet> supports;  // supports[t] = supp(w^(t))
};

using GradientField = std::function<Vector(const Vector&)>;

/// Gradient field of F_S for a fixed dataset.
inline GradientField empirical_gradient_field(LossModel model, const Dataset& data)
{
    return [model, &data](const Vector& w) { return empirical_gradient(model, w, data); };
}

/// grad F(w) = w - w_tilde for the linear model with isotropic Gaussian features.
inline GradientField linear_population_gradient(const DenseVector& w_tilde)
{
    return [w = w_tilde.values()](const Vector& v) -> Vector { return v - w; };
}

/*
 * Runs w^(t) = H_k(w^(t-1) - eta * grad(w^(t-1))) for t = 1..T and records the
 * thresholding margin of every pre-threshold point. The field is
 * (eps, eta, T, w0)-IHT stable for every eps <= min_margin.
 */
inline FieldTrace iht_stability_trace(const GradientField& gradient, Index k, double eta, std::size_t T,
                                      const DenseVector& w0)
{
    if (T < 1) throw DomainError("iht_stability_trace: T must be >= 1");
    if (!(eta > 0.0)) throw DomainError("iht_stability_trace: eta must be positive");
    if (static_cast<Index>(SupportSet::of(w0).size()) > k)
        throw DomainError("iht_stability_trace: w0 has more than k nonzeros");

    FieldTrace out;
    Vector w = w0.values();
    out.iterates.push_back(w0);
    out.supports.push_back(SupportSet::of(w));
    for (std::size_t t = 1; t <= T; ++t) {
        const Vector g = gradient(w);
        if (g.size() != w.size()) throw DimensionError("iht_stability_trace: gradient has wrong dimension");
        if (!all_finite(g))
            throw DomainError("iht_stability_trace: non-finite gradient at iteration " + std::to_string(t));
        const Vector z = w - eta * g;
        const double margin = detail::thresholding_margin_raw(z, k);
        out.report.margins.push_back(margin);
        out.report.min_margin = std::min(out.report.min_margin, margin);
        SupportSet support;
        w = detail::hard_threshold_raw(z, k, &support);
        out.iterates.emplace_back(w);
        out.supports.push_back(std::move(support));
    }
    return out;
}

/*
 * Exact IHT trajectory on F(w) = ||w - w_tilde||^2 / 2 + sigma^2 / 2 from zero:
 * w^(t) = (1 - (1 - eta)^t) w_tilde_J with J the top-k support of w_tilde.
 * Returns w^(0..T). sigma only shifts F and does not enter the trajectory.
 */
inline std::vector<DenseVector> population_iht_linear_oracle(const DenseVector& w_tilde, double sigma, Index k,
                                                             double eta, std::size_t T)
{
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("population_iht_linear_oracle: eta must lie in (0, 1)");
    if (!(sigma >= 0.0)) throw DomainError("population_iht_linear_oracle: sigma must be nonnegative");
    if (thresholding_margin(w_tilde, k) <= 0.0)
        throw DomainError("population_iht_linear_oracle: top-k support of w_tilde is ambiguous (zero gap)");
    const Vector wj = hard_threshold(w_tilde, k).values.values();
    std::vector<DenseVector> out;
    out.reserve(T + 1);
    for (std::size_t t = 0; t <= T; ++t) {
        const double coef = 1.0 - std::pow(1.0 - eta, static_cast<double>(t));
        out.emplace_back(Vector(coef * wj));
    }
    return out;
}

struct SupportOverlap
{
    bool equal;
    double jaccard;
};

/// Exact-equality flag and |a ∩ b| / |a ∪ b| (1 when both are empty).
inline SupportOverlap support_overlap(const SupportSet& a, const SupportSet& b)
{
    const std::size_t inter = a.intersection_size(b);
    const std::size_t uni = a.size() + b.size() - inter;
    return {a == b, uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni)};
}

/// Fraction of t in 1..T at which the two traces select the same support.
inline double support_match_rate(const std::vector<SupportSet>& a, const std::vector<SupportSet>& b)
{
    const std::size_t T = std::min(a.size(), b.size());
    if (T <= 1) return 1.0;
    std::size_t hits = 0;
    for (std::size_t t = 1; t < T; ++t) hits += a[t] == b[t];
    return static_cast<double>(hits) / static_cast<double>(T - 1);
}

enum class Replacement {
    Fresh,     // draw xi' from the generative model
    Bootstrap, // resample xi' from the training set
    Duplicate, // xi' = xi (the datasets coincide)
};

struct LooOptions
{
    Replacement replacement = Replacement::Fresh;
    std::size_t eval_pool = 1000; // held-out points, used with Fresh
    double tol = 1e-10;
};

namespace detail {

inline Dataset replace_row(const Dataset& data, Index i, const Vector& x, double y)
{
    DenseMatrix xs = data.x();
    Vector ys = data.y();
    xs.row(i) = x.transpose();
    ys(i) = y;
    return Dataset(std::move(xs), std::move(ys), data.response_kind());
}

} // namespace detail

/*
 * Empirical uniform-stability estimate of the l2-regularized restricted ERM.
 *
 * For each trial one training point is replaced, both problems are solved,
 * and the largest pointwise loss change is taken over an evaluation set made
 * of the training points, the replacement point and (with Fresh) a held-out
 * pool. The returned maximum over trials is a lower estimate of gamma.
 */
inline double loo_uniform_stability(const Dataset& data, const LossModel& model, const SupportSet& support,
                                    double lambda, std::size_t trials, std::uint64_t seed,
                                    const GenerativeSpec* spec = nullptr, const LooOptions& opts = {})
{
    if (!(lambda > 0.0)) throw DomainError("loo_uniform_stability: lambda must be positive");
    if (trials < 1) throw DomainError("loo_uniform_stability: trials must be >= 1");
    const Replacement mode = (opts.replacement == Replacement::Fresh && !spec) ? Replacement::Bootstrap
                                                                               : opts.replacement;

    const Vector base = regularized_restricted_erm(data, model, support, lambda, opts.tol).values();

    DenseMatrix pool_x;
    Vector pool_y;
    if (mode == Replacement::Fresh && opts.eval_pool > 0) {
        Rng pool_rng(seed, stream_id(0, StreamPurpose::Stability, 0, 0));
        const Dataset pool = generate(*spec, static_cast<Index>(opts.eval_pool), pool_rng);
        pool_x = pool.x();
        pool_y = pool.y();
    }

    auto max_change = [&](const Vector& a, const Vector& b, const DenseMatrix& x, const Vector& y) {
        if (x.rows() == 0) return 0.0;
        const Vector za = x * a;
        const Vector zb = x * b;
        double m = 0.0;
        for (Index i = 0; i < x.rows(); ++i)
            m = std::max(m, std::abs(model.value(za(i), y(i)) - model.value(zb(i), y(i))));
        return m;
    };

    double gamma = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(seed, stream_id(0, StreamPurpose::Stability, 1, static_cast<std::uint32_t>(trial)));
        const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(data.n())));
        Vector xr;
        double yr = 0.0;
        switch (mode) {
        case Replacement::Fresh: {
            const Dataset one = generate(*spec, 1, rng);
            xr = one.x().row(0).transpose();
            yr = one.y()(0);
            break;
        }
        case Replacement::Bootstrap: {
            const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(data.n())));
            xr = data.x().row(j).transpose();
            yr = data.y()(j);
            break;
        }
        case Replacement::Duplicate:
            xr = data.x().row(i).transpose();
            yr = data.y()(i);
            break;
        }
        const Dataset perturbed = detail::replace_row(data, i, xr, yr);
        const Vector alt =
            regularized_restricted_erm(perturbed, model, support, lambda, opts.tol, {}, &base).values();

        double change = max_change(base, alt, data.x(), data.y());
        change = std::max(change, std::abs(model.value(base.dot(xr), yr) - model.value(alt.dot(xr), yr)));
        change = std::max(change, max_change(base, alt, pool_x, pool_y));
        gamma = std::max(gamma, change);
    }
    return gamma;
}

/// Right-hand side of the strong-signal condition on the smallest nonzero |w_bar_i|.
inline double strong_signal_threshold(double grad_inf, double mu, double G, Index k, Index n, Index p,
                                      double delta)
{
    if (!(mu > 0.0)) throw DomainError("strong_signal_predicate: mu must be positive");
    if (k < 1 || n < 1 || p < 1) throw DomainError("strong_signal_predicate: k, n, p must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("strong_signal_predicate: delta must lie in (0, 1)");
    const double kd = static_cast<double>(k);
    return 2.0 * std::sqrt(2.0 * kd) * grad_inf / mu +
           3.0 * G / mu * std::sqrt(kd * std::log(4.0 * static_cast<double>(p) / delta) / static_cast<double>(n));
}

/// Smallest nonzero magnitude of `w`; throws when w is all zero.
inline double min_nonzero_magnitude(const Vector& w)
{
    double m = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < w.size(); ++i)
        if (w(i) != 0.0) m = std::min(m, std::abs(w(i)));
    if (!std::isfinite(m)) throw DomainError("strong_signal_predicate: w_bar has no nonzero entry");
    return m;
}

/*
 * w_bar_min > 2 sqrt(2k) ||grad F(w_bar)||_inf / mu + (3 G / mu) sqrt(k log(4p/delta) / n)
 */
inline bool strong_signal_predicate(const DenseVector& w_bar, double grad_inf, double mu, double G, Index k,
                                    Index n, Index p, double delta)
{
    const double threshold = strong_signal_threshold(grad_inf, mu, G, k, n, p, delta);
    return min_nonzero_magnitude(w_bar.values()) > threshold;
}

} // namespace ihtlab
