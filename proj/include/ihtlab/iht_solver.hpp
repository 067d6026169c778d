#pragma once
#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <ihtlab/core_linalg.hpp>
#include <ihtlab/losses.hpp>

namespace ihtlab {

/// Warning sink for recoverable numerical events. Defaults to stderr.
inline std::function<void(const std::string&)>& warning_handler()
{
    static std::function<void(const std::string&)> handler = [](const std::string& msg) {
        std::cerr << "ihtlab warning: " << msg << '\n';
    };
    return handler;
}

inline void warn(const std::string& msg)
{
    if (auto& h = warning_handler()) h(msg);
}

struct IhtConfig
{
    Index k = 1;
    std::optional<double> eta;  // empty means 2 / (3 L_smooth)
    std::size_t max_iters = 500;
    double obj_tol = 1e-10;     // stop once |F(t-1) - F(t)| < obj_tol
    bool refit = false;
    std::uint64_t seed = 0;
    double refit_tol = 1e-10;
};

struct IhtRecord
{
    DenseVector iterate;
    SupportSet support;
    double objective;
    std::optional<double> margin; // margin of the pre-threshold point; empty at t = 0 or when k >= p
};

struct IhtTrace
{
    std::vector<IhtRecord> records; // records[t] holds w^(t), starting at t = 0
    std::optional<DenseVector> refit;
    double eta = 0.0;

    std::size_t iterations() const noexcept { return records.empty() ? 0 : records.size() - 1; }
    const IhtRecord& last() const { return records.back(); }

    /// Refit iterate when present, otherwise the last IHT iterate.
    const DenseVector& output() const { return refit ? *refit : records.back().iterate; }

    double min_margin() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : records)
            if (r.margin) m = std::min(m, *r.margin);
        return m;
    }
};

/// eta = 2 / (3 L) with L the top eigenvalue of X'X/n.
inline double auto_step_size(const Dataset& data, std::uint64_t seed = 0)
{
    const DenseMatrix gram = data.x().transpose() * data.x() / static_cast<double>(data.n());
    const double L = top_eigenvalue([&](const Vector& v, Vector& out) { out.noalias() = gram * v; },
                                    data.p(), 1e-10, 100000, seed ^ 0x5eed)
                         .value;
    if (!(L > 0.0)) throw DomainError("auto_step_size: design matrix is identically zero");
    return 2.0 / (3.0 * L);
}

struct RestrictedOptions
{
    bool allow_ridge = true;
    std::size_t max_newton = 500;
};

namespace detail {

inline DenseMatrix columns(const DenseMatrix& x, const SupportSet& support)
{
    DenseMatrix out(x.rows(), static_cast<Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) out.col(static_cast<Index>(j)) = x.col(support[j]);
    return out;
}

inline Vector scatter(const Vector& coef, const SupportSet& support, Index p)
{
    Vector w = Vector::Zero(p);
    for (std::size_t j = 0; j < support.size(); ++j) w(support[j]) = coef(static_cast<Index>(j));
    return w;
}

/// Solve (A + ridge I) x = b, falling back to a small ridge when A is singular.
inline Vector solve_spd(const DenseMatrix& a, const Vector& b, const RestrictedOptions& opts,
                        const char* who)
{
    Eigen::LLT<DenseMatrix> llt(a);
    if (llt.info() == Eigen::Success) {
        const double rcond = llt.rcond();
        if (rcond > 1e-14) return llt.solve(b);
    }
    if (!opts.allow_ridge)
        throw DomainError(std::string(who) + ": restricted Gram matrix is singular");
    const double ridge = 1e-10 * a.trace() / static_cast<double>(a.rows());
    warn(std::string(who) + ": singular restricted Gram, adding ridge " + std::to_string(ridge));
    DenseMatrix reg = a;
    reg.diagonal().array() += ridge;
    Eigen::LDLT<DenseMatrix> ldlt(reg);
    return ldlt.solve(b);
}

/*
 * Minimize F_S(w) + (lambda/2)||w||^2 over supp(w) in J.
 * Squared loss: one linear solve. Logistic: damped Newton with Armijo
 * backtracking, stopped on the sup-norm of the restricted gradient.
 */
inline Vector solve_restricted(const Dataset& data, const LossModel& model, const SupportSet& support,
                               double lambda, double tol, const RestrictedOptions& opts,
                               const Vector* warm_start, const char* who)
{
    if (support.empty()) throw DomainError(std::string(who) + ": support must be nonempty");
    support.check_within(data.p());
    if (model.kind() == LossKind::Logistic && data.response_kind() != ResponseKind::Binary)
        throw DomainError("logistic loss requires a dataset with binary labels");

    const auto s = static_cast<Index>(support.size());
    const double n = static_cast<double>(data.n());
    const DenseMatrix xj = columns(data.x(), support);

    if (model.kind() == LossKind::Squared) {
        DenseMatrix a = xj.transpose() * xj / n;
        a.diagonal().array() += lambda;
        const Vector b = xj.transpose() * data.y() / n;
        Vector coef = solve_spd(a, b, opts, who);
        // one step of iterative refinement against the unmodified system
        const Vector resid = b - a * coef;
        if (resid.lpNorm<Eigen::Infinity>() > tol) coef += solve_spd(a, resid, opts, who);
        return scatter(coef, support, data.p());
    }

    Vector coef = Vector::Zero(s);
    if (warm_start) {
        for (Index j = 0; j < s; ++j) coef(j) = (*warm_start)(support[static_cast<std::size_t>(j)]);
    }
    const Vector& y = data.y();
    auto objective = [&](const Vector& c, const Vector& z) {
        return detail::risk_from_scores(model, z, y) + 0.5 * lambda * c.squaredNorm();
    };

    Vector z = xj * coef;
    double f = objective(coef, z);
    for (std::size_t it = 0; it < opts.max_newton; ++it) {
        Vector a(data.n()), h(data.n());
        for (Index i = 0; i < data.n(); ++i) {
            a(i) = model.slope(z(i), y(i));
            h(i) = model.curvature(z(i), y(i));
        }
        const Vector grad = xj.transpose() * a / n + lambda * coef;
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= tol) return scatter(coef, support, data.p());

        DenseMatrix hess = xj.transpose() * h.asDiagonal() * xj / n;
        hess.diagonal().array() += lambda + 1e-12;
        const Vector dir = -hess.ldlt().solve(grad);
        const double slope = grad.dot(dir);

        double step = 1.0;
        Vector trial(s), zt(data.n());
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial = coef + step * dir;
            zt = xj * trial;
            const double ft = objective(trial, zt);
            // near the optimum rounding swamps the Armijo test; take the full step
            if (ft <= f + 1e-4 * step * slope || (step == 1.0 && gnorm < 1e-6)) {
                coef = trial;
                z = zt;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError(std::string(who) + ": line search failed", gnorm, it);
    }
    throw ConvergenceError(std::string(who) + ": Newton did not converge in " +
                               std::to_string(opts.max_newton) + " iterations",
                           f, opts.max_newton);
}

} // namespace detail

/// argmin of F_S over vectors supported on `support`.
inline DenseVector restricted_erm(const Dataset& data, const LossModel& model, const SupportSet& support,
                                  double tol, const RestrictedOptions& opts = {})
{
    return DenseVector(detail::solve_restricted(data, model, support, 0.0, tol, opts, nullptr,
                                                "restricted_erm"));
}

/// argmin of F_S(w) + (lambda/2)||w||^2 over vectors supported on `support`.
inline DenseVector regularized_restricted_erm(const Dataset& data, const LossModel& model,
                                              const SupportSet& support, double lambda, double tol,
                                              const RestrictedOptions& opts = {},
                                              const Vector* warm_start = nullptr)
{
    if (!(lambda > 0.0)) throw DomainError("regularized_restricted_erm: lambda must be positive");
    return DenseVector(detail::solve_restricted(data, model, support, lambda, tol, opts, warm_start,
                                                "regularized_restricted_erm"));
}

/// Re-solve the empirical risk over the support of `w`.
inline DenseVector refit(const DenseVector& w, const Dataset& data, const LossModel& model, double tol,
                         const RestrictedOptions& opts = {})
{
    const SupportSet support = SupportSet::of(w);
    if (support.empty()) throw DomainError("refit: support of w is empty");
    // warm start from w itself; helps logistic Newton
    return DenseVector(detail::solve_restricted(data, model, support, 0.0, tol, opts, &w.values(), "refit"));
}

/*
 * Iterative hard thresholding from w^(0) = 0:
 *
 *   w^(t) = H_k(w^(t-1) - eta * grad F_S(w^(t-1)))
 *
 * Runs for cfg.max_iters steps or until the objective stagnates. Each
 * record stores the iterate, its support, F_S and the thresholding margin
 * of the pre-threshold point.
 */
inline IhtTrace iht_run(const Dataset& data, const LossModel& model, const IhtConfig& cfg)
{
    if (cfg.k < 1) throw DomainError("iht_run: k must be >= 1");
    if (cfg.max_iters < 1) throw DomainError("iht_run: max_iters must be >= 1");
    if (cfg.eta && !(*cfg.eta > 0.0)) throw DomainError("iht_run: step size must be positive");
    if (model.kind() == LossKind::Logistic && data.response_kind() != ResponseKind::Binary)
        throw DomainError("logistic loss requires a dataset with binary labels");

    const Index p = data.p();
    IhtTrace trace;
    trace.eta = cfg.eta ? *cfg.eta : auto_step_size(data, cfg.seed);

    Vector w = Vector::Zero(p);
    double f = empirical_risk(model, w, data);
    if (!std::isfinite(f)) throw DivergenceError("iht_run: non-finite objective at iteration 0", 0);
    trace.records.push_back({DenseVector(w), SupportSet{}, f, std::nullopt});

    for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
        const Vector z = w - trace.eta * empirical_gradient(model, w, data);
        if (!all_finite(z))
            throw DivergenceError("iht_run: non-finite iterate at iteration " + std::to_string(t), t);
        std::optional<double> margin;
        if (cfg.k < p) margin = detail::thresholding_margin_raw(z, cfg.k);
        SupportSet support;
        w = detail::hard_threshold_raw(z, cfg.k, &support);
        const double f_new = empirical_risk(model, w, data);
        if (!std::isfinite(f_new))
            throw DivergenceError("iht_run: non-finite objective at iteration " + std::to_string(t), t);
        trace.records.push_back({DenseVector(w), std::move(support), f_new, margin});
        const bool stagnant = std::abs(f - f_new) < cfg.obj_tol;
        f = f_new;
        if (stagnant) break;
    }

    if (cfg.refit && !trace.records.back().support.empty())
        trace.refit = refit(trace.records.back().iterate, data, model, cfg.refit_tol);
    return trace;
}

} // namespace ihtlab
