#pragma once
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <ihtlab/core_linalg.hpp>

namespace ihtlab {

enum class LossKind { Squared, Logistic };

inline const char* to_string(LossKind kind) noexcept
{
    return kind == LossKind::Squared ? "squared" : "logistic";
}

/// Overflow-safe log(1 + exp(x)).
inline double softplus(double x) noexcept
{
    return x >= 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Logistic sigmoid 1 / (1 + exp(-x)), stable for large |x|.
inline double sigmoid(double x) noexcept
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/*
 * Pointwise loss as a function of the linear score z = w'x.
 *
 *   Squared:  l(z; y) = (y - z)^2 / 2
 *   Logistic: l(z; y) = log(1 + exp(-2 y z)),  y in {-1, +1}
 */
class LossModel
{
public:
    explicit constexpr LossModel(LossKind kind) noexcept : kind_(kind) {}

    constexpr LossKind kind() const noexcept { return kind_; }

    double value(double z, double y) const noexcept
    {
        if (kind_ == LossKind::Squared) {
            const double r = y - z;
            return 0.5 * r * r;
        }
        // log(1 + exp(-u)) with u = 2yz
        return softplus(-2.0 * y * z);
    }

    /// dl/dz
    double slope(double z, double y) const noexcept
    {
        if (kind_ == LossKind::Squared) return z - y;
        return -2.0 * y * (1.0 - sigmoid(2.0 * y * z));
    }

    /// d^2 l / dz^2; bounded by 1 for both kinds.
    double curvature(double z, double y) const noexcept
    {
        if (kind_ == LossKind::Squared) return 1.0;
        const double s = sigmoid(2.0 * y * z);
        return 4.0 * s * (1.0 - s);
    }

private:
    LossKind kind_;
};

enum class ResponseKind { Real, Binary };

/// n samples of p features with responses. Entries are finite; binary labels are +-1.
class Dataset
{
public:
    Dataset(DenseMatrix x, Vector y, ResponseKind kind = ResponseKind::Real)
        : x_(std::move(x)), y_(std::move(y)), kind_(kind)
    {
        if (x_.rows() < 1) throw DomainError("Dataset: need at least one sample");
        if (x_.rows() != y_.size())
            throw DimensionError("Dataset: X has " + std::to_string(x_.rows()) + " rows but y has " +
                                 std::to_string(y_.size()) + " entries");
        if (!all_finite(x_) || !all_finite(y_)) throw DomainError("Dataset: non-finite entry");
        if (kind_ == ResponseKind::Binary)
            for (Index i = 0; i < y_.size(); ++i)
                if (y_(i) != 1.0 && y_(i) != -1.0)
                    throw DomainError("Dataset: binary label must be -1 or +1 (row " +
                                      std::to_string(i) + ")");
    }

    const DenseMatrix& x() const noexcept { return x_; }
    const Vector& y() const noexcept { return y_; }
    ResponseKind response_kind() const noexcept { return kind_; }
    Index n() const noexcept { return x_.rows(); }
    Index p() const noexcept { return x_.cols(); }

private:
    DenseMatrix x_;
    Vector y_;
    ResponseKind kind_;
};

namespace detail {

inline void check_compatible(const LossModel& model, const Vector& w, const Dataset& data)
{
    if (w.size() != data.p())
        throw DimensionError("parameter has dimension " + std::to_string(w.size()) +
                             " but data has " + std::to_string(data.p()) + " features");
    if (model.kind() == LossKind::Logistic && data.response_kind() != ResponseKind::Binary)
        throw DomainError("logistic loss requires a dataset with binary labels");
}

inline double risk_from_scores(const LossModel& model, const Vector& z, const Vector& y)
{
    double sum = 0.0;
    for (Index i = 0; i < z.size(); ++i) sum += model.value(z(i), y(i));
    return sum / static_cast<double>(z.size());
}

inline Vector slopes(const LossModel& model, const Vector& z, const Vector& y)
{
    Vector a(z.size());
    for (Index i = 0; i < z.size(); ++i) a(i) = model.slope(z(i), y(i));
    return a;
}

} // namespace detail

inline double loss_value(const LossModel& model, const Vector& w, const Vector& x, double y)
{
    if (w.size() != x.size())
        throw DimensionError("loss_value: w has dimension " + std::to_string(w.size()) +
                             " but x has " + std::to_string(x.size()));
    return model.value(w.dot(x), y);
}

/// F_S(w) = (1/n) sum_i l(w; x_i, y_i)
inline double empirical_risk(const LossModel& model, const Vector& w, const Dataset& data)
{
    detail::check_compatible(model, w, data);
    const Vector z = data.x() * w;
    return detail::risk_from_scores(model, z, data.y());
}

/// (1/n) X' a(w) with a_i = dl/dz at (x_i'w, y_i).
inline Vector empirical_gradient(const LossModel& model, const Vector& w, const Dataset& data)
{
    detail::check_compatible(model, w, data);
    const Vector z = data.x() * w;
    const Vector a = detail::slopes(model, z, data.y());
    return data.x().transpose() * a / static_cast<double>(data.n());
}

/// Empirical gradient zeroed outside `support`.
inline Vector restricted_gradient(const LossModel& model, const Vector& w, const Dataset& data,
                                  const SupportSet& support)
{
    support.check_within(data.p());
    return mask(empirical_gradient(model, w, data), support);
}

/*
 * Estimates of the constants in the restricted strong convexity, smoothness
 * and Lipschitz assumptions. mu_strong is only produced for squared loss.
 */
struct ConstantEstimates
{
    double L_smooth = 0.0;
    std::optional<double> mu_strong;
    bool mu_exact = false; // true when every size-k support was enumerated
    double G_lip = 0.0;
    double M_bound = 0.0;
};

struct ConstantOptions
{
    std::size_t support_samples = 200;
    std::uint64_t seed = 0;
    double eig_tol = 1e-10;
};

namespace detail {

/// Binomial coefficient, saturating at `cap + 1`.
inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap)
{
    k = std::min(k, n - k);
    long double c = 1.0L;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
        if (c > static_cast<long double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(c));
}

inline double min_eigenvalue_on(const DenseMatrix& gram, const std::vector<Index>& support)
{
    const auto s = static_cast<Index>(support.size());
    DenseMatrix sub(s, s);
    for (Index a = 0; a < s; ++a)
        for (Index b = 0; b < s; ++b) sub(a, b) = gram(support[a], support[b]);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sub, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline bool next_combination(std::vector<Index>& c, Index n)
{
    const auto k = static_cast<Index>(c.size());
    for (Index i = k - 1; i >= 0; --i) {
        if (c[i] < n - k + i) {
            ++c[i];
            for (Index j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

/*
 * L_smooth is the top eigenvalue of X'X/n, valid for both losses because
 * their curvature in the score is at most 1. mu_strong is the smallest
 * eigenvalue of the k-column Gram submatrices: enumerated exactly when
 * C(p, k) <= support_samples, otherwise the minimum over that many random
 * supports (which can only overestimate the true restricted constant).
 * G_lip and M_bound bound the loss slope and value over the ball of the
 * given radius, evaluated at the training points.
 */
inline ConstantEstimates estimate_constants(const LossModel& model, const Dataset& data, Index k,
                                            double radius, const ConstantOptions& opts = {})
{
    if (k < 1) throw DomainError("estimate_constants: k must be >= 1");
    if (!(radius > 0.0)) throw DomainError("estimate_constants: radius must be positive");
    if (model.kind() == LossKind::Logistic && data.response_kind() != ResponseKind::Binary)
        throw DomainError("logistic loss requires a dataset with binary labels");

    const Index p = data.p();
    const DenseMatrix gram = data.x().transpose() * data.x() / static_cast<double>(data.n());
    if (gram.diagonal().maxCoeff() == 0.0)
        throw DomainError("estimate_constants: design matrix is identically zero");

    ConstantEstimates out;
    out.L_smooth = top_eigenvalue(gram, opts.eig_tol).value;

    if (model.kind() == LossKind::Squared) {
        const Index s = std::min(k, p);
        const auto total = detail::binomial_capped(static_cast<std::size_t>(p),
                                                   static_cast<std::size_t>(s), opts.support_samples);
        double mu = std::numeric_limits<double>::infinity();
        if (total <= opts.support_samples) {
            std::vector<Index> c(static_cast<std::size_t>(s));
            std::iota(c.begin(), c.end(), Index{0});
            do { mu = std::min(mu, detail::min_eigenvalue_on(gram, c)); } while (detail::next_combination(c, p));
            out.mu_exact = true;
        } else {
            Rng rng(opts.seed, stream_id(0, StreamPurpose::Solver, 1, 0));
            for (std::size_t m = 0; m < opts.support_samples; ++m) {
                const auto draw = sample_without_replacement(rng, static_cast<std::size_t>(p),
                                                             static_cast<std::size_t>(s));
                std::vector<Index> c(draw.begin(), draw.end());
                mu = std::min(mu, detail::min_eigenvalue_on(gram, c));
            }
        }
        out.mu_strong = std::clamp(mu, 0.0, out.L_smooth);
    }

    const double max_x = data.x().rowwise().norm().maxCoeff();
    const double reach = radius * max_x; // bound on |w'x| over the ball
    if (model.kind() == LossKind::Squared) {
        const double max_resid = data.y().cwiseAbs().maxCoeff() + reach;
        out.G_lip = max_x * max_resid;
        out.M_bound = 0.5 * max_resid * max_resid;
    } else {
        out.G_lip = max_x * 2.0 * sigmoid(2.0 * reach);
        out.M_bound = softplus(2.0 * reach);
    }
    return out;
}

} // namespace ihtlab
