#pragma once
#include <type_traits>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <ihtlab/errors.hpp>
#include <ihtlab/random.hpp>

namespace ihtlab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m)
{
    return m.array().isFinite().all();
}

/*
 * A p-dimensional real vector whose entries are guaranteed finite.
 * Validation happens once at construction; every other operation trusts it.
 */
class DenseVector
{
public:
    DenseVector() = default;

    explicit DenseVector(Vector values) : values_(std::move(values))
    {
        if (!all_finite(values_)) throw DomainError("DenseVector: non-finite entry");
    }

    DenseVector(std::initializer_list<double> values)
        : DenseVector(Vector(Eigen::Map<const Vector>(values.begin(), static_cast<Index>(values.size()))))
    {}

    static DenseVector zeros(Index p) { return DenseVector(Vector::Zero(p)); }

    const Vector& values() const noexcept { return values_; }
    operator const Vector&() const noexcept { return values_; }

    Index size() const noexcept { return values_.size(); }
    double operator[](Index i) const { return values_(i); }

    friend bool operator==(const DenseVector& a, const DenseVector& b)
    {
        return a.size() == b.size() && (a.values_.array() == b.values_.array()).all();
    }

private:
    Vector values_;
};

/// Sorted, duplicate-free set of coordinate indices.
class SupportSet
{
public:
    SupportSet() = default;

    /// Throws unless `indices` is strictly increasing and nonnegative.
    explicit SupportSet(std::vector<Index> indices) : idx_(std::move(indices))
    {
        for (std::size_t i = 0; i < idx_.size(); ++i) {
            if (idx_[i] < 0) throw DomainError("SupportSet: negative index");
            if (i > 0 && idx_[i] <= idx_[i - 1])
                throw DomainError("SupportSet: indices must be strictly increasing");
        }
    }

    static SupportSet from_unsorted(std::vector<Index> indices)
    {
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        return SupportSet(std::move(indices));
    }

    static SupportSet full(Index p)
    {
        std::vector<Index> idx(static_cast<std::size_t>(p));
        std::iota(idx.begin(), idx.end(), Index{0});
        return SupportSet(std::move(idx));
    }

    /// Indices of the nonzero entries of `w`.
    static SupportSet of(const Vector& w)
    {
        std::vector<Index> idx;
        for (Index i = 0; i < w.size(); ++i)
            if (w(i) != 0.0) idx.push_back(i);
        return SupportSet(std::move(idx));
    }

    std::size_t size() const noexcept { return idx_.size(); }
    bool empty() const noexcept { return idx_.empty(); }
    Index operator[](std::size_t i) const { return idx_[i]; }
    auto begin() const noexcept { return idx_.begin(); }
    auto end() const noexcept { return idx_.end(); }
    const std::vector<Index>& indices() const noexcept { return idx_; }

    bool contains(Index i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

    bool includes(const SupportSet& other) const
    {
        return std::includes(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end());
    }

    std::size_t intersection_size(const SupportSet& other) const
    {
        std::size_t count = 0;
        auto a = idx_.begin();
        auto b = other.idx_.begin();
        while (a != idx_.end() && b != other.idx_.end()) {
            if (*a < *b) ++a;
            else if (*b < *a) ++b;
            else { ++count; ++a; ++b; }
        }
        return count;
    }

    /// Throws unless every index is below `p`.
    void check_within(Index p) const
    {
        if (!idx_.empty() && idx_.back() >= p)
            throw DomainError("SupportSet: index " + std::to_string(idx_.back()) +
                              " out of range for dimension " + std::to_string(p));
    }

    friend bool operator==(const SupportSet&, const SupportSet&) = default;

private:
    std::vector<Index> idx_;
};

/// Zero every entry of `w` outside `support`.
inline Vector mask(const Vector& w, const SupportSet& support)
{
    Vector out = Vector::Zero(w.size());
    for (Index i : support) out(i) = w(i);
    return out;
}

struct Thresholded
{
    DenseVector values;
    SupportSet support;
};

namespace detail {

/// Indices ordered by (|w_i| descending, i ascending); only the first `k` are sorted.
inline std::vector<Index> top_k_order(const Vector& w, Index k)
{
    std::vector<Index> order(static_cast<std::size_t>(w.size()));
    std::iota(order.begin(), order.end(), Index{0});
    auto before = [&](Index a, Index b) {
        const double fa = std::abs(w(a));
        const double fb = std::abs(w(b));
        return fa > fb || (fa == fb && a < b);
    };
    k = std::min<Index>(k, w.size());
    std::partial_sort(order.begin(), order.begin() + k, order.end(), before);
    order.resize(static_cast<std::size_t>(k));
    return order;
}

/// Hard thresholding on a raw vector, returning the kept vector only.
inline Vector hard_threshold_raw(const Vector& w, Index k, SupportSet* support = nullptr)
{
    const Index p = w.size();
    if (k >= p) {
        if (support) *support = SupportSet::of(w);
        return w;
    }
    Vector out = Vector::Zero(p);
    std::vector<Index> kept;
    kept.reserve(static_cast<std::size_t>(k));
    for (Index i : top_k_order(w, k)) {
        if (w(i) == 0.0) continue;
        out(i) = w(i);
        kept.push_back(i);
    }
    if (support) *support = SupportSet::from_unsorted(std::move(kept));
    return out;
}

inline double thresholding_margin_raw(const Vector& w, Index k)
{
    if (k < 1 || k >= w.size())
        throw DomainError("thresholding_margin: need 1 <= k < p, got k=" + std::to_string(k) +
                          ", p=" + std::to_string(w.size()));
    const auto order = top_k_order(w, k + 1);
    return std::abs(w(order[k - 1])) - std::abs(w(order[k]));
}

} // namespace detail

/*
 * Keep the k largest-magnitude entries of `w`, zeroing the rest.
 * Ties in magnitude go to the lower index. Zero entries never enter the
 * support, so the support is exactly the nonzero pattern of the result.
 * k >= p returns `w` unchanged; k == 0 returns the zero vector.
 */
inline Thresholded hard_threshold(const DenseVector& w, Index k)
{
    if (k < 0) throw DomainError("hard_threshold: k must be nonnegative");
    SupportSet support;
    Vector out = detail::hard_threshold_raw(w.values(), k, &support);
    return {DenseVector(std::move(out)), std::move(support)};
}

/// |[w]_(k)| - |[w]_(k+1)|, the gap between the k-th and (k+1)-th largest magnitudes.
inline double thresholding_margin(const DenseVector& w, Index k)
{
    return detail::thresholding_margin_raw(w.values(), k);
}

struct EigenEstimate
{
    double value;
    std::size_t iterations;
};

/*
 * Largest eigenvalue of a symmetric PSD operator by power iteration.
 *
 * `apply(v, out)` must write the operator applied to `v` into `out`.
 * Iteration stops once the Rayleigh-quotient residual ||Av - θv|| drops
 * below tol * θ. The start vector is a fixed pseudo-random draw, so the
 * result is deterministic.
 */
template <class ApplyFn>
    requires(!std::is_base_of_v<Eigen::EigenBase<std::decay_t<ApplyFn>>, std::decay_t<ApplyFn>>)
EigenEstimate top_eigenvalue(ApplyFn&& apply, Index p, double tol, std::size_t max_iters = 100000,
                             std::uint64_t seed = 0x5eed)
{
    if (!(tol > 0.0)) throw DomainError("top_eigenvalue: tol must be positive");
    if (p < 1) throw DomainError("top_eigenvalue: dimension must be positive");

    Rng rng(seed, stream_id(0, StreamPurpose::Solver, 0, 0));
    Vector v(p);
    for (Index i = 0; i < p; ++i) v(i) = 1.0 + 0.5 * rng.normal();
    v.normalize();

    Vector av(p);
    double theta = 0.0;
    for (std::size_t it = 1; it <= max_iters; ++it) {
        apply(v, av);
        theta = v.dot(av);
        const double av_norm = av.norm();
        if (av_norm == 0.0) return {0.0, it};
        const double resid = (av - theta * v).norm();
        if (resid <= tol * std::abs(theta)) return {theta, it};
        v = av / av_norm;
    }
    throw ConvergenceError("top_eigenvalue: power iteration did not converge", theta, max_iters);
}

/// Convenience overload for an explicit symmetric matrix.
inline EigenEstimate top_eigenvalue(const DenseMatrix& m, double tol, std::size_t max_iters = 100000)
{
    if (m.rows() != m.cols()) throw DimensionError("top_eigenvalue: matrix must be square");
    return top_eigenvalue([&](const Vector& v, Vector& out) { out.noalias() = m * v; }, m.rows(), tol,
                          max_iters);
}

} // namespace ihtlab
