#pragma once
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <ihtlab/core_linalg.hpp>
#include <ihtlab/losses.hpp>
#include <ihtlab/random.hpp>

namespace ihtlab {

enum class ModelKind { LinearGaussian, LogisticGaussian };

/// Ground truth of a synthetic model: x ~ N(0, I_p), response from w_bar.
struct GenerativeSpec
{
    ModelKind kind = ModelKind::LinearGaussian;
    Index p = 0;
    Index k_bar = 0;
    double sigma = 0.0;          // noise std, linear only
    double gap = 0.0;            // signal gap used to build w_bar, 0 if none
    DenseVector w_bar;
    std::uint64_t seed = 0;
    bool normalize_features = false; // rescale each x_i to unit norm

    LossModel loss() const
    {
        return LossModel(kind == ModelKind::LinearGaussian ? LossKind::Squared : LossKind::Logistic);
    }

    /// Throws if the invariants on the fields do not hold.
    void validate() const
    {
        if (p < 1) throw DomainError("GenerativeSpec: p must be positive");
        if (w_bar.size() != p) throw DimensionError("GenerativeSpec: w_bar must have dimension p");
        if (!(sigma >= 0.0)) throw DomainError("GenerativeSpec: sigma must be nonnegative");
        if (!(gap >= 0.0)) throw DomainError("GenerativeSpec: gap must be nonnegative");
        if (static_cast<Index>(SupportSet::of(w_bar).size()) > k_bar)
            throw DomainError("GenerativeSpec: w_bar has more than k_bar nonzeros");
    }
};

/// w_bar = +-magnitude on a uniformly random k_bar-subset.
inline DenseVector random_sparse_signal(Index p, Index k_bar, double magnitude, Rng& rng)
{
    if (k_bar < 0 || k_bar > p) throw DomainError("random_sparse_signal: need 0 <= k_bar <= p");
    Vector w = Vector::Zero(p);
    for (auto i : sample_without_replacement(rng, static_cast<std::size_t>(p), static_cast<std::size_t>(k_bar)))
        w(static_cast<Index>(i)) = magnitude * rng.sign();
    return DenseVector(std::move(w));
}

/// Well-specified sparse model with a +-magnitude signal drawn from `seed`.
inline GenerativeSpec make_sparse_spec(ModelKind kind, Index p, Index k_bar, double magnitude, double sigma,
                                       std::uint64_t seed)
{
    Rng rng(seed, stream_id(0, StreamPurpose::Model, 0, 0));
    GenerativeSpec spec;
    spec.kind = kind;
    spec.p = p;
    spec.k_bar = k_bar;
    spec.sigma = kind == ModelKind::LinearGaussian ? sigma : 0.0;
    spec.w_bar = random_sparse_signal(p, k_bar, magnitude, rng);
    spec.seed = seed;
    spec.validate();
    return spec;
}

namespace detail {

inline DenseMatrix gaussian_design(Index n, Index p, bool normalize, Rng& rng)
{
    DenseMatrix x(n, p);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
        if (normalize) {
            const double norm = x.row(i).norm();
            if (norm > 0.0) x.row(i) /= norm;
        }
    }
    return x;
}

} // namespace detail

/// y_i = w_bar'x_i + eps_i with eps_i ~ N(0, sigma^2).
inline Dataset gen_linear(const GenerativeSpec& spec, Index n, Rng& rng)
{
    if (spec.kind != ModelKind::LinearGaussian) throw DomainError("gen_linear: spec is not linear");
    if (n < 1) throw DomainError("gen_linear: n must be >= 1");
    DenseMatrix x = detail::gaussian_design(n, spec.p, spec.normalize_features, rng);
    Vector y = x * spec.w_bar.values();
    for (Index i = 0; i < n; ++i) y(i) += spec.sigma * rng.normal();
    return Dataset(std::move(x), std::move(y), ResponseKind::Real);
}

inline Dataset gen_linear(const GenerativeSpec& spec, Index n)
{
    Rng rng(spec.seed, stream_id(0, StreamPurpose::TrainData, 0, 0));
    return gen_linear(spec, n, rng);
}

/// y_i = +1 with probability s(2 w_bar'x_i), else -1.
inline Dataset gen_logistic(const GenerativeSpec& spec, Index n, Rng& rng)
{
    if (spec.kind != ModelKind::LogisticGaussian) throw DomainError("gen_logistic: spec is not logistic");
    if (n < 1) throw DomainError("gen_logistic: n must be >= 1");
    DenseMatrix x = detail::gaussian_design(n, spec.p, spec.normalize_features, rng);
    const Vector score = x * spec.w_bar.values();
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = rng.uniform() < sigmoid(2.0 * score(i)) ? 1.0 : -1.0;
    return Dataset(std::move(x), std::move(y), ResponseKind::Binary);
}

inline Dataset gen_logistic(const GenerativeSpec& spec, Index n)
{
    Rng rng(spec.seed, stream_id(0, StreamPurpose::TrainData, 0, 0));
    return gen_logistic(spec, n, rng);
}

/// Dispatch on spec.kind.
inline Dataset generate(const GenerativeSpec& spec, Index n, Rng& rng)
{
    return spec.kind == ModelKind::LinearGaussian ? gen_linear(spec, n, rng) : gen_logistic(spec, n, rng);
}

/*
 * Draws w_hat ~ N(0, I_p) and pushes its top-k_bar entries away from zero
 * by `gap`, so |[w]_(k_bar)| - |[w]_(k_bar+1)| >= gap holds in floating point.
 */
inline DenseVector gen_gap_model(Index p, Index k_bar, double gap, std::uint64_t seed, double scale = 1.0)
{
    if (k_bar < 1 || k_bar >= p) throw DomainError("gen_gap_model: need 1 <= k_bar < p");
    if (!(gap >= 0.0)) throw DomainError("gen_gap_model: gap must be nonnegative");
    Rng rng(seed, stream_id(0, StreamPurpose::Model, 1, 0));
    Vector w(p);
    for (Index i = 0; i < p; ++i) w(i) = scale * rng.normal();
    if (gap == 0.0) return DenseVector(std::move(w));

    const auto top = detail::top_k_order(w, k_bar);
    for (Index j : top) w(j) += gap * (w(j) >= 0.0 ? 1.0 : -1.0);
    // rounding in |a| + gap - |b| can land a hair below gap
    while (detail::thresholding_margin_raw(w, k_bar) < gap)
        for (Index j : top) w(j) = std::nextafter(w(j), w(j) >= 0.0 ? HUGE_VAL : -HUGE_VAL);
    return DenseVector(std::move(w));
}

/// Spec for the signal-gap experiment: w_bar is the dense gap model itself.
inline GenerativeSpec make_gap_spec(Index p, Index k_bar, double gap, double sigma, std::uint64_t seed,
                                    double scale = 1.0)
{
    GenerativeSpec spec;
    spec.kind = ModelKind::LinearGaussian;
    spec.p = p;
    spec.k_bar = p; // dense truth; k_bar-sparse optimum is evaluated by risk_eval
    spec.sigma = sigma;
    spec.gap = gap;
    spec.w_bar = gen_gap_model(p, k_bar, gap, seed, scale);
    spec.seed = seed;
    spec.validate();
    return spec;
}

/// Adds entries of magnitude tail_mass / m with random signs on the m coordinates outside supp(w_bar).
inline DenseVector misspecify(const DenseVector& w_bar, double tail_mass, std::uint64_t seed)
{
    if (!(tail_mass >= 0.0)) throw DomainError("misspecify: tail_mass must be nonnegative");
    const SupportSet support = SupportSet::of(w_bar);
    const auto m = static_cast<Index>(w_bar.size() - static_cast<Index>(support.size()));
    if (tail_mass == 0.0 || m == 0) return w_bar;
    Rng rng(seed, stream_id(0, StreamPurpose::Model, 2, 0));
    Vector w = w_bar.values();
    const double each = tail_mass / static_cast<double>(m);
    for (Index i = 0; i < w.size(); ++i)
        if (!support.contains(i)) w(i) = each * rng.sign();
    return DenseVector(std::move(w));
}

// ---------------------------------------------------------------------------
// CSV exchange: header "0,1,...,p-1,y", one sample per row, 17 significant digits.

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_dataset_csv(const Dataset& data, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (Index j = 0; j < data.p(); ++j) out << j << ',';
    out << "y\n";
    for (Index i = 0; i < data.n(); ++i) {
        for (Index j = 0; j < data.p(); ++j) out << format_double(data.x()(i, j)) << ',';
        out << format_double(data.y()(i)) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline Dataset read_dataset_csv(const std::string& path, ResponseKind kind)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path + "': missing header");
    Index cols = 1;
    for (char c : line) cols += c == ',';
    if (line.empty() || line.substr(line.rfind(',') + 1) != "y")
        throw IoError("'" + path + "': last header column must be 'y'");
    const Index p = cols - 1;

    std::vector<double> values;
    Index rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Index count = 0;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) throw IoError("'" + path + "': bad number '" + cell + "'");
            values.push_back(v);
            ++count;
        }
        if (count != cols)
            throw IoError("'" + path + "': row " + std::to_string(rows + 1) + " has " +
                          std::to_string(count) + " fields, expected " + std::to_string(cols));
        ++rows;
    }
    DenseMatrix x(rows, p);
    Vector y(rows);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < p; ++j) x(i, j) = values[static_cast<std::size_t>(i * cols + j)];
        y(i) = values[static_cast<std::size_t>(i * cols + p)];
    }
    return Dataset(std::move(x), std::move(y), kind);
}

} // namespace ihtlab
