#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <ihtlab/iht_solver.hpp>
#include <ihtlab/risk_eval.hpp>

using namespace ihtlab;

namespace {

GenerativeSpec linear_spec(Index p, Index k_bar, double sigma, std::uint64_t seed)
{
    return make_sparse_spec(ModelKind::LinearGaussian, p, k_bar, 1.0, sigma, seed);
}

GenerativeSpec logistic_spec(Index p, Index k_bar, double magnitude, std::uint64_t seed)
{
    return make_sparse_spec(ModelKind::LogisticGaussian, p, k_bar, magnitude, 0.0, seed);
}

GenerativeSpec with_w_bar(GenerativeSpec spec, Vector w)
{
    spec.w_bar = DenseVector(std::move(w));
    spec.k_bar = spec.p;
    return spec;
}

// Plain Monte Carlo over full feature vectors and sampled labels; shares no code with mc_mean.
double naive_logistic_risk(const Vector& w, const Vector& w_bar, std::size_t draws, std::uint64_t seed)
{
    Rng rng(seed, 12345);
    const LossModel m(LossKind::Logistic);
    Vector x(w.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        for (Index j = 0; j < x.size(); ++j) x(j) = rng.normal();
        const double y = rng.uniform() < 1.0 / (1.0 + std::exp(-2.0 * w_bar.dot(x))) ? 1.0 : -1.0;
        sum += m.value(w.dot(x), y);
    }
    return sum / static_cast<double>(draws);
}

} // namespace

TEST(PopulationRiskLinear, MinimumAtTruth)
{
    const auto spec = linear_spec(10, 3, 0.8, 1);
    const auto r = population_risk_linear(spec.w_bar.values(), spec);
    EXPECT_EQ(r.value, 0.5 * 0.8 * 0.8);
    EXPECT_EQ(r.std_error, 0.0);
    EXPECT_EQ(r.n_mc, 0u);
}

TEST(PopulationRiskLinear, UnitVectorExample)
{
    Vector e1 = Vector::Zero(4);
    e1(0) = 1.0;
    const auto spec = with_w_bar(linear_spec(4, 1, 1.0, 2), e1);
    EXPECT_EQ(population_risk_linear(Vector::Zero(4), spec).value, 1.0);
}

TEST(PopulationRiskLinear, IdentityWithSquaredDistance)
{
    const auto spec = linear_spec(12, 4, 1.3, 3);
    Rng rng(3, 0);
    for (int i = 0; i < 100; ++i) {
        Vector w(12);
        for (Index j = 0; j < 12; ++j) w(j) = rng.normal();
        const double v = population_risk_linear(w, spec).value - 0.5 * 1.3 * 1.3;
        ASSERT_NEAR(v, 0.5 * (w - spec.w_bar.values()).squaredNorm(), 1e-13 * (1 + v));
    }
}

TEST(PopulationRiskLinear, Errors)
{
    auto spec = linear_spec(5, 2, 1.0, 4);
    EXPECT_THROW(population_risk_linear(Vector::Zero(4), spec), DimensionError);
    spec.normalize_features = true;
    EXPECT_THROW(population_risk_linear(Vector::Zero(5), spec), DomainError);
    EXPECT_THROW(population_risk_linear(Vector::Zero(5), logistic_spec(5, 2, 1.0, 4)), DomainError);
}

TEST(PopulationRiskMc, LinearMatchesClosedForm)
{
    const auto spec = linear_spec(15, 4, 0.9, 5);
    Vector w = Vector::Zero(15);
    w(0) = 0.7;
    w(3) = -1.1;
    const double exact = population_risk_linear(w, spec).value;
    const auto mc = population_risk_mc(w, spec, 1000000, 6);
    EXPECT_EQ(mc.n_mc, 1000000u);
    EXPECT_GT(mc.std_error, 0.0);
    EXPECT_LE(std::abs(mc.value - exact), 3.0 * mc.std_error);
}

TEST(PopulationRiskMc, LogisticAtZeroIsLog2)
{
    const auto spec = logistic_spec(10, 3, 1.0, 7);
    const auto r = population_risk_mc(Vector::Zero(10), spec, 5000, 1);
    EXPECT_LE(std::abs(r.value - std::numbers::ln2), 3.0 * r.std_error + 1e-14);
}

TEST(PopulationRiskMc, AgreesWithNaiveSampler)
{
    const auto spec = logistic_spec(8, 3, 0.8, 8);
    Vector w = spec.w_bar.values() * 0.6;
    w(0) += 0.3;
    const auto r = population_risk_mc(w, spec, 400000, 9);
    const double naive = naive_logistic_risk(w, spec.w_bar.values(), 400000, 10);
    // naive estimator has larger variance (labels are sampled), so allow 4 of its own std errors
    EXPECT_NEAR(r.value, naive, 4.0 * std::sqrt(0.6 / 400000.0) + 3.0 * r.std_error);
}

TEST(PopulationRiskMc, NormalizedFeaturesUseFullDraws)
{
    auto spec = logistic_spec(6, 2, 1.0, 11);
    spec.normalize_features = true;
    const auto r = population_risk_mc(spec.w_bar.values(), spec, 20000, 1);
    EXPECT_TRUE(std::isfinite(r.value));
    EXPECT_GT(r.value, 0.0);
    EXPECT_LT(r.value, std::numbers::ln2);
}

TEST(PopulationRiskMc, StderrShrinksBySqrtTwo)
{
    const auto spec = logistic_spec(10, 3, 1.0, 12);
    const Vector w = 0.5 * spec.w_bar.values();
    std::vector<double> ratios;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const double a = population_risk_mc(w, spec, 20000, s).std_error;
        const double b = population_risk_mc(w, spec, 40000, s + 100).std_error;
        ratios.push_back(a / b);
    }
    const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
    EXPECT_GE(mean, 1.2);
    EXPECT_LE(mean, 1.7);
}

TEST(PopulationRiskMc, DeterministicAndValidated)
{
    const auto spec = logistic_spec(5, 2, 1.0, 13);
    const auto a = population_risk_mc(Vector::Ones(5), spec, 1000, 3);
    const auto b = population_risk_mc(Vector::Ones(5), spec, 1000, 3);
    EXPECT_EQ(a.value, b.value);
    EXPECT_THROW(population_risk_mc(Vector::Ones(5), spec, 0, 3), DomainError);
    EXPECT_THROW(population_risk_mc(Vector::Ones(4), spec, 10, 3), DimensionError);
}

TEST(OptimalSparseRisk, LinearAboveTrueSparsity)
{
    const auto spec = linear_spec(10, 3, 1.5, 14);
    for (Index k : {3, 4, 10}) EXPECT_EQ(optimal_sparse_risk(spec, k).value, 0.5 * 1.5 * 1.5);
}

TEST(OptimalSparseRisk, LinearBelowSparsityMatchesBruteForce)
{
    Rng rng(15, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = static_cast<Index>(3 + rng.below(10)); // p <= 12
        Vector w(p);
        for (Index i = 0; i < p; ++i) w(i) = rng.normal();
        const auto spec = with_w_bar(linear_spec(p, 1, 0.5, 1), w);
        for (Index k = 0; k <= p; ++k) {
            // every support S of size k: best value on S is w_S, risk = |w_{S^c}|^2/2 + sigma^2/2
            double best = INFINITY;
            for (unsigned mask = 0; mask < (1u << p); ++mask) {
                if (__builtin_popcount(mask) != k) continue;
                double tail = 0.0;
                for (Index i = 0; i < p; ++i)
                    if (!(mask >> i & 1u)) tail += w(i) * w(i);
                best = std::min(best, 0.5 * tail + 0.125);
            }
            ASSERT_NEAR(optimal_sparse_risk(spec, k).value, best, 1e-14) << "p=" << p << " k=" << k;
        }
    }
}

TEST(OptimalSparseRisk, NonincreasingInK)
{
    const auto spec = with_w_bar(linear_spec(20, 1, 1.0, 16), gen_gap_model(20, 5, 0.2, 16).values());
    double prev = INFINITY;
    for (Index k = 0; k <= 20; ++k) {
        const double v = optimal_sparse_risk(spec, k).value;
        ASSERT_LE(v, prev);
        prev = v;
    }
}

TEST(OptimalSparseRisk, Logistic)
{
    const auto spec = logistic_spec(10, 3, 1.0, 17);
    EXPECT_THROW(optimal_sparse_risk(spec, 2), DomainError);
    const auto r = optimal_sparse_risk(spec, 3, 50000, 4);
    const auto direct = population_risk_mc(spec.w_bar.values(), spec, 50000, 4);
    EXPECT_EQ(r.value, direct.value);
    EXPECT_GT(r.std_error, 0.0);
}

TEST(ExcessRisk, ZeroAtTruth)
{
    const auto lin = linear_spec(10, 3, 1.0, 18);
    EXPECT_EQ(excess_risk(lin.w_bar.values(), lin, 3).value, 0.0);
    const auto logit = logistic_spec(10, 3, 1.0, 18);
    const auto r = excess_risk(logit.w_bar.values(), logit, 3, 10000, 1);
    EXPECT_LE(std::abs(r.value), 3.0 * r.std_error + 1e-15);
}

TEST(ExcessRisk, LinearAtZeroIsHalfSquaredNorm)
{
    const auto spec = linear_spec(12, 4, 0.7, 19);
    EXPECT_NEAR(excess_risk(Vector::Zero(12), spec, 4).value, 0.5 * spec.w_bar.values().squaredNorm(), 1e-15);
}

TEST(ExcessRisk, NonnegativeOnIhtOutputs)
{
    const LossModel logistic(LossKind::Logistic), squared(LossKind::Squared);
    for (int trial = 0; trial < 100; ++trial) {
        const bool logit = trial % 2 == 0;
        const auto spec = logit ? logistic_spec(20, 3, 1.0, 100 + trial) : linear_spec(20, 3, 1.0, 100 + trial);
        Rng rng(static_cast<std::uint64_t>(trial), 1);
        const Dataset d = generate(spec, 80, rng);
        IhtConfig cfg;
        cfg.k = 3 + trial % 3;
        cfg.max_iters = 50;
        cfg.refit = true;
        const IhtTrace tr = iht_run(d, logit ? logistic : squared, cfg);
        const auto r = excess_risk(tr.output(), spec, 3, 20000, trial);
        ASSERT_GE(r.value, -3.0 * r.std_error - 1e-12) << "trial " << trial;
    }
}

TEST(ExcessRisk, SeedsAgreeWithinCombinedError)
{
    const auto spec = logistic_spec(15, 3, 1.0, 20);
    Vector w = 0.5 * spec.w_bar.values();
    w(spec.w_bar.values().size() - 1) += 0.2;
    const auto a = excess_risk(w, spec, 3, 50000, 1);
    const auto b = excess_risk(w, spec, 3, 50000, 2);
    EXPECT_LE(std::abs(a.value - b.value), 6.0 * std::hypot(a.std_error, b.std_error));
}

TEST(ExcessRisk, PairedLogisticMatchesDifferenceOfNaiveRisks)
{
    const auto spec = logistic_spec(6, 2, 1.0, 21);
    const Vector w = 0.3 * spec.w_bar.values() + 0.1 * Vector::Ones(6);
    const auto r = excess_risk(w, spec, 2, 200000, 5);
    const double naive = naive_logistic_risk(w, spec.w_bar.values(), 400000, 6) -
                         naive_logistic_risk(spec.w_bar.values(), spec.w_bar.values(), 400000, 7);
    EXPECT_NEAR(r.value, naive, 4.0 * std::sqrt(2 * 0.7 / 400000.0) + 3.0 * r.std_error);
}

TEST(ExcessRisk, Errors)
{
    const auto spec = logistic_spec(6, 3, 1.0, 22);
    EXPECT_THROW(excess_risk(Vector::Zero(6), spec, 2), DomainError);
    EXPECT_THROW(excess_risk(Vector::Zero(5), spec, 3), DimensionError);
}

TEST(GradientConcentration, NoiselessIsExactlyZero)
{
    const auto spec = linear_spec(20, 3, 0.0, 23);
    EXPECT_EQ(gradient_concentration_check(spec, spec.w_bar.values(), 100, 20, 1), 0.0);
}

TEST(GradientConcentration, WithinSubGaussianBound)
{
    const double sigma = 1.0;
    const auto spec = linear_spec(100, 5, sigma, 24);
    const double q = gradient_concentration_check(spec, spec.w_bar.values(), 1000, 200, 2);
    EXPECT_LE(q, 1.5 * sigma * std::sqrt(2.0 * std::log(100 / 0.1) / 1000.0));
    EXPECT_GT(q, 0.0);
}

TEST(GradientConcentration, QuarterRateWhenNQuadruples)
{
    const auto spec = linear_spec(50, 5, 1.0, 25);
    const double a = gradient_concentration_check(spec, spec.w_bar.values(), 250, 200, 3);
    const double b = gradient_concentration_check(spec, spec.w_bar.values(), 1000, 200, 4);
    EXPECT_GE(a / b, 1.6);
    EXPECT_LE(a / b, 2.6);
}

TEST(GradientConcentration, RejectsZeroReps)
{
    const auto spec = linear_spec(5, 1, 1.0, 26);
    EXPECT_THROW(gradient_concentration_check(spec, spec.w_bar.values(), 10, 0, 1), DomainError);
}
