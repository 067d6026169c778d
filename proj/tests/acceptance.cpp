// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <ihtlab/ihtlab.hpp>

using namespace ihtlab;

namespace {

struct Outcome
{
    bool pass;
    std::string detail;
};

unsigned worker_count()
{
    return std::max(2u, std::thread::hardware_concurrency());
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1: population IHT on the linear gap model against the closed-form trajectory
Outcome closed_form_trajectory()
{
    const Index p = 50, k_bar = 5;
    const double eta = 0.5, gap = 0.5;
    const DenseVector wt = gen_gap_model(p, k_bar, gap, 1);
    const auto trace = iht_stability_trace(linear_population_gradient(wt), k_bar, eta, 20, DenseVector::zeros(p));
    const Vector wj = hard_threshold(wt, k_bar).values.values();
    double worst = 0.0;
    for (std::size_t t = 1; t <= 20; ++t) {
        const Vector want = (1.0 - std::pow(1.0 - eta, static_cast<double>(t))) * wj;
        worst = std::max(worst, (trace.iterates[t].values() - want).lpNorm<Eigen::Infinity>());
    }
    const bool margins_ok = std::all_of(trace.report.margins.begin(), trace.report.margins.end(),
                                        [&](double m) { return m >= eta * gap; });
    return {worst <= 1e-10 && margins_ok,
            "max coord err " + fmt("%.3g", worst) + ", min margin " + fmt("%.6g", trace.report.min_margin)};
}

// 2: hard thresholding against a full stable sort
Outcome top_k_oracle()
{
    static const double levels[] = {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 3.25};
    Rng rng(2, 0);
    int mismatches = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto p = static_cast<Index>(1 + rng.below(64));
        Vector w(p);
        for (Index i = 0; i < p; ++i) w(i) = rng.uniform() < 0.5 ? levels[rng.below(8)] : rng.normal();
        const auto k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p + 1)));

        std::vector<std::pair<double, Index>> items;
        for (Index i = 0; i < p; ++i) items.emplace_back(-std::abs(w(i)), i);
        std::sort(items.begin(), items.end());
        Vector want = Vector::Zero(p);
        std::vector<Index> idx;
        for (Index j = 0; j < k; ++j) {
            const Index i = items[static_cast<std::size_t>(j)].second;
            if (w(i) != 0.0) {
                want(i) = w(i);
                idx.push_back(i);
            }
        }
        std::sort(idx.begin(), idx.end());
        const auto got = hard_threshold(DenseVector(w), k);
        mismatches += !(got.values.values() == want && got.support.indices() == idx);
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 10000"};
}

// 3: analytic gradients against central differences
Outcome gradient_check()
{
    Rng rng(3, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool logistic = trial % 2 == 1;
        const auto p = static_cast<Index>(2 + rng.below(15));
        const auto n = static_cast<Index>(5 + rng.below(40));
        const auto spec = make_sparse_spec(logistic ? ModelKind::LogisticGaussian : ModelKind::LinearGaussian, p,
                                           1, 1.0, 1.0, static_cast<std::uint64_t>(trial));
        const Dataset d = generate(spec, n, rng);
        const LossModel m = spec.loss();
        Vector w(p);
        for (Index i = 0; i < p; ++i) w(i) = rng.normal();
        const Vector g = empirical_gradient(m, w, d);
        Vector fd(p);
        for (Index i = 0; i < p; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(w(i)));
            Vector a = w, b = w;
            a(i) += h;
            b(i) -= h;
            fd(i) = (empirical_risk(m, a, d) - empirical_risk(m, b, d)) / (2.0 * h);
        }
        worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-8));
    }
    return {worst <= 1e-5, "max relative error " + fmt("%.3g", worst)};
}

// 4: iterations to reach the refit objective within 1e-6 against 10 (L/mu) log(F_S(0)/1e-6)
Outcome convergence_schedule()
{
    const Index n = 400, p = 100, k_bar = 5, k = 2 * k_bar;
    const LossModel sq(LossKind::Squared);
    int ok = 0;
    double worst_ratio = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const auto spec = make_sparse_spec(ModelKind::LinearGaussian, p, k_bar, 1.0, 0.0, 400 + inst);
        Rng rng(4, static_cast<std::uint64_t>(inst));
        const Dataset d = generate(spec, n, rng);
        ConstantOptions co;
        co.seed = static_cast<std::uint64_t>(inst);
        const auto c = estimate_constants(sq, d, 3 * k, 1.0, co);
        IhtConfig ic;
        ic.k = k;
        ic.max_iters = 5000;
        ic.obj_tol = 0.0;
        ic.refit = true;
        const IhtTrace tr = iht_run(d, sq, ic);
        const double f_opt = empirical_risk(sq, tr.output().values(), d);
        std::size_t hit = tr.records.size();
        for (std::size_t t = 0; t < tr.records.size(); ++t)
            if (tr.records[t].objective - f_opt <= 1e-6) {
                hit = t;
                break;
            }
        const double f0 = tr.records.front().objective;
        const double budget = 10.0 * c.L_smooth / *c.mu_strong * std::log(f0 / 1e-6);
        worst_ratio = std::max(worst_ratio, static_cast<double>(hit) / budget);
        ok += static_cast<double>(hit) <= budget;
    }
    return {ok == 20, std::to_string(ok) + "/20 within budget, worst iterations/budget " + fmt("%.3g", worst_ratio)};
}

// 5: leave-one-out stability of the regularized restricted ERM
Outcome uniform_stability_rate()
{
    const double G = 2.0; // logistic slope bound on unit-norm rows
    const Index p = 20;
    const SupportSet J({0, 1, 2, 3, 4});
    const LossModel logit(LossKind::Logistic);
    bool bound_ok = true, halving_ok = true;
    std::ostringstream detail;
    for (double lambda : {0.1, 1.0}) {
        std::vector<double> medians;
        for (Index n : {100, 200, 400}) {
            std::vector<double> gammas;
            for (int inst = 0; inst < 50; ++inst) {
                auto spec = make_sparse_spec(ModelKind::LogisticGaussian, p, 3, 1.0, 0.0,
                                             static_cast<std::uint64_t>(1000 * n + inst));
                spec.normalize_features = true;
                Rng rng(5, static_cast<std::uint64_t>(1000 * n + inst));
                const Dataset d = generate(spec, n, rng);
                const double g = loo_uniform_stability(d, logit, J, lambda, 10, static_cast<std::uint64_t>(inst), &spec);
                gammas.push_back(g);
                bound_ok = bound_ok && g <= 4.0 * G * G / (lambda * static_cast<double>(n)) + 1e-4;
            }
            std::nth_element(gammas.begin(), gammas.begin() + 25, gammas.end());
            const double hi = gammas[25];
            std::nth_element(gammas.begin(), gammas.begin() + 24, gammas.end());
            medians.push_back(0.5 * (hi + gammas[24]));
        }
        detail << "lambda=" << lambda << " medians";
        for (std::size_t i = 0; i < medians.size(); ++i) {
            detail << ' ' << fmt("%.4g", medians[i]);
            if (i > 0) {
                const double factor = medians[i - 1] / medians[i] / 2.0;
                halving_ok = halving_ok && factor >= 1.0 / 3.0 && factor <= 3.0;
            }
        }
        detail << "; ";
    }
    detail << (bound_ok ? "bound held" : "bound violated");
    return {bound_ok && halving_ok, detail.str()};
}

ExperimentResult desk_run(Protocol protocol, unsigned threads)
{
    auto cfg = preset("desk", protocol);
    cfg.threads = threads;
    return run_experiment(cfg);
}

std::string csv_bytes(const ExperimentResult& r)
{
    std::ostringstream os;
    write_result_csv(r, os);
    return os.str();
}

ExperimentResult scaling_result, stability_result;

// 6: excess risk falls with n and grows with k
Outcome scaling_trend()
{
    scaling_result = desk_run(Protocol::SparsityScaling, worker_count());
    if (scaling_result.failures()) return {false, std::to_string(scaling_result.failures()) + " failed rows"};
    const auto pts = summarize(scaling_result);
    std::map<double, std::vector<std::pair<Index, double>>> by_k;
    std::map<Index, std::pair<std::vector<double>, std::vector<double>>> by_n;
    for (const auto& sp : pts) {
        by_k[sp.grid_value].emplace_back(sp.n, sp.mean_excess);
        by_n[sp.n].first.push_back(sp.grid_value);
        by_n[sp.n].second.push_back(sp.mean_excess);
    }
    bool decreasing = true;
    for (auto& [k, series] : by_k) {
        std::sort(series.begin(), series.end());
        for (std::size_t i = 1; i < series.size(); ++i) decreasing = decreasing && series[i].second < series[i - 1].second;
    }
    bool correlated = true;
    std::ostringstream detail;
    detail << "spearman(k, excess) per n:";
    for (const auto& [n, xy] : by_n) {
        const double rho = spearman(xy.first, xy.second);
        correlated = correlated && rho > 0.5;
        detail << ' ' << n << ':' << fmt("%.3f", rho);
    }
    detail << (decreasing ? "; decreasing in n" : "; NOT decreasing in n");
    return {decreasing && correlated, detail.str()};
}

// 7: log excess risk falls with the gap; population margins respect eta * gap
Outcome stability_trend()
{
    const auto cfg = preset("desk", Protocol::StabilitySweep);
    stability_result = desk_run(Protocol::StabilitySweep, worker_count());
    if (stability_result.failures()) return {false, std::to_string(stability_result.failures()) + " failed rows"};
    bool margins_ok = true;
    for (const auto& r : stability_result.rows) margins_ok = margins_ok && r.min_margin >= *cfg.eta * r.grid_value;
    std::map<Index, std::pair<std::vector<double>, std::vector<double>>> by_n;
    for (const auto& sp : summarize(stability_result)) {
        by_n[sp.n].first.push_back(sp.grid_value);
        by_n[sp.n].second.push_back(sp.mean_log_excess);
    }
    bool anti = true;
    std::ostringstream detail;
    detail << "spearman(gap, log excess) per n:";
    for (const auto& [n, xy] : by_n) {
        const double rho = spearman(xy.first, xy.second, 1e-9);
        anti = anti && rho < -0.5;
        detail << ' ' << n << ':' << fmt("%.3f", rho);
    }
    detail << (margins_ok ? "; margins >= eta*gap" : "; margin below eta*gap");
    return {anti && margins_ok, detail.str()};
}

// 8: strong-signal instances keep supp(w_bar) inside the IHT support
Outcome strong_signal_recovery()
{
    const Index p = 100, n = 1000, k_bar = 5, k = 2 * k_bar;
    const double delta = 0.1, sigma = 1.0;
    const LossModel sq(LossKind::Squared);
    int recovered = 0;
    double mean_margin = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Rng rng(8, static_cast<std::uint64_t>(rep));
        DenseMatrix x(n, p);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        Vector eps(n);
        for (Index i = 0; i < n; ++i) eps(i) = sigma * rng.normal();
        // per-sample slope bound at w_bar, and restricted curvature at size 4k
        const double G = (eps.cwiseAbs().array() * x.rowwise().norm().array()).maxCoeff();
        ConstantOptions co;
        co.seed = static_cast<std::uint64_t>(rep);
        const double mu = *estimate_constants(sq, Dataset(x, eps, ResponseKind::Real), 4 * k, 1.0, co).mu_strong;
        const double thr = strong_signal_threshold(0.0, mu, G, k, n, p, delta); // well-specified: grad F(w_bar) = 0
        Rng sig(8, 1000 + static_cast<std::uint64_t>(rep));
        const DenseVector w_bar = random_sparse_signal(p, k_bar, 2.0 * thr, sig);
        if (!strong_signal_predicate(w_bar, 0.0, mu, G, k, n, p, delta)) return {false, "construction failed"};
        mean_margin += min_nonzero_magnitude(w_bar.values()) / thr / 50.0;
        const Dataset d(x, x * w_bar.values() + eps, ResponseKind::Real);
        IhtConfig ic;
        ic.k = k;
        ic.max_iters = 500;
        const IhtTrace tr = iht_run(d, sq, ic);
        recovered += tr.last().support.includes(SupportSet::of(w_bar));
    }
    return {recovered >= 45, std::to_string(recovered) + "/50 recovered, signal/threshold " + fmt("%.2f", mean_margin)};
}

// 9: 90th percentile of the gradient sup-norm at w_bar
Outcome gradient_concentration()
{
    const double sigma = 1.0;
    const Index p = 100, n = 1000;
    const auto spec = make_sparse_spec(ModelKind::LinearGaussian, p, 5, 1.0, sigma, 9);
    const double q = gradient_concentration_check(spec, spec.w_bar.values(), n, 200, 9, 0.1);
    const double bound = 1.5 * sigma * std::sqrt(2.0 * std::log(p / 0.1) / static_cast<double>(n));
    return {q <= bound, "q90 " + fmt("%.4f", q) + " vs bound " + fmt("%.4f", bound)};
}

// 10: full desk runs give the same bytes on one thread as on many
Outcome determinism()
{
    const bool a = csv_bytes(desk_run(Protocol::SparsityScaling, 1)) == csv_bytes(scaling_result);
    const bool b = csv_bytes(desk_run(Protocol::StabilitySweep, 1)) == csv_bytes(stability_result);
    return {a && b, std::string("scaling ") + (a ? "identical" : "differs") + ", stability " +
                        (b ? "identical" : "differs") + " (1 vs " + std::to_string(worker_count()) + " threads)"};
}

} // namespace

int main()
{
    struct Criterion
    {
        int id;
        double limit_s; // 0 means no runtime limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, 1, closed_form_trajectory},   {2, 5, top_k_oracle},
        {3, 10, gradient_check},          {4, 30, convergence_schedule},
        {5, 60, uniform_stability_rate},  {6, 300, scaling_trend},
        {7, 300, stability_trend},        {8, 60, strong_signal_recovery},
        {9, 30, gradient_concentration},  {10, 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.limit_s == 0 || secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s criterion %d: %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", c.id, o.detail.c_str(), secs,
                    in_time ? "" : ", over time limit");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
