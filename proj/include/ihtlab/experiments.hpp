#pragma once
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <ihtlab/core_linalg.hpp>
#include <ihtlab/iht_solver.hpp>
#include <ihtlab/risk_eval.hpp>
#include <ihtlab/stability.hpp>
#include <ihtlab/synth_data.hpp>

namespace ihtlab {

enum class Protocol : std::uint8_t { SparsityScaling = 1, StabilitySweep = 2 };

inline const char* to_string(Protocol p) noexcept
{
    return p == Protocol::SparsityScaling ? "scaling" : "stability";
}

/*
 * Simulation settings. `grid` holds k / k_bar multipliers for the scaling
 * protocol and signal gaps for the stability sweep.
 */
struct ExperimentConfig
{
    Protocol protocol = Protocol::SparsityScaling;
    ModelKind model = ModelKind::LogisticGaussian; // scaling protocol only
    Index p = 200;
    Index k_bar = 10;
    std::vector<double> grid{1, 2, 3, 4};
    std::vector<double> n_over_p{2, 5, 10};
    std::size_t replicates = 10;
    std::optional<double> eta;   // empty means 2 / (3 L)
    std::size_t n_mc = default_n_mc;
    std::size_t T = 500;
    double obj_tol = 1e-10;
    double signal = 1.0;         // |w_bar_i| on the support, scaling protocol
    double sigma = 1.0;          // noise std for linear data
    double base_scale = 1.0;     // std of the Gaussian draw behind the gap model
    std::uint64_t seed = 2024;
    unsigned threads = 1;
    bool record_timing = false;  // wall_time stays 0 unless set, so reruns are byte-identical

    void validate() const
    {
        if (grid.empty()) throw DomainError("config: grid must be nonempty");
        if (n_over_p.empty()) throw DomainError("config: n/p grid must be nonempty");
        if (replicates < 1) throw DomainError("config: replicates must be >= 1");
        if (p < 2) throw DomainError("config: p must be >= 2");
        if (k_bar < 1 || k_bar >= p) throw DomainError("config: need 1 <= k_bar < p");
        if (T < 1) throw DomainError("config: T must be >= 1");
        if (n_mc < 1) throw DomainError("config: n_mc must be >= 1");
        if (eta && !(*eta > 0.0)) throw DomainError("config: eta must be positive");
        for (double r : n_over_p)
            if (!(r > 0.0)) throw DomainError("config: n/p values must be positive");
        for (double g : grid) {
            if (protocol == Protocol::SparsityScaling) {
                if (!(g >= 1.0)) throw DomainError("config: k/k_bar multipliers must be >= 1");
                if (sparsity_for(g) > p) throw DomainError("config: k exceeds p");
            } else if (!(g >= 0.0)) {
                throw DomainError("config: gaps must be nonnegative");
            }
        }
    }

    Index sparsity_for(double multiplier) const
    {
        return static_cast<Index>(std::llround(multiplier * static_cast<double>(k_bar)));
    }

    Index samples_for(double ratio) const
    {
        return std::max<Index>(1, static_cast<Index>(std::llround(ratio * static_cast<double>(p))));
    }
};

/// Named parameter sets: "desk" (default scale) and the full-size "paper-6.1" / "paper-6.2".
inline ExperimentConfig preset(const std::string& name, Protocol protocol)
{
    ExperimentConfig c;
    c.protocol = protocol;
    const bool scaling = protocol == Protocol::SparsityScaling;
    if (name == "paper-6.1" && !scaling) throw DomainError("preset 'paper-6.1' is a scaling preset");
    if (name == "paper-6.2" && scaling) throw DomainError("preset 'paper-6.2' is a stability preset");
    if (name != "desk" && name != "paper-6.1" && name != "paper-6.2")
        throw DomainError("unknown preset '" + name + "'");

    if (scaling) {
        c.model = ModelKind::LogisticGaussian;
        c.p = name == "desk" ? 200 : 1000;
        c.k_bar = name == "desk" ? 10 : 50;
        c.grid = {1, 2, 3, 4};
        c.n_over_p = {2, 5, 10};
    } else {
        c.model = ModelKind::LinearGaussian;
        c.p = name == "desk" ? 200 : 1000;
        c.k_bar = name == "desk" ? 20 : 100;
        c.grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
        c.n_over_p = {1, 5, 10};
        c.eta = 0.5;
        c.T = 200;
        // tail of w_tilde acts as noise of size ||w_tilde_Jc|| / sqrt(n); keep it below the gap grid
        c.base_scale = 0.15;
        c.sigma = 0.25;
    }
    return c;
}

struct ExperimentRow
{
    Protocol protocol = Protocol::SparsityScaling;
    double grid_value = 0.0; // k for scaling, gap for stability
    Index n = 0;
    std::size_t replicate = 0;
    double excess_risk = 0.0;
    double std_error = 0.0;
    double min_margin = 0.0;
    double support_jaccard = 0.0;
    std::size_t iterations_used = 0;
    double wall_time = 0.0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
    friend bool operator==(const ExperimentRow&, const ExperimentRow&) = default;
};

struct ExperimentResult
{
    std::vector<ExperimentRow> rows;

    std::size_t failures() const
    {
        return static_cast<std::size_t>(
            std::count_if(rows.begin(), rows.end(), [](const ExperimentRow& r) { return !r.ok(); }));
    }
};

/// Run fn(i) for i in [0, count) on up to `threads` workers pulling from a shared counter.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
}

namespace detail {

struct GridTask
{
    std::size_t grid_index;
    std::size_t n_index;
    std::size_t replicate;
};

inline std::vector<GridTask> enumerate_tasks(const ExperimentConfig& cfg)
{
    std::vector<GridTask> tasks;
    for (std::size_t g = 0; g < cfg.grid.size(); ++g)
        for (std::size_t n = 0; n < cfg.n_over_p.size(); ++n)
            for (std::size_t r = 0; r < cfg.replicates; ++r) tasks.push_back({g, n, r});
    return tasks;
}

/// Training data stream; shared by every grid value at the same (n, replicate).
inline Rng data_stream(const ExperimentConfig& cfg, const GridTask& task)
{
    return Rng(cfg.seed, stream_id(static_cast<std::uint8_t>(cfg.protocol), StreamPurpose::TrainData,
                                   static_cast<std::uint32_t>(task.n_index),
                                   static_cast<std::uint32_t>(task.replicate)));
}

template <class Body>
ExperimentResult run_grid(const ExperimentConfig& cfg, Body&& body)
{
    const auto tasks = enumerate_tasks(cfg);
    ExperimentResult result;
    result.rows.resize(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
        const GridTask& task = tasks[i];
        ExperimentRow& row = result.rows[i];
        row.protocol = cfg.protocol;
        row.n = cfg.samples_for(cfg.n_over_p[task.n_index]);
        row.replicate = task.replicate;
        const auto start = std::chrono::steady_clock::now();
        try {
            body(task, row);
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
            row.excess_risk = row.std_error = row.min_margin = std::numeric_limits<double>::quiet_NaN();
        }
        if (cfg.record_timing)
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return result;
}

} // namespace detail

/*
 * Sparsity-level scaling: for each k = multiplier * k_bar, sample size and
 * replicate, fit IHT with refit on data from a fixed well-specified model and
 * record the excess risk against F(w_bar).
 */
inline ExperimentResult run_sparsity_scaling(const ExperimentConfig& cfg)
{
    if (cfg.protocol != Protocol::SparsityScaling) throw DomainError("run_sparsity_scaling: wrong protocol");
    cfg.validate();
    const GenerativeSpec spec = make_sparse_spec(cfg.model, cfg.p, cfg.k_bar, cfg.signal, cfg.sigma, cfg.seed);
    const SupportSet truth = SupportSet::of(spec.w_bar);
    const LossModel loss = spec.loss();
    const std::uint64_t mc_seed = cfg.seed ^ 0x6d63u;

    return detail::run_grid(cfg, [&](const detail::GridTask& task, ExperimentRow& row) {
        const Index k = cfg.sparsity_for(cfg.grid[task.grid_index]);
        row.grid_value = static_cast<double>(k);
        Rng rng = detail::data_stream(cfg, task);
        const Dataset data = generate(spec, row.n, rng);

        IhtConfig ic;
        ic.k = k;
        ic.eta = cfg.eta;
        ic.max_iters = cfg.T;
        ic.obj_tol = cfg.obj_tol;
        ic.refit = true;
        ic.seed = cfg.seed;
        const IhtTrace trace = iht_run(data, loss, ic);

        const RiskEstimate risk = excess_risk(trace.output(), spec, cfg.k_bar, cfg.n_mc, mc_seed);
        row.excess_risk = risk.value;
        row.std_error = risk.std_error;
        row.min_margin = trace.min_margin();
        row.support_jaccard = support_overlap(SupportSet::of(trace.output()), truth).jaccard;
        row.iterations_used = trace.iterations();
    });
}

/*
 * Stability sweep: for each gap, build w_tilde from one fixed Gaussian draw,
 * fit IHT (k = k_bar) on linear data and compare with the closed-form best
 * k_bar-sparse risk. min_margin is taken from the population IHT trace,
 * support_jaccard compares the final empirical and population supports.
 */
inline ExperimentResult run_stability_sweep(const ExperimentConfig& cfg)
{
    if (cfg.protocol != Protocol::StabilitySweep) throw DomainError("run_stability_sweep: wrong protocol");
    cfg.validate();
    const double eta = cfg.eta.value_or(0.5);

    struct GapModel
    {
        GenerativeSpec spec;
        FieldTrace population;
    };
    std::vector<GapModel> models;
    models.reserve(cfg.grid.size());
    for (double gap : cfg.grid) {
        GenerativeSpec spec = make_gap_spec(cfg.p, cfg.k_bar, gap, cfg.sigma, cfg.seed, cfg.base_scale);
        FieldTrace pop = iht_stability_trace(linear_population_gradient(spec.w_bar), cfg.k_bar, eta, cfg.T,
                                             DenseVector::zeros(cfg.p));
        models.push_back({std::move(spec), std::move(pop)});
    }
    const LossModel loss(LossKind::Squared);

    return detail::run_grid(cfg, [&](const detail::GridTask& task, ExperimentRow& row) {
        const GapModel& gm = models[task.grid_index];
        row.grid_value = cfg.grid[task.grid_index];
        Rng rng = detail::data_stream(cfg, task);
        const Dataset data = gen_linear(gm.spec, row.n, rng);

        IhtConfig ic;
        ic.k = cfg.k_bar;
        ic.eta = eta;
        ic.max_iters = cfg.T;
        ic.obj_tol = cfg.obj_tol;
        ic.refit = true;
        ic.seed = cfg.seed;
        const IhtTrace trace = iht_run(data, loss, ic);

        const RiskEstimate risk = excess_risk(trace.output(), gm.spec, cfg.k_bar);
        row.excess_risk = risk.value;
        row.std_error = risk.std_error;
        row.min_margin = gm.population.report.min_margin;
        row.support_jaccard =
            support_overlap(trace.last().support, gm.population.supports.back()).jaccard;
        row.iterations_used = trace.iterations();
    });
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    return cfg.protocol == Protocol::SparsityScaling ? run_sparsity_scaling(cfg) : run_stability_sweep(cfg);
}

// ---------------------------------------------------------------------------
// Aggregation

struct SeriesPoint
{
    Index n = 0;
    double grid_value = 0.0;
    double mean_excess = 0.0;
    double mean_log_excess = 0.0; // NaN if any excess risk is nonpositive
    double std_error = 0.0;       // of the replicate mean
    std::size_t count = 0;
};

/// Replicate means per (n, grid value), sorted by n then grid value. Failed rows are skipped.
inline std::vector<SeriesPoint> summarize(const ExperimentResult& result)
{
    std::map<std::pair<Index, double>, std::vector<double>> groups;
    for (const auto& r : result.rows)
        if (r.ok()) groups[{r.n, r.grid_value}].push_back(r.excess_risk);
    std::vector<SeriesPoint> out;
    for (const auto& [key, values] : groups) {
        SeriesPoint sp;
        sp.n = key.first;
        sp.grid_value = key.second;
        sp.count = values.size();
        const double cnt = static_cast<double>(values.size());
        double sum = 0.0, log_sum = 0.0;
        bool positive = true;
        for (double v : values) {
            sum += v;
            if (v > 0.0) log_sum += std::log(v);
            else positive = false;
        }
        sp.mean_excess = sum / cnt;
        sp.mean_log_excess = positive ? log_sum / cnt : std::numeric_limits<double>::quiet_NaN();
        double ss = 0.0;
        for (double v : values) ss += (v - sp.mean_excess) * (v - sp.mean_excess);
        sp.std_error = values.size() > 1 ? std::sqrt(ss / (cnt - 1.0) / cnt) : 0.0;
        out.push_back(sp);
    }
    return out;
}

/*
 * Average ranks (1-based). Sorted neighbours within rel_tol * max(|a|, |b|)
 * of each other form one tie group sharing the mean rank.
 */
inline std::vector<double> ranks(const std::vector<double>& v, double rel_tol = 0.0)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    auto tied = [&](double a, double b) {
        return a == b || std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
    };
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && tied(v[order[j + 1]], v[order[j]])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t m = i; m <= j; ++m) r[order[m]] = avg;
        i = j + 1;
    }
    return r;
}

/// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y, double rel_tol = 0.0)
{
    if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: need two equal-length samples");
    const auto rx = ranks(x, rel_tol);
    const auto ry = ranks(y, rel_tol);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* result_csv_header =
    "protocol,grid_value,n,replicate,excess_risk,std_error,min_margin,support_jaccard,iterations_used,wall_time,status";

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

/// Split one RFC-4180 record; quoted fields may contain separators and doubled quotes.
inline std::vector<std::string> csv_split(std::istream& in, bool& ok)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') { cur += '"'; in.get(); }
                else quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            cur += c;
        }
    }
    ok = any;
    if (any) fields.push_back(std::move(cur));
    return fields;
}

} // namespace detail

inline void write_result_csv(const ExperimentResult& result, std::ostream& out)
{
    out << result_csv_header << '\n';
    for (const auto& r : result.rows) {
        out << to_string(r.protocol) << ',' << format_double(r.grid_value) << ',' << r.n << ',' << r.replicate
            << ',' << format_double(r.excess_risk) << ',' << format_double(r.std_error) << ','
            << format_double(r.min_margin) << ',' << format_double(r.support_jaccard) << ','
            << r.iterations_used << ',' << format_double(r.wall_time) << ',' << detail::csv_field(r.status)
            << '\n';
    }
}

inline void emit_csv(const ExperimentResult& result, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_result_csv(result, out);
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline ExperimentResult read_result_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string header;
    if (!std::getline(in, header) || header != result_csv_header)
        throw IoError("'" + path + "': unexpected header");
    ExperimentResult result;
    bool ok = true;
    while (true) {
        auto f = detail::csv_split(in, ok);
        if (!ok) break;
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 11) throw IoError("'" + path + "': record with " + std::to_string(f.size()) + " fields");
        ExperimentRow r;
        if (f[0] == "scaling") r.protocol = Protocol::SparsityScaling;
        else if (f[0] == "stability") r.protocol = Protocol::StabilitySweep;
        else throw IoError("'" + path + "': unknown protocol '" + f[0] + "'");
        auto num = [&](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
        r.grid_value = num(f[1]);
        r.n = static_cast<Index>(std::stoll(f[2]));
        r.replicate = static_cast<std::size_t>(std::stoull(f[3]));
        r.excess_risk = num(f[4]);
        r.std_error = num(f[5]);
        r.min_margin = num(f[6]);
        r.support_jaccard = num(f[7]);
        r.iterations_used = static_cast<std::size_t>(std::stoull(f[8]));
        r.wall_time = num(f[9]);
        r.status = f[10];
        result.rows.push_back(std::move(r));
    }
    return result;
}

// ---------------------------------------------------------------------------
// SVG line chart: one series per sample size, mean excess risk against the grid value.

namespace detail {

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string fmt_num(double v, int digits = 4)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

} // namespace detail

inline std::string render_svg(const ExperimentResult& result)
{
    if (result.rows.empty()) throw DomainError("emit_plot: result is empty");
    const Protocol protocol = result.rows.front().protocol;
    const bool log_y = protocol == Protocol::StabilitySweep;
    const auto points = summarize(result);

    std::map<Index, std::vector<std::pair<double, double>>> series;
    for (const auto& sp : points) {
        if (log_y && !(sp.mean_excess > 0.0)) continue;
        series[sp.n].emplace_back(sp.grid_value, log_y ? std::log10(sp.mean_excess) : sp.mean_excess);
    }

    double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (const auto& [n, pts] : series)
        for (auto [x, y] : pts) {
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
    if (series.empty()) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
    if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }

    constexpr double W = 640, H = 420, L = 70, R = 150, Tm = 30, B = 50;
    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - Tm - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
       << detail::xml_escape(protocol == Protocol::SparsityScaling ? "Sparse excess risk vs sparsity level"
                                                                   : "Sparse excess risk vs signal gap")
       << "</text>\n";
    // axes
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        os << "<text x=\"" << sx(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << detail::fmt_num(xv, 3) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
           << (log_y ? "1e" + detail::fmt_num(yv, 3) : detail::fmt_num(yv, 3)) << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << (protocol == Protocol::SparsityScaling ? "k" : "gap") << "</text>\n";
    os << "<text x=\"16\" y=\"" << (Tm + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
       << "transform=\"rotate(-90 16 " << (Tm + H - B) / 2 << ")\">"
       << (log_y ? "excess risk (log scale)" : "excess risk") << "</text>\n";

    std::size_t s = 0;
    for (const auto& [n, pts] : series) {
        const char* color = colors[s % std::size(colors)];
        os << "<g class=\"series\" data-n=\"" << n << "\">\n<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            os << (i ? " " : "") << detail::fmt_num(sx(pts[i].first), 6) << ','
               << detail::fmt_num(sy(pts[i].second), 6);
        os << "\"/>\n";
        for (auto [x, y] : pts)
            os << "<circle cx=\"" << detail::fmt_num(sx(x), 6) << "\" cy=\"" << detail::fmt_num(sy(y), 6)
               << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        os << "</g>\n";
        const double ly = Tm + 20 + 18.0 * static_cast<double>(s);
        os << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 35 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">n = " << n << "</text>\n";
        ++s;
    }
    os << "</svg>\n";
    return os.str();
}

inline void emit_plot(const ExperimentResult& result, const std::string& path)
{
    const std::string svg = render_svg(result);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << svg;
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace ihtlab
