// Command-line driver for the simulation protocols.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <ihtlab/ihtlab.hpp>

namespace fs = std::filesystem;
using namespace ihtlab;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_row_failure = 2;

/// Overrides collected from flags, the config file and IHTLAB_* variables.
struct Overrides
{
    std::string preset = "desk";
    std::string out = "ihtlab_out";
    std::string format = "csv+svg";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> model;
    std::optional<Index> p, k_bar;
    std::optional<std::vector<double>> grid, n_over_p;
    std::optional<std::size_t> replicates, n_mc, T;
    std::optional<double> eta, obj_tol, signal, sigma, base_scale;
    bool record_timing = false;
};

ExperimentConfig build_config(Protocol protocol, const Overrides& o)
{
    ExperimentConfig c = preset(o.preset, protocol);
    if (o.seed) c.seed = *o.seed;
    c.threads = o.threads.value_or(std::max(1u, std::thread::hardware_concurrency()));
    if (o.model) {
        if (*o.model == "linear") c.model = ModelKind::LinearGaussian;
        else if (*o.model == "logistic") c.model = ModelKind::LogisticGaussian;
        else throw DomainError("model must be 'linear' or 'logistic'");
    }
    if (o.p) c.p = *o.p;
    if (o.k_bar) c.k_bar = *o.k_bar;
    if (o.grid) c.grid = *o.grid;
    if (o.n_over_p) c.n_over_p = *o.n_over_p;
    if (o.replicates) c.replicates = *o.replicates;
    if (o.n_mc) c.n_mc = *o.n_mc;
    if (o.T) c.T = *o.T;
    if (o.eta) c.eta = *o.eta;
    if (o.obj_tol) c.obj_tol = *o.obj_tol;
    if (o.signal) c.signal = *o.signal;
    if (o.sigma) c.sigma = *o.sigma;
    if (o.base_scale) c.base_scale = *o.base_scale;
    c.record_timing = o.record_timing;
    c.validate();
    return c;
}

void print_summary(const std::string& name, const ExperimentResult& r)
{
    std::printf("%s: %zu rows, %zu failed\n", name.c_str(), r.rows.size(), r.failures());
    std::printf("  %8s %10s %14s %12s\n", "n", "grid", "mean excess", "stderr");
    for (const auto& sp : summarize(r))
        std::printf("  %8lld %10.4g %14.6g %12.4g\n", static_cast<long long>(sp.n), sp.grid_value, sp.mean_excess,
                    sp.std_error);
}

std::size_t run_and_emit(const std::string& name, const ExperimentConfig& cfg, const Overrides& o)
{
    const ExperimentResult r = run_experiment(cfg);
    fs::create_directories(o.out);
    const fs::path base = fs::path(o.out) / name;
    emit_csv(r, base.string() + ".csv");
    if (o.format == "csv+svg" && !r.rows.empty()) emit_plot(r, base.string() + ".svg");
    print_summary(name, r);
    return r.failures();
}

// Small grids for a quick look at both protocols.
std::size_t run_demo(const Overrides& o)
{
    ExperimentConfig s = build_config(Protocol::SparsityScaling, o);
    s.p = 50;
    s.k_bar = 3;
    s.n_over_p = {2, 5};
    s.replicates = 3;
    s.n_mc = 5000;
    ExperimentConfig g = build_config(Protocol::StabilitySweep, o);
    g.p = 50;
    g.k_bar = 5;
    g.grid = {0.2, 0.5, 0.8};
    g.n_over_p = {2, 5};
    g.replicates = 3;
    return run_and_emit("scaling", s, o) + run_and_emit("stability", g, o);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Iterative hard thresholding simulations"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file (INI or TOML)");
    app.get_config_ptr()->envname("IHTLAB_CONFIG");

    Overrides o;
    auto env = [](CLI::Option* opt, const char* name) { return opt->envname(std::string("IHTLAB_") + name); };
    env(app.add_option("--preset", o.preset, "desk | paper-6.1 | paper-6.2")->capture_default_str(), "PRESET");
    env(app.add_option("--out", o.out, "output directory")->capture_default_str(), "OUT");
    env(app.add_option("--format", o.format, "csv | csv+svg")
            ->check(CLI::IsMember({"csv", "csv+svg"}))
            ->capture_default_str(),
        "FORMAT");
    env(app.add_option("--seed", o.seed, "master seed"), "SEED");
    env(app.add_option("--threads", o.threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber),
        "THREADS");
    env(app.add_option("--model", o.model, "linear | logistic (scaling only)"), "MODEL");
    env(app.add_option("--p", o.p, "dimension"), "P");
    env(app.add_option("--k-bar", o.k_bar, "true sparsity"), "K_BAR");
    env(app.add_option("--grid", o.grid, "k/k_bar multipliers or gaps")->delimiter(','), "GRID");
    env(app.add_option("--n-over-p", o.n_over_p, "sample size ratios")->delimiter(','), "N_OVER_P");
    env(app.add_option("--replicates", o.replicates, "replicates per grid point"), "REPLICATES");
    env(app.add_option("--n-mc", o.n_mc, "Monte Carlo draws for logistic risk"), "N_MC");
    env(app.add_option("--iters", o.T, "IHT iteration cap"), "ITERS");
    env(app.add_option("--eta", o.eta, "step size (default 2/(3L))"), "ETA");
    env(app.add_option("--obj-tol", o.obj_tol, "objective change tolerance"), "OBJ_TOL");
    env(app.add_option("--signal", o.signal, "nonzero magnitude of w_bar (scaling)"), "SIGNAL");
    env(app.add_option("--sigma", o.sigma, "noise std for linear data"), "SIGMA");
    env(app.add_option("--base-scale", o.base_scale, "std of the gap model draw (stability)"), "BASE_SCALE");
    env(app.add_flag("--record-timing", o.record_timing, "fill the wall_time column"), "RECORD_TIMING");

    auto* scaling = app.add_subcommand("scaling", "excess risk against the sparsity level");
    auto* stability = app.add_subcommand("stability", "excess risk against the signal gap");
    auto* demo = app.add_subcommand("demo", "both protocols on small grids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        std::size_t failures = 0;
        if (scaling->parsed()) failures = run_and_emit("scaling", build_config(Protocol::SparsityScaling, o), o);
        else if (stability->parsed()) failures = run_and_emit("stability", build_config(Protocol::StabilitySweep, o), o);
        else if (demo->parsed()) failures = run_demo(o);
        if (failures) {
            std::cerr << failures << " rows failed; see the status column\n";
            return exit_row_failure;
        }
        return exit_ok;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
}
