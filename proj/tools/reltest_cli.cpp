// Command-line front end: solve, evaluate, simulate, sweeps and the
// reproduction bundles. Exit codes: 0 ok, 2 validation, 3 capacity,
// 4 acceptance check failed, 5 I/O.

#include "reltest/config.hpp"
#include "reltest/errors.hpp"
#include "reltest/experiments.hpp"
#include "reltest/simulator.hpp"
#include "reltest/solver.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kCapacity = 3, kCheckFailed = 4, kIo = 5 };

struct Args {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> runs;
    std::string mode;
    bool smoke = false;
    std::vector<double> truth;
    std::vector<double> values{0.48, 0.50, 0.52, 0.54, 0.56, 0.58, 0.60, 0.62};
    double fixed_p1 = 0.5;
    std::vector<double> gammas{0.001, 0.01, 0.1, 1.0};
    std::string experiment;
};

reltest::ExperimentConfig load(const Args& a) {
    auto config = reltest::load_config(a.config_path);
    if (!a.out_dir.empty()) config.output_dir = a.out_dir;
    if (config.simulation) {
        if (a.seed) config.simulation->seed = *a.seed;
        if (a.runs) config.simulation->runs = *a.runs;
    }
    return config;
}

void print_warnings(const reltest::SolveReport& report) {
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
}

reltest::SimulationConfig simulation_of(const reltest::ExperimentConfig& config) {
    if (!config.simulation) throw reltest::ValidationError("simulation", "this command needs a simulation section");
    return *config.simulation;
}

int cmd_solve(const Args& a) {
    const auto config = load(a);
    const auto report = reltest::solve(config.model, config.utility, config.uncertainty);
    print_warnings(report);
    reltest::write_solve_outputs(report, config, config.output_dir);
    fmt::print("J_0(N) = {:.6g}\n", report.value_at_start);
    if (config.model.state_count() == 1) fmt::print("note: single-state model; every policy is equivalent\n");
    fmt::print("states x periods: {}  time: {:.3f} s  output: {}\n", report.states_evaluated, report.wall_time.count(),
               config.output_dir);
    return kOk;
}

int cmd_evaluate(const Args& a) {
    const auto config = load(a);
    std::vector<double> truth = a.truth;
    if (truth.empty() && config.simulation) truth = config.simulation->scoring_profile.values();
    if (truth.empty()) throw reltest::ValidationError("truth", "pass --truth or a simulation.scoring_profile");
    const reltest::OperationalProfile profile(truth);

    const auto report = reltest::solve(config.model, config.utility, config.uncertainty);
    print_warnings(report);
    const auto optimal = reltest::solve(config.model, config.utility, reltest::UncertaintySet::singleton(profile));
    const double achieved = reltest::evaluate_policy(report.policy, config.model, config.utility, profile);
    fmt::print("policy value at truth = {:.6g}\n", achieved);
    fmt::print("optimal value at truth = {:.6g}\n", optimal.value_at_start);
    fmt::print("gap = {:.4f}%\n", 100.0 * reltest::gap(optimal.value_at_start, achieved));
    return kOk;
}

int cmd_simulate(const Args& a) {
    const auto config = load(a);
    const auto sim = simulation_of(config);
    const auto report = reltest::solve(config.model, config.utility, config.uncertainty);
    print_warnings(report);
    const auto stats = reltest::simulate_many(config.model, report.policy, sim);
    const reltest::CsvMetadata meta{sim.seed, reltest::config_digest(config), "variance=population"};
    const std::filesystem::path dir = config.output_dir;
    reltest::summary_csv(stats, meta).write(dir / "stats.csv");
    reltest::export_histogram(stats, dir / "histogram.csv", meta);
    fmt::print("mean = {:.6g}  variance = {:.6g}  runs = {}  seed = {}\n", stats.mean, stats.variance, stats.runs, stats.seed);
    return kOk;
}

int cmd_sweep_profile(const Args& a) {
    const auto config = load(a);
    std::vector<reltest::SweepMode> modes;
    if (a.mode.empty()) modes = {reltest::SweepMode::assumed, reltest::SweepMode::truth};
    else modes = {reltest::sweep_mode_from_string(a.mode)};

    std::vector<reltest::SweepRow> rows;
    for (auto mode : modes) {
        const auto part = reltest::sweep_profile(config, a.values, a.fixed_p1, mode);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    const reltest::CsvMetadata meta{0, reltest::config_digest(config), {}};
    reltest::sweep_csv(rows, meta).write(std::filesystem::path(config.output_dir) / "gaps.csv");
    for (const auto& r : rows) {
        fmt::print("{:8s} p1={:.4g}  optimal={:.6g}  achieved={:.6g}  gap={:.4f}%\n", reltest::to_string(r.mode), r.swept_p1,
                   r.optimal, r.achieved, 100.0 * r.gap);
    }
    return kOk;
}

int cmd_sweep_gamma(const Args& a) {
    const auto config = load(a);
    const auto sim = simulation_of(config);
    const auto rows = reltest::sweep_gamma(config, a.gammas, sim);
    const reltest::CsvMetadata meta{sim.seed, reltest::config_digest(config), "variance=population"};
    const std::filesystem::path dir = config.output_dir;
    reltest::gamma_csv(rows, meta).write(dir / "table2.csv");
    for (const auto& r : rows) {
        reltest::export_histogram(r.stats, dir / fmt::format("histogram_gamma_{}.csv", reltest::format_number(r.gamma)), meta);
        fmt::print("gamma={:<8g} mean={:.4f} variance={:.4f}\n", r.gamma, r.stats.mean, r.stats.variance);
    }
    return kOk;
}

int cmd_repro(const Args& a) {
    reltest::ReproOptions opt;
    opt.out_dir = a.out_dir.empty() ? "out" : a.out_dir;
    opt.smoke = a.smoke;
    if (a.runs) opt.runs = *a.runs;
    if (a.seed) opt.seed = *a.seed;
    const auto result = reltest::run_repro(a.experiment, opt);
    std::cout << result.report();
    return result.passed() ? kOk : kCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic module selection for software testing"};
    app.require_subcommand(1);
    Args a;

    auto add_common = [&a](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", a.config_path, "Experiment config (JSON)");
        if (needs_config) opt->required();
        sub->add_option("--out", a.out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--seed", a.seed, "Simulation seed");
        sub->add_option("--runs", a.runs, "Simulation runs");
    };

    auto* solve = app.add_subcommand("solve", "Solve the max-min dynamic program; write policy/value CSVs");
    add_common(solve, true);
    auto* evaluate = app.add_subcommand("evaluate", "Score the solved policy against a true profile");
    add_common(evaluate, true);
    evaluate->add_option("--truth", a.truth, "True operational profile")->delimiter(',');
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo distribution of delivered reliability");
    add_common(simulate, true);
    auto* sweep_profile = app.add_subcommand("sweep-profile", "Gap table over p_1 (m = 2)");
    add_common(sweep_profile, true);
    sweep_profile->add_option("--mode", a.mode, "assumed | truth (default: both)")->check(CLI::IsMember({"assumed", "truth"}));
    sweep_profile->add_option("--values", a.values, "Swept p_1 values")->delimiter(',');
    sweep_profile->add_option("--fixed", a.fixed_p1, "Fixed p_1 (the truth in assumed mode, the assumption in truth mode)");
    auto* sweep_gamma = app.add_subcommand("sweep-gamma", "Exponential-utility risk sweep with simulation");
    add_common(sweep_gamma, true);
    sweep_gamma->add_option("--gammas", a.gammas, "Risk tolerances")->delimiter(',');
    auto* repro = app.add_subcommand("repro", "Run a built-in experiment and check it");
    add_common(repro, false);
    repro->add_option("experiment", a.experiment, "objective-gap | robust-gap | risk-sweep | counterexamples")
        ->required()
        ->check(CLI::IsMember({"objective-gap", "robust-gap", "risk-sweep", "counterexamples"}));
    repro->add_flag("--smoke", a.smoke, "100 runs, tolerances widened x10");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*solve) return cmd_solve(a);
        if (*evaluate) return cmd_evaluate(a);
        if (*simulate) return cmd_simulate(a);
        if (*sweep_profile) return cmd_sweep_profile(a);
        if (*sweep_gamma) return cmd_sweep_gamma(a);
        if (*repro) return cmd_repro(a);
    } catch (const reltest::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const reltest::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const reltest::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const reltest::UnsupportedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const reltest::CapacityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kCapacity;
    } catch (const reltest::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kOk;
}
