#include "reltest/experiments.hpp"
#include "reltest/diagnostics.hpp"
#include "reltest/errors.hpp"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace reltest {

ModelSpec objective_gap_model() { return {2, {40, 50}, {0.015, 0.02}, 40}; }
ModelSpec robust_gap_model() { return {2, {40, 25}, {0.025, 0.04}, 40}; }
ModelSpec risk_model() { return {2, {30, 20}, {0.1, 0.2}, 15}; }
ModelSpec nonmonotone_model() { return {2, {30, 20}, {0.2, 0.1}, 2}; }

ExperimentConfig objective_gap_config() {
    ExperimentConfig c;
    c.model = objective_gap_model();
    c.utility = UtilitySpec::identity();
    c.uncertainty = UncertaintySet::singleton(OperationalProfile({0.2, 0.8}));
    return c;
}

ExperimentConfig robust_gap_config() {
    ExperimentConfig c;
    c.model = robust_gap_model();
    c.utility = UtilitySpec::identity();
    c.uncertainty = UncertaintySet::singleton(OperationalProfile({0.5, 0.5}));
    return c;
}

UncertaintySet robust_gap_interval() { return UncertaintySet::interval({0.48, 0.38}, {0.62, 0.52}); }

ExperimentConfig risk_config(std::uint64_t runs, std::uint64_t seed) {
    ExperimentConfig c;
    c.model = risk_model();
    c.utility = UtilitySpec::exponential(1.0);
    c.uncertainty = UncertaintySet::singleton(OperationalProfile({0.4, 0.6}));
    SimulationConfig sim;
    sim.runs = runs;
    sim.seed = seed;
    sim.scoring_profile = OperationalProfile({0.4, 0.6});
    c.simulation = sim;
    return c;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::vector<std::string> state_header(std::size_t m) {
    std::vector<std::string> header;
    for (std::size_t i = 0; i < m; ++i) header.push_back(fmt::format("x_{}", i + 1));
    return header;
}

void append_state(std::vector<std::string>& row, const std::vector<int>& x) {
    for (int v : x) row.push_back(std::to_string(v));
}

} // namespace

CsvWriter values_csv(const SolveReport& report, CsvMetadata metadata) {
    const auto& table = report.values;
    const auto& grid = table.grid();
    auto header = state_header(grid.dimension());
    std::vector<int> kept;
    for (int t = 0; t <= table.horizon(); ++t) {
        if (table.has_slice(t)) {
            kept.push_back(t);
            header.push_back(fmt::format("J_{}", t));
        }
    }
    CsvWriter csv(std::move(metadata), std::move(header));
    for (std::size_t s = 0; s < grid.size(); ++s) {
        std::vector<std::string> row;
        append_state(row, grid.decode(s));
        for (int t : kept) row.push_back(format_number(table.slice(t)[s]));
        csv.add_row(std::move(row));
    }
    return csv;
}

CsvWriter policy_csv(const SolveReport& report, CsvMetadata metadata) {
    const auto& policy = report.policy;
    const auto& grid = policy.grid();
    auto header = state_header(grid.dimension());
    for (int t = 0; t < policy.horizon(); ++t) header.push_back(fmt::format("u_{}", t));
    CsvWriter csv(std::move(metadata), std::move(header));
    for (std::size_t s = 0; s < grid.size(); ++s) {
        std::vector<std::string> row;
        append_state(row, grid.decode(s));
        for (int t = 0; t < policy.horizon(); ++t) row.push_back(std::to_string(policy.choice(t, s) + 1));
        csv.add_row(std::move(row));
    }
    return csv;
}

CsvWriter solve_summary_csv(const SolveReport& report, CsvMetadata metadata) {
    CsvWriter csv(std::move(metadata), {"value_at_start", "states_evaluated"});
    csv.add_row({format_number(report.value_at_start), std::to_string(report.states_evaluated)});
    return csv;
}

void write_solve_outputs(const SolveReport& report, const ExperimentConfig& config, const std::filesystem::path& dir) {
    const CsvMetadata meta{config.simulation ? config.simulation->seed : 0, config_digest(config), {}};
    policy_csv(report, meta).write(dir / "policy.csv");
    values_csv(report, meta).write(dir / "values.csv");
    solve_summary_csv(report, meta).write(dir / "summary.csv");
}

// ---------------------------------------------------------------------------
// Sweeps

std::string to_string(SweepMode mode) { return mode == SweepMode::assumed ? "assumed" : "truth"; }

SweepMode sweep_mode_from_string(const std::string& name) {
    if (name == "assumed") return SweepMode::assumed;
    if (name == "truth") return SweepMode::truth;
    throw ValidationError("mode", fmt::format("'{}' is not one of assumed, truth", name));
}

std::vector<SweepRow> sweep_profile(const ExperimentConfig& config, std::span<const double> swept_p1, double fixed_p1,
                                    SweepMode mode) {
    std::vector<Violation> bad;
    if (config.model.m != 2) bad.push_back({"model.m", "profile sweeps need m = 2"});
    for (double v : swept_p1) {
        if (!(v >= 0.0 && v <= 1.0)) bad.push_back({"sweep value", fmt::format("{} outside [0, 1]", v)});
    }
    if (!(fixed_p1 >= 0.0 && fixed_p1 <= 1.0)) bad.push_back({"fixed p_1", fmt::format("{} outside [0, 1]", fixed_p1)});
    if (!bad.empty()) throw ValidationError(std::move(bad));

    auto profile = [](double p1) { return OperationalProfile({p1, 1.0 - p1}); };
    auto policy_for = [&](double p1) {
        return solve(config.model, config.utility, UncertaintySet::singleton(profile(p1))).policy;
    };
    auto optimum_for = [&](double p1) {
        return solve(config.model, config.utility, UncertaintySet::singleton(profile(p1))).value_at_start;
    };

    std::vector<SweepRow> rows;
    if (mode == SweepMode::assumed) {
        const double optimal = optimum_for(fixed_p1);
        for (double v : swept_p1) {
            const double achieved = evaluate_policy(policy_for(v), config.model, config.utility, profile(fixed_p1));
            rows.push_back({mode, v, optimal, achieved, gap(optimal, achieved)});
        }
    } else {
        const auto policy = policy_for(fixed_p1);
        for (double v : swept_p1) {
            const double optimal = optimum_for(v);
            const double achieved = evaluate_policy(policy, config.model, config.utility, profile(v));
            rows.push_back({mode, v, optimal, achieved, gap(optimal, achieved)});
        }
    }
    return rows;
}

CsvWriter sweep_csv(const std::vector<SweepRow>& rows, CsvMetadata metadata) {
    CsvWriter csv(std::move(metadata), {"mode", "p1", "optimal", "achieved", "gap_percent"});
    for (const auto& r : rows) {
        csv.add_row({to_string(r.mode), format_number(r.swept_p1), format_number(r.optimal), format_number(r.achieved),
                     format_number(100.0 * r.gap)});
    }
    return csv;
}

std::vector<GammaRow> sweep_gamma(const ExperimentConfig& config, std::span<const double> gammas, const SimulationConfig& sim) {
    std::vector<GammaRow> rows;
    for (double g : gammas) {
        if (!(g > 0.0)) throw ValidationError("gamma", fmt::format("{} must be > 0", g));
        const auto report = solve(config.model, UtilitySpec::exponential(g), config.uncertainty);
        rows.push_back({g, report.value_at_start, simulate_many(config.model, report.policy, sim)});
    }
    return rows;
}

CsvWriter gamma_csv(const std::vector<GammaRow>& rows, CsvMetadata metadata) {
    CsvWriter csv(std::move(metadata), {"gamma", "mean", "variance", "runs", "dp_expected_utility"});
    for (const auto& r : rows) {
        csv.add_row({format_number(r.gamma), format_number(r.stats.mean), format_number(r.stats.variance),
                     std::to_string(r.stats.runs), format_number(r.dp_value)});
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Repro commands

Check check_near(std::string name, double expected, double actual, double tolerance, std::string detail) {
    const bool ok = std::abs(actual - expected) <= tolerance;
    return {std::move(name), expected, actual, tolerance, ok, std::move(detail)};
}

Check check_true(std::string name, bool ok, std::string detail) {
    return {std::move(name), 1.0, ok ? 1.0 : 0.0, 0.0, ok, std::move(detail)};
}

bool ReproResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string ReproResult::report() const {
    std::string out = fmt::format("== {}\n", name);
    for (const auto& c : checks) {
        if (c.tolerance > 0.0) {
            out += fmt::format("[{}] {}: expected {:.6g} +/- {:.3g}, got {:.6g}", c.pass ? "PASS" : "FAIL", c.name,
                               c.expected, c.tolerance, c.actual);
        } else {
            out += fmt::format("[{}] {}", c.pass ? "PASS" : "FAIL", c.name);
        }
        if (!c.detail.empty()) out += " (" + c.detail + ")";
        out += '\n';
    }
    for (const auto& n : notes) out += "note: " + n + "\n";
    out += fmt::format("{}: {}\n", name, passed() ? "PASS" : "FAIL");
    return out;
}

ReproResult repro_objective_gap(const ReproOptions& opt) {
    ReproResult result{"objective-gap", {}, {}};
    const auto config = objective_gap_config();
    const auto optimal = solve(config.model, config.utility, config.uncertainty);
    const auto min_defects = solve_min_defects(config.model);
    const double baseline =
        evaluate_policy(min_defects.policy, config.model, config.utility, OperationalProfile({0.2, 0.8}));

    result.checks.push_back(check_near("max-reliability optimum J_0(N)", reference::kObjectiveOptimal,
                                       optimal.value_at_start, 5e-4));
    result.checks.push_back(check_near("min-defects policy reliability", reference::kObjectiveMinDefects, baseline, 5e-4));
    result.notes.push_back(fmt::format("expected residual defects under min-defects policy: {:.6g}", min_defects.value_at_start));
    result.notes.push_back(fmt::format("solve wall time {:.3f} s", optimal.wall_time.count()));

    write_solve_outputs(optimal, config, opt.out_dir / "objective-gap" / "max-reliability");
    write_solve_outputs(min_defects, config, opt.out_dir / "objective-gap" / "min-defects");
    return result;
}

ReproResult repro_robust_gap(const ReproOptions& opt) {
    ReproResult result{"robust-gap", {}, {}};
    const auto config = robust_gap_config();
    const OperationalProfile truth({0.5, 0.5});
    const auto optimal = solve(config.model, config.utility, config.uncertainty);
    const auto robust = solve(config.model, config.utility, robust_gap_interval());
    const double robust_at_truth = evaluate_policy(robust.policy, config.model, config.utility, truth);
    const double robust_gap = 100.0 * gap(optimal.value_at_start, robust_at_truth);

    result.checks.push_back(check_near("optimal value under p = (0.5, 0.5)", reference::kRobustOptimal,
                                       optimal.value_at_start, 5e-4));
    result.checks.push_back(check_near("robust policy evaluated at truth", reference::kRobustPolicyAtTruth, robust_at_truth, 5e-4));
    result.checks.push_back(check_near("robust gap (%)", reference::kRobustGapPercent, robust_gap, 0.05));

    const std::vector<double> swept(std::begin(reference::kTable1P1), std::end(reference::kTable1P1));
    std::string matched;
    std::vector<SweepRow> all_rows;
    for (auto mode : {SweepMode::assumed, SweepMode::truth}) {
        const auto rows = sweep_profile(config, swept, 0.5, mode);
        bool ok = true;
        std::string got;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            ok = ok && std::abs(100.0 * rows[k].gap - reference::kTable1GapPercent[k]) <= 0.05;
            got += fmt::format("{}{:.4f}", k ? " " : "", 100.0 * rows[k].gap);
        }
        result.notes.push_back(fmt::format("sweep gaps (%), {} mode: {}", to_string(mode), got));
        if (ok && matched.empty()) matched = to_string(mode);
        all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    }
    result.checks.push_back(check_true("sweep gap row within 0.05 points in some mode", !matched.empty(),
                                       matched.empty() ? "no mode matched" : "matched mode: " + matched));

    const CsvMetadata meta{0, config_digest(config), {}};
    sweep_csv(all_rows, meta).write(opt.out_dir / "robust-gap" / "gaps.csv");
    write_solve_outputs(robust, config, opt.out_dir / "robust-gap" / "robust-policy");
    return result;
}

ReproResult repro_risk_sweep(const ReproOptions& opt) {
    ReproResult result{"risk-sweep", {}, {}};
    const std::uint64_t runs = opt.smoke ? 100 : opt.runs;
    const double widen = opt.smoke ? 10.0 : 1.0;
    const auto config = risk_config(runs, opt.seed);
    const std::vector<double> gammas(std::begin(reference::kTable2Gamma), std::end(reference::kTable2Gamma));
    const auto rows = sweep_gamma(config, gammas, *config.simulation);

    const CsvMetadata meta{opt.seed, config_digest(config), "variance=population"};
    const auto dir = opt.out_dir / "risk-sweep";
    gamma_csv(rows, meta).write(dir / "table2.csv");
    for (std::size_t k = 0; k < rows.size(); ++k) {
        export_histogram(rows[k].stats, dir / fmt::format("histogram_gamma_{}.csv", format_number(rows[k].gamma)), meta);
        result.checks.push_back(check_near(fmt::format("gamma={} mean", rows[k].gamma), reference::kTable2Mean[k],
                                           rows[k].stats.mean, 0.01 * widen));
        result.checks.push_back(check_near(fmt::format("gamma={} variance", rows[k].gamma), reference::kTable2Variance[k],
                                           rows[k].stats.variance, 0.003 * widen));
    }
    result.notes.push_back(fmt::format("runs per gamma: {}, seed: {}", runs, opt.seed));
    return result;
}

ReproResult repro_counterexamples(const ReproOptions& opt) {
    ReproResult result{"counterexamples", {}, {}};

    // Quadratic utility, one module: J_T is not convex around x = 2.
    {
        const ModelSpec model{1, {5}, {0.1}, 1};
        const auto report = solve(model, UtilitySpec::quadratic(), UncertaintySet::singleton(OperationalProfile({1.0})));
        const auto scan = scan_convexity(report.values);
        const bool found = std::any_of(scan.witnesses.begin(), scan.witnesses.end(),
                                       [&](const Witness& w) { return w.t == model.T && w.x == std::vector<int>{2}; });
        result.checks.push_back(check_true("quadratic utility: J_T non-convex at x = 2", found));
    }

    // Two-profile set: J_T at (11..13, 19).
    {
        const ModelSpec model{2, {20, 20}, {0.3, 0.2}, 1};
        const auto P = UncertaintySet::finite({OperationalProfile({0.2, 0.8}), OperationalProfile({0.8, 0.2})});
        const auto report = solve(model, UtilitySpec::identity(), P);
        const double mid = report.values.at(model.T, std::vector<int>{12, 19});
        const double left = report.values.at(model.T, std::vector<int>{11, 19});
        const double right = report.values.at(model.T, std::vector<int>{13, 19});
        result.checks.push_back(check_near("finite set: J_T(12,19)", reference::kExample2J_12_19, mid, 5e-4));
        result.checks.push_back(check_near("finite set: J_T(11,19)", reference::kExample2J_11_19, left, 5e-4));
        result.checks.push_back(check_near("finite set: J_T(13,19)", reference::kExample2J_13_19, right, 5e-4));
        result.checks.push_back(check_true("finite set: J_T(12,19) > (J_T(11,19) + J_T(13,19)) / 2", mid > 0.5 * (left + right),
                                           fmt::format("{:.6g} vs {:.6g}", mid, 0.5 * (left + right))));
    }

    // Optimal choice is not monotone in the defect count.
    {
        const auto model = nonmonotone_model();
        const OperationalProfile p({0.2, 0.8});
        const auto report = solve(model, UtilitySpec::identity(), UncertaintySet::singleton(p));
        const auto witness = find_nonmonotone_policy(report.policy);
        result.checks.push_back(check_true(
            "non-monotone optimal policy witness", witness.has_value(),
            witness ? fmt::format("t={} x=({}) picks module {}, x+e_{} picks module {}", witness->t, fmt::join(witness->x, ","),
                                  witness->module + 1, witness->module + 1, witness->choice_after + 1)
                    : "none found"));

        std::uint64_t disagreements = 0;
        const auto& grid = report.policy.grid();
        for (std::size_t s = 0; s < grid.size(); ++s) {
            if (report.policy.choice(model.T - 1, s) != closed_form_Tminus1_choice(grid.decode(s), model, p)) ++disagreements;
        }
        result.checks.push_back(check_true("closed-form T-1 choice matches the solver everywhere", disagreements == 0,
                                           fmt::format("{} disagreements over {} states", disagreements, grid.size())));
        write_solve_outputs(report, ExperimentConfig{model, UtilitySpec::identity(), UncertaintySet::singleton(p), {}, ""},
                            opt.out_dir / "counterexamples" / "nonmonotone");
    }
    return result;
}

ReproResult run_repro(const std::string& name, const ReproOptions& opt) {
    if (name == "objective-gap") return repro_objective_gap(opt);
    if (name == "robust-gap") return repro_robust_gap(opt);
    if (name == "risk-sweep") return repro_risk_sweep(opt);
    if (name == "counterexamples") return repro_counterexamples(opt);
    throw ValidationError("repro", fmt::format("unknown experiment '{}'", name));
}

} // namespace reltest
