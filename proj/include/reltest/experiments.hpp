#pragma once

#include "reltest/config.hpp"
#include "reltest/csv.hpp"
#include "reltest/simulator.hpp"
#include "reltest/solver.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace reltest {

// Built-in problem instances used by the repro commands.
ModelSpec objective_gap_model(); ///< m=2, N=(40,50), theta=(0.015,0.02), T=40
ModelSpec robust_gap_model();    ///< m=2, N=(40,25), theta=(0.025,0.04), T=40
ModelSpec risk_model();          ///< m=2, N=(30,20), theta=(0.1,0.2), T=15
ModelSpec nonmonotone_model();   ///< m=2, N=(30,20), theta=(0.2,0.1), T=2

ExperimentConfig objective_gap_config();
ExperimentConfig robust_gap_config();          ///< singleton (0.5, 0.5)
UncertaintySet robust_gap_interval();          ///< p_1 in [0.48, 0.62]
ExperimentConfig risk_config(std::uint64_t runs, std::uint64_t seed);

/// Columns x_1..x_m, J_0..J_T (only retained slices).
CsvWriter values_csv(const SolveReport& report, CsvMetadata metadata);
/// Columns x_1..x_m, u_0..u_{T-1}; modules are 1-based.
CsvWriter policy_csv(const SolveReport& report, CsvMetadata metadata);
/// Columns value_at_start, states_evaluated. Wall time is left out so
/// identical inputs give identical files.
CsvWriter solve_summary_csv(const SolveReport& report, CsvMetadata metadata);

/// Writes policy.csv, values.csv and summary.csv into `dir`.
void write_solve_outputs(const SolveReport& report, const ExperimentConfig& config, const std::filesystem::path& dir);

enum class SweepMode {
    assumed, ///< sweep the profile the policy is solved for; score at the fixed truth
    truth,   ///< solve for the fixed assumed profile; sweep the true profile
};

std::string to_string(SweepMode mode);
SweepMode sweep_mode_from_string(const std::string& name);

struct SweepRow {
    SweepMode mode = SweepMode::assumed;
    double swept_p1 = 0.0;
    double optimal = 0.0;  ///< best value under the true profile
    double achieved = 0.0; ///< value of the swept policy under the true profile
    double gap = 0.0;      ///< fraction
};

/// m = 2 profile sweep over p_1. `fixed_p1` is the truth in assumed mode and
/// the tester's assumption in truth mode.
std::vector<SweepRow> sweep_profile(const ExperimentConfig& config, std::span<const double> swept_p1, double fixed_p1,
                                    SweepMode mode);

CsvWriter sweep_csv(const std::vector<SweepRow>& rows, CsvMetadata metadata);

struct GammaRow {
    double gamma = 0.0;
    double dp_value = 0.0; ///< optimal expected utility
    SimulationStats stats;
};

/// Solves with U(r) = 1 - exp(-r/gamma) for each gamma and simulates the policy.
std::vector<GammaRow> sweep_gamma(const ExperimentConfig& config, std::span<const double> gammas, const SimulationConfig& sim);

CsvWriter gamma_csv(const std::vector<GammaRow>& rows, CsvMetadata metadata);

struct Check {
    std::string name;
    double expected = 0.0;
    double actual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

Check check_near(std::string name, double expected, double actual, double tolerance, std::string detail = {});
Check check_true(std::string name, bool ok, std::string detail = {});

struct ReproResult {
    std::string name;
    std::vector<Check> checks;
    std::vector<std::string> notes;

    bool passed() const;
    std::string report() const;
};

struct ReproOptions {
    std::filesystem::path out_dir = "out";
    std::uint64_t runs = 10000;
    std::uint64_t seed = 1;
    bool smoke = false;
};

ReproResult repro_objective_gap(const ReproOptions& opt);
ReproResult repro_robust_gap(const ReproOptions& opt);
ReproResult repro_risk_sweep(const ReproOptions& opt);
ReproResult repro_counterexamples(const ReproOptions& opt);

/// Dispatches on objective-gap | robust-gap | risk-sweep | counterexamples.
ReproResult run_repro(const std::string& name, const ReproOptions& opt);

// Reference numbers the repro commands check against.
namespace reference {
inline constexpr double kObjectiveOptimal = 0.5382;
inline constexpr double kObjectiveMinDefects = 0.4722;
inline constexpr double kRobustOptimal = 0.4809;
inline constexpr double kRobustPolicyAtTruth = 0.477;
inline constexpr double kRobustGapPercent = 0.815;
inline constexpr double kTable1P1[] = {0.48, 0.50, 0.52, 0.54, 0.56, 0.58, 0.60, 0.62};
inline constexpr double kTable1GapPercent[] = {0.0641, 0.0, 0.11, 0.3642, 0.6738, 1.302, 2.1970, 3.3791};
inline constexpr double kTable2Gamma[] = {0.001, 0.01, 0.1, 1.0};
inline constexpr double kTable2Mean[] = {0.3947, 0.4346, 0.5504, 0.5512};
inline constexpr double kTable2Variance[] = {0.0087, 0.0057, 0.0099, 0.0099};
inline constexpr double kExample2J_12_19 = 0.014;
inline constexpr double kExample2J_11_19 = 0.0155;
inline constexpr double kExample2J_13_19 = 0.0106;
} // namespace reference

} // namespace reltest
