#pragma once

#include "reltest/grid.hpp"
#include "reltest/model.hpp"
#include "reltest/uncertainty.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reltest {

/// J_t(x) for t = 0..T over the full state grid. Slices for 0 < t < T may be
/// dropped when a solve runs with `retain_all_slices = false`.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(StateGrid grid, int horizon);

    const StateGrid& grid() const noexcept { return grid_; }
    int horizon() const noexcept { return static_cast<int>(slices_.size()) - 1; }
    bool has_slice(int t) const;
    bool complete() const;

    std::span<const double> slice(int t) const;
    std::vector<double>& mutable_slice(int t);
    double at(int t, std::span<const int> x) const { return slice(t)[grid_.index(x)]; }

    void drop_slice(int t);

private:
    StateGrid grid_;
    std::vector<std::vector<double>> slices_;
};

/// Module chosen at every (x, t), t = 0..T-1. Indices are 0-based here and
/// 1-based in files and on the command line.
class PolicyTable {
public:
    PolicyTable() = default;
    PolicyTable(StateGrid grid, int horizon);

    const StateGrid& grid() const noexcept { return grid_; }
    int horizon() const noexcept { return static_cast<int>(choices_.size()); }

    int choice(int t, std::size_t state) const { return choices_.at(static_cast<std::size_t>(t))[state]; }
    int choice(int t, std::span<const int> x) const { return choice(t, grid_.index(x)); }
    void set(int t, std::size_t state, int module) {
        choices_.at(static_cast<std::size_t>(t))[state] = static_cast<std::uint16_t>(module);
    }

    /// Same choice everywhere. Handy as a baseline and in tests.
    static PolicyTable constant(StateGrid grid, int horizon, int module);

    bool operator==(const PolicyTable&) const = default;

private:
    StateGrid grid_;
    std::vector<std::vector<std::uint16_t>> choices_;
};

struct SolveOptions {
    std::uint64_t state_cap = kDefaultStateCap;
    bool retain_all_slices = true;
    unsigned workers = 0; ///< 0 picks hardware concurrency
};

struct SolveReport {
    double value_at_start = 0.0;
    ValueTable values;
    PolicyTable policy;
    std::uint64_t states_evaluated = 0;
    std::chrono::duration<double> wall_time{0.0};
    std::vector<std::string> warnings;
};

/// Max-min backward induction. The worst case over P enters only through the
/// terminal values J_T(x) = min_p U(R(x, p)); ties in the arg max go to the
/// lowest module index.
SolveReport solve(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P, const SolveOptions& options = {});

/// E[next(x with x_i replaced by its survivors)] after one test of module i,
/// for every state on the grid.
std::vector<double> bellman_step(std::span<const double> next_values, const ModelSpec& model, int module);

/// Expected terminal value when following `policy`, from every state at t = 0.
std::vector<double> policy_expectation(const PolicyTable& policy, const ModelSpec& model, std::span<const double> terminal);

/// Expected utility of delivered reliability when `policy` is followed from N
/// and the software is then used under `true_profile`.
double evaluate_policy(const PolicyTable& policy, const ModelSpec& model, const UtilitySpec& u,
                       const OperationalProfile& true_profile);

/// Baseline objective: minimize the expected number of residual defects.
/// The report's values are expected residual counts (not negated).
SolveReport solve_min_defects(const ModelSpec& model, const SolveOptions& options = {});

/// Score p_i((1 - th_i + th_i^2)^{x_i} - (1 - th_i)^{x_i}) whose arg max is the
/// optimal choice one period before release (identity utility, known profile).
double tminus1_score(int x, double theta, double p);

int closed_form_Tminus1_choice(std::span<const int> x, const ModelSpec& model, const OperationalProfile& p);

/// As above, but checks that (u, P) is the identity/singleton case first.
int closed_form_Tminus1_choice(std::span<const int> x, const ModelSpec& model, const UtilitySpec& u,
                               const UncertaintySet& P);

/// Relative shortfall (optimal - achieved) / optimal, as a fraction.
double gap(double optimal_value, double achieved_value);

} // namespace reltest
