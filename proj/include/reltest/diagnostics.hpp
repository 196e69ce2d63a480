#pragma once

#include "reltest/model.hpp"
#include "reltest/solver.hpp"
#include "reltest/uncertainty.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reltest {

struct Witness {
    int t = 0;
    std::vector<int> x;
    int axis = -1;    ///< 0-based module axis the comparison moved along
    double lhs = 0.0; ///< the two sides of the violated inequality
    double rhs = 0.0;

    std::string describe() const;
};

struct PropertyReport {
    std::string property_name;
    bool holds = true;
    std::vector<Witness> witnesses; ///< lexicographic in (t, x, axis); capped at kMaxWitnesses
    std::uint64_t violations = 0;   ///< total count, even past the cap
    std::uint64_t states_checked = 0;

    static constexpr std::size_t kMaxWitnesses = 10000;
};

inline constexpr double kScanTolerance = 1e-12;
inline constexpr std::uint64_t kBruteForceBranchCap = 1'000'000;

/// J_t(x + e_i) <= J_t(x) over every retained slice.
PropertyReport scan_monotone_x(const ValueTable& table);

/// J_t(x) >= J_{t+1}(x) for consecutive retained slices.
PropertyReport scan_monotone_t(const ValueTable& table);

/// J_t(x + e_i) + J_t(x - e_i) >= 2 J_t(x) along every axis.
PropertyReport scan_convexity(const ValueTable& table);

/// Upper bound on the size of the trajectory tree: prod over periods of
/// sum_i (N_i + 1).
std::uint64_t trajectory_branch_bound(const ModelSpec& model);

/// Expected terminal value by walking the whole outcome tree with explicit
/// binomial probabilities. Terminal value is min over P of U(R(x, p)); with
/// `policy == nullptr` every node takes the best module (expectimax),
/// otherwise the policy's choice. Throws CapacityError above the branch cap.
double brute_force_value(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P,
                         const PolicyTable* policy = nullptr);

struct PolicySearchResult {
    double best_value = 0.0;
    std::uint64_t policies_examined = 0;
    std::size_t decision_nodes = 0; ///< reachable (x, t) with t < T
};

/// Tries every deterministic Markov policy on the reachable nodes.
/// Throws CapacityError when there are more than `max_policies` of them.
PolicySearchResult exhaustive_policy_search(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P,
                                            std::uint64_t max_policies = 64);

/// Number of deterministic Markov policies on the reachable tree (saturating).
std::uint64_t count_markov_policies(const ModelSpec& model);

struct NonmonotoneWitness {
    int t = 0;
    std::vector<int> x;
    int module = 0;       ///< chosen at x
    int choice_after = 0; ///< chosen at x + e_module
};

/// First (t, x, i) in lexicographic order with choice(x) = i but
/// choice(x + e_i) != i.
std::optional<NonmonotoneWitness> find_nonmonotone_policy(const PolicyTable& policy);

std::optional<NonmonotoneWitness> find_nonmonotone_policy(const ModelSpec& model, const UtilitySpec& u,
                                                          const UncertaintySet& P);

} // namespace reltest
