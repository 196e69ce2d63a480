#include "reltest/diagnostics.hpp"
#include "reltest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace reltest {

std::string Witness::describe() const {
    return fmt::format("t={} x=({}) axis={} lhs={:.12g} rhs={:.12g}", t, fmt::join(x, ","), axis + 1, lhs, rhs);
}

namespace {

void record(PropertyReport& report, Witness w) {
    ++report.violations;
    if (report.witnesses.size() < PropertyReport::kMaxWitnesses) report.witnesses.push_back(std::move(w));
}

void finish(PropertyReport& report) { report.holds = report.witnesses.empty(); }

} // namespace

PropertyReport scan_monotone_x(const ValueTable& table) {
    PropertyReport report{"J_t non-increasing in x", true, {}, 0, 0};
    const auto& grid = table.grid();
    for (int t = 0; t <= table.horizon(); ++t) {
        if (!table.has_slice(t)) continue;
        const auto J = table.slice(t);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            ++report.states_checked;
            for (std::size_t i = 0; i < grid.dimension(); ++i) {
                if (grid.coordinate(s, i) == grid.upper()[i]) continue;
                const double up = J[s + grid.stride(i)];
                if (up > J[s] + kScanTolerance) record(report, {t, grid.decode(s), static_cast<int>(i), up, J[s]});
            }
        }
    }
    finish(report);
    return report;
}

PropertyReport scan_monotone_t(const ValueTable& table) {
    PropertyReport report{"J_t non-increasing in t", true, {}, 0, 0};
    const auto& grid = table.grid();
    for (int t = 0; t < table.horizon(); ++t) {
        if (!table.has_slice(t) || !table.has_slice(t + 1)) continue;
        const auto now = table.slice(t);
        const auto later = table.slice(t + 1);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            ++report.states_checked;
            if (now[s] < later[s] - kScanTolerance) record(report, {t, grid.decode(s), -1, now[s], later[s]});
        }
    }
    finish(report);
    return report;
}

PropertyReport scan_convexity(const ValueTable& table) {
    PropertyReport report{"J_t convex along each axis", true, {}, 0, 0};
    const auto& grid = table.grid();
    for (int t = 0; t <= table.horizon(); ++t) {
        if (!table.has_slice(t)) continue;
        const auto J = table.slice(t);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            ++report.states_checked;
            for (std::size_t i = 0; i < grid.dimension(); ++i) {
                const int xi = grid.coordinate(s, i);
                if (xi == 0 || xi == grid.upper()[i]) continue;
                const double outer = J[s + grid.stride(i)] + J[s - grid.stride(i)];
                const double inner = 2.0 * J[s];
                if (outer < inner - kScanTolerance) record(report, {t, grid.decode(s), static_cast<int>(i), outer, inner});
            }
        }
    }
    finish(report);
    return report;
}

std::uint64_t trajectory_branch_bound(const ModelSpec& model) {
    std::uint64_t per_period = 0;
    for (int n : model.N) per_period += static_cast<std::uint64_t>(n) + 1;
    std::uint64_t total = 1;
    for (int t = 0; t < model.T; ++t) {
        if (total > std::numeric_limits<std::uint64_t>::max() / per_period) return std::numeric_limits<std::uint64_t>::max();
        total *= per_period;
    }
    return total;
}

namespace {

// P(k of n survive) computed directly, not through the solver's recurrence.
double survivor_probability(int n, int k, double survive) {
    double choose = 1.0;
    for (int j = 1; j <= k; ++j) choose = choose * (n - k + j) / j;
    return choose * std::pow(survive, k) * std::pow(1.0 - survive, n - k);
}

class TreeWalker {
public:
    TreeWalker(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P) : model_(model), u_(u), P_(P) {}

    double terminal(const std::vector<int>& x) const {
        if (P_.kind() == UncertaintySet::Kind::singleton || P_.kind() == UncertaintySet::Kind::finite) {
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& p : P_.members()) {
                double r = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) r += p[i] * std::pow(1.0 - model_.theta[i], x[i]);
                worst = std::min(worst, utility_eval(u_, r));
            }
            return worst;
        }
        // U is non-decreasing or concave in R and R is linear in p, so the minimum
        // of U(R) over a convex set is at one end of the range of R.
        std::vector<double> c(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) c[i] = std::pow(1.0 - model_.theta[i], x[i]);
        const double lo = minimize_linear(c, P_).value;
        if (u_.kind != UtilityKind::quadratic) return utility_eval(u_, lo);
        for (auto& v : c) v = -v;
        const double hi = -minimize_linear(c, P_).value;
        return std::min(utility_eval(u_, lo), utility_eval(u_, hi));
    }

    double expected_after(std::vector<int>& x, int t, int module, const auto& chooser) const {
        const auto i = static_cast<std::size_t>(module);
        const int n = x[i];
        double acc = 0.0;
        for (int k = 0; k <= n; ++k) {
            x[i] = k;
            acc += survivor_probability(n, k, 1.0 - model_.theta[i]) * value(x, t + 1, chooser);
        }
        x[i] = n;
        return acc;
    }

    // chooser(x, t) returns a module, or -1 for "maximize over modules".
    double value(std::vector<int>& x, int t, const auto& chooser) const {
        if (t == model_.T) return terminal(x);
        const int fixed = chooser(x, t);
        if (fixed >= 0) return expected_after(x, t, fixed, chooser);
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < model_.m; ++i) best = std::max(best, expected_after(x, t, i, chooser));
        return best;
    }

private:
    const ModelSpec& model_;
    const UtilitySpec& u_;
    const UncertaintySet& P_;
};

void check_tree_size(const ModelSpec& model) {
    const auto bound = trajectory_branch_bound(model);
    if (bound > kBruteForceBranchCap) throw CapacityError("trajectory tree", bound, kBruteForceBranchCap);
}

// Reachable decision nodes (t, x), t < T, in lexicographic order.
std::vector<std::pair<int, std::vector<int>>> reachable_nodes(const ModelSpec& model) {
    std::vector<std::pair<int, std::vector<int>>> nodes;
    std::set<std::vector<int>> layer{model.N};
    for (int t = 0; t < model.T; ++t) {
        std::set<std::vector<int>> next;
        for (const auto& x : layer) {
            nodes.emplace_back(t, x);
            for (std::size_t i = 0; i < x.size(); ++i) {
                auto y = x;
                for (int k = 0; k <= x[i]; ++k) {
                    y[i] = k;
                    next.insert(y);
                }
            }
        }
        layer = std::move(next);
    }
    return nodes;
}

} // namespace

double brute_force_value(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P, const PolicyTable* policy) {
    validate_model(model);
    validate_utility(u);
    check_tree_size(model);
    if (P.dimension() != static_cast<std::size_t>(model.m)) throw ValidationError("uncertainty", "dimension does not match m");
    if (policy && (policy->horizon() != model.T || policy->grid().upper() != model.N)) {
        throw ValidationError("policy", "does not cover the model's grid and horizon");
    }

    TreeWalker walker(model, u, P);
    std::vector<int> x = model.N;
    if (policy) {
        return walker.value(x, 0, [policy](const std::vector<int>& s, int t) { return policy->choice(t, s); });
    }
    return walker.value(x, 0, [](const std::vector<int>&, int) { return -1; });
}

std::uint64_t count_markov_policies(const ModelSpec& model) {
    const auto nodes = reachable_nodes(model).size();
    std::uint64_t count = 1;
    for (std::size_t k = 0; k < nodes; ++k) {
        if (count > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(model.m)) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        count *= static_cast<std::uint64_t>(model.m);
    }
    return count;
}

PolicySearchResult exhaustive_policy_search(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P,
                                            std::uint64_t max_policies) {
    validate_model(model);
    validate_utility(u);
    check_tree_size(model);
    const auto nodes = reachable_nodes(model);
    const auto total = count_markov_policies(model);
    if (total > max_policies) throw CapacityError("deterministic Markov policies", total, max_policies);

    std::map<std::pair<int, std::vector<int>>, std::size_t> slot;
    for (std::size_t k = 0; k < nodes.size(); ++k) slot.emplace(nodes[k], k);

    TreeWalker walker(model, u, P);
    PolicySearchResult result{-std::numeric_limits<double>::infinity(), 0, nodes.size()};
    std::vector<int> assignment(nodes.size(), 0);
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t rest = code;
        for (auto& a : assignment) {
            a = static_cast<int>(rest % static_cast<std::uint64_t>(model.m));
            rest /= static_cast<std::uint64_t>(model.m);
        }
        std::vector<int> x = model.N;
        const double v = walker.value(x, 0, [&](const std::vector<int>& s, int t) {
            return assignment[slot.at({t, s})];
        });
        result.best_value = std::max(result.best_value, v);
        ++result.policies_examined;
    }
    return result;
}

std::optional<NonmonotoneWitness> find_nonmonotone_policy(const PolicyTable& policy) {
    const auto& grid = policy.grid();
    for (int t = 0; t < policy.horizon(); ++t) {
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const int i = policy.choice(t, s);
            const auto axis = static_cast<std::size_t>(i);
            if (grid.coordinate(s, axis) == grid.upper()[axis]) continue;
            const int after = policy.choice(t, s + grid.stride(axis));
            if (after != i) return NonmonotoneWitness{t, grid.decode(s), i, after};
        }
    }
    return std::nullopt;
}

std::optional<NonmonotoneWitness> find_nonmonotone_policy(const ModelSpec& model, const UtilitySpec& u,
                                                          const UncertaintySet& P) {
    return find_nonmonotone_policy(solve(model, u, P).policy);
}

} // namespace reltest
