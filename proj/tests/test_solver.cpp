#include "reltest/errors.hpp"
#include "reltest/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace reltest;

namespace {

// Binomial pmf from log-gamma, independent of binomial_kernel.
double binom_pmf(int n, int k, double q) {
    if (q <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (q >= 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(q) +
                    (n - k) * std::log1p(-q));
}

// With one module every period tests it, so the survivors after T periods are
// Binom(N, (1-theta)^T).
double one_module_value(int N, double theta, int T, const UtilitySpec& u) {
    const double q = std::pow(1 - theta, T);
    double total = 0.0;
    for (int k = 0; k <= N; ++k) total += binom_pmf(N, k, q) * utility_eval(u, std::pow(1 - theta, k));
    return total;
}

UncertaintySet single(std::vector<double> p) { return UncertaintySet::singleton(OperationalProfile(std::move(p))); }

SolveOptions serial() {
    SolveOptions o;
    o.workers = 1;
    return o;
}

} // namespace

TEST(Solve, OneModuleExample) {
    const ModelSpec model{1, {5}, {0.2}, 3};
    const auto r = solve(model, UtilitySpec::identity(), single({1.0}), serial());
    EXPECT_NEAR(r.value_at_start, 0.5826586785748, 1e-12);
    EXPECT_NEAR(r.value_at_start, std::pow(0.8976, 5), 1e-12);
}

TEST(Solve, OneModuleMatchesClosedFormForAllUtilities) {
    for (const auto& u : {UtilitySpec::identity(), UtilitySpec::quadratic(), UtilitySpec::exponential(1.0),
                          UtilitySpec::exponential(0.1), UtilitySpec::exponential(0.01)}) {
        for (auto [N, theta, T] : {std::tuple{5, 0.2, 3}, std::tuple{40, 0.05, 12}, std::tuple{0, 0.5, 4}}) {
            const ModelSpec model{1, {N}, {theta}, T};
            const auto r = solve(model, u, single({1.0}), serial());
            EXPECT_NEAR(r.value_at_start, one_module_value(N, theta, T, u), 1e-12)
                << to_string(u.kind) << " N=" << N << " T=" << T;
        }
    }
}

TEST(Solve, NoPeriodsLeftIsTerminalValue) {
    const ModelSpec model{2, {6, 4}, {0.3, 0.2}, 3};
    const auto P = UncertaintySet::finite({OperationalProfile({0.2, 0.8}), OperationalProfile({0.8, 0.2})});
    const auto r = solve(model, UtilitySpec::identity(), P, serial());
    EXPECT_EQ(r.policy.horizon(), 3);
    const std::vector<int> n{6, 4};
    EXPECT_DOUBLE_EQ(r.values.at(3, n), worst_case(n, model.theta, P).value);
    EXPECT_THROW(solve(ModelSpec{2, {6, 4}, {0.3, 0.2}, 0}, UtilitySpec::identity(), P), ValidationError);
}

TEST(Solve, TerminalSliceIsWorstCaseUtility) {
    const ModelSpec model{2, {8, 8}, {0.3, 0.2}, 2};
    const auto P = UncertaintySet::interval({0.3, 0.3}, {0.7, 0.7});
    const auto u = UtilitySpec::exponential(0.5);
    const auto r = solve(model, u, P, serial());
    for (std::size_t s = 0; s < r.values.grid().size(); ++s) {
        const auto x = r.values.grid().decode(s);
        EXPECT_NEAR(r.values.slice(2)[s], utility_eval(u, worst_case(x, model.theta, P).value), 1e-12);
    }
}

TEST(Solve, ValuesAreProbabilitiesForIdentity) {
    const ModelSpec model{3, {4, 5, 3}, {0.1, 0.4, 0.25}, 4};
    const auto r = solve(model, UtilitySpec::identity(), single({0.2, 0.5, 0.3}), serial());
    for (int t = 0; t <= 4; ++t)
        for (double v : r.values.slice(t)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    EXPECT_EQ(r.states_evaluated, r.values.grid().size() * 4);
}

TEST(Solve, QuadraticUtilityWarns) {
    const ModelSpec model{1, {3}, {0.2}, 1};
    EXPECT_TRUE(solve(model, UtilitySpec::identity(), single({1.0}), serial()).warnings.empty());
    EXPECT_FALSE(solve(model, UtilitySpec::quadratic(), single({1.0}), serial()).warnings.empty());
}

TEST(Solve, CapacityAndValidation) {
    const ModelSpec big{3, {300, 300, 300}, {0.1, 0.1, 0.1}, 2};
    EXPECT_THROW(solve(big, UtilitySpec::identity(), single({0.3, 0.3, 0.4})), CapacityError);
    SolveOptions tight;
    tight.state_cap = 10;
    EXPECT_THROW(solve(ModelSpec{1, {10}, {0.1}, 1}, UtilitySpec::identity(), single({1.0}), tight), CapacityError);
    EXPECT_THROW(solve(ModelSpec{2, {3, 3}, {0.1, 0.1}, 1}, UtilitySpec::identity(), single({1.0})), ValidationError);
    EXPECT_THROW(solve(ModelSpec{1, {3}, {1.5}, 1}, UtilitySpec::identity(), single({1.0})), ValidationError);
}

TEST(Solve, DroppedSlicesKeepTheAnswer) {
    const ModelSpec model{2, {20, 15}, {0.1, 0.2}, 6};
    const auto P = single({0.4, 0.6});
    const auto full = solve(model, UtilitySpec::identity(), P, serial());
    auto opts = serial();
    opts.retain_all_slices = false;
    const auto lean = solve(model, UtilitySpec::identity(), P, opts);
    EXPECT_EQ(full.value_at_start, lean.value_at_start);
    EXPECT_EQ(full.policy, lean.policy);
    EXPECT_TRUE(full.values.complete());
    EXPECT_FALSE(lean.values.complete());
    EXPECT_TRUE(lean.values.has_slice(0));
    EXPECT_TRUE(lean.values.has_slice(6));
    EXPECT_THROW(lean.values.slice(3), UnsupportedError);
}

TEST(Solve, WorkerCountDoesNotChangeResults) {
    const ModelSpec model{2, {80, 70}, {0.05, 0.08}, 5};
    const auto P = UncertaintySet::interval({0.4, 0.4}, {0.6, 0.6});
    for (const auto& u : {UtilitySpec::identity(), UtilitySpec::exponential(0.05)}) {
        const auto one = solve(model, u, P, serial());
        for (unsigned w : {2u, 3u, 8u}) {
            SolveOptions o;
            o.workers = w;
            const auto many = solve(model, u, P, o);
            EXPECT_EQ(one.policy, many.policy);
            for (int t = 0; t <= model.T; ++t) {
                const auto a = one.values.slice(t), b = many.values.slice(t);
                ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
            }
        }
    }
}

TEST(BellmanStep, OneModuleGeometricValues) {
    const ModelSpec model{1, {12}, {0.3}, 1};
    const double a = 0.85;
    std::vector<double> next(13);
    for (int x = 0; x <= 12; ++x) next[x] = std::pow(a, x);
    const auto out = bellman_step(next, model, 0);
    for (int x = 0; x <= 12; ++x) EXPECT_NEAR(out[x], std::pow(0.3 + 0.7 * a, x), 1e-14);
}

TEST(BellmanStep, UntestedAxisIsUntouchedAndZeroIsFixed) {
    const ModelSpec model{2, {4, 3}, {0.25, 0.5}, 1};
    const StateGrid grid(std::vector<int>{4, 3});
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> next(grid.size());
    for (auto& v : next) v = unit(rng);
    const auto out = bellman_step(next, model, 0);
    for (int b = 0; b <= 3; ++b) {
        const std::vector<int> zero{0, b};
        EXPECT_DOUBLE_EQ(out[grid.index(zero)], next[grid.index(zero)]);
        for (int a = 1; a <= 4; ++a) {
            double expect = 0.0;
            for (int k = 0; k <= a; ++k) expect += binom_pmf(a, k, 0.75) * next[grid.index(std::vector<int>{k, b})];
            EXPECT_NEAR(out[grid.index(std::vector<int>{a, b})], expect, 1e-14);
        }
    }
    EXPECT_THROW(bellman_step(next, model, 2), ValidationError);
}

TEST(ClosedForm, ScoreExample) {
    EXPECT_NEAR(tminus1_score(4, 0.3, 0.5), 0.0747004, 1e-7);
    EXPECT_NEAR(tminus1_score(7, 0.3, 0.5), 0.0548424, 1e-7);
    EXPECT_EQ(tminus1_score(0, 0.3, 0.5), 0.0);
    const ModelSpec model{2, {14, 14}, {0.3, 0.3}, 1};
    EXPECT_EQ(closed_form_Tminus1_choice(std::vector<int>{4, 7}, model, OperationalProfile({0.5, 0.5})), 0);

    // Unimodal in x with its peak at 3.
    for (int x = 0; x < 14; ++x) {
        if (x < 3) EXPECT_LT(tminus1_score(x, 0.3, 0.5), tminus1_score(x + 1, 0.3, 0.5));
        else EXPECT_GT(tminus1_score(x, 0.3, 0.5), tminus1_score(x + 1, 0.3, 0.5));
    }
}

TEST(ClosedForm, AgreesWithLastPeriodOfSolve) {
    const ModelSpec model{3, {8, 10, 6}, {0.3, 0.15, 0.5}, 3};
    const OperationalProfile p({0.3, 0.5, 0.2});
    const auto r = solve(model, UtilitySpec::identity(), UncertaintySet::singleton(p), serial());
    for (std::size_t s = 0; s < r.policy.grid().size(); ++s) {
        const auto x = r.policy.grid().decode(s);
        EXPECT_EQ(r.policy.choice(model.T - 1, s), closed_form_Tminus1_choice(x, model, p));
    }
}

TEST(ClosedForm, RejectsOtherSettings) {
    const ModelSpec model{2, {3, 3}, {0.3, 0.3}, 1};
    const std::vector<int> x{1, 2};
    EXPECT_NO_THROW(closed_form_Tminus1_choice(x, model, UtilitySpec::identity(), single({0.5, 0.5})));
    EXPECT_THROW(closed_form_Tminus1_choice(x, model, UtilitySpec::quadratic(), single({0.5, 0.5})), UnsupportedError);
    EXPECT_THROW(closed_form_Tminus1_choice(x, model, UtilitySpec::identity(),
                                            UncertaintySet::interval({0.4, 0.4}, {0.6, 0.6})),
                 UnsupportedError);
}

TEST(EvaluatePolicy, OptimalPolicyReproducesTheOptimum) {
    const ModelSpec model{2, {15, 12}, {0.1, 0.2}, 5};
    const OperationalProfile p({0.35, 0.65});
    for (const auto& u : {UtilitySpec::identity(), UtilitySpec::exponential(0.2)}) {
        const auto r = solve(model, u, UncertaintySet::singleton(p), serial());
        EXPECT_NEAR(evaluate_policy(r.policy, model, u, p), r.value_at_start, 1e-12);
        for (int i = 0; i < 2; ++i)
            EXPECT_LE(evaluate_policy(PolicyTable::constant(r.policy.grid(), model.T, i), model, u, p),
                      r.value_at_start + 1e-12);
    }
}

TEST(EvaluatePolicy, ConstantPolicyHasProductForm) {
    // Always testing module 0 leaves module 1 at N_1 and module 0 at K ~ Binom(N_0, (1-th)^T),
    // with E[(1-th)^K] = (1 - q th)^N_0.
    const ModelSpec model{2, {9, 4}, {0.2, 0.3}, 4};
    const OperationalProfile p({0.6, 0.4});
    const auto pol = PolicyTable::constant(StateGrid(std::vector<int>{9, 4}), 4, 0);
    const double expect = 0.6 * std::pow(1 - 0.2 * std::pow(0.8, 4), 9) + 0.4 * std::pow(0.7, 4);
    EXPECT_NEAR(evaluate_policy(pol, model, UtilitySpec::identity(), p), expect, 1e-12);
}

TEST(MinDefects, OnePeriodTestsLargestExpectedFind) {
    const ModelSpec model{3, {6, 9, 4}, {0.3, 0.1, 0.5}, 1};
    const auto r = solve_min_defects(model, serial());
    for (std::size_t s = 0; s < r.policy.grid().size(); ++s) {
        const auto x = r.policy.grid().decode(s);
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (model.theta[i] * x[i] > model.theta[best] * x[best] + 1e-12) best = i;
        EXPECT_EQ(r.policy.choice(0, s), best);
        const double total = x[0] + x[1] + x[2];
        EXPECT_NEAR(r.values.slice(0)[s], total - model.theta[best] * x[best], 1e-12);
    }
}

TEST(MinDefects, NoDefectsNoResidual) {
    const auto r = solve_min_defects(ModelSpec{2, {0, 0}, {0.2, 0.3}, 3}, serial());
    EXPECT_EQ(r.value_at_start, 0.0);
}

TEST(Gap, ExamplesAndErrors) {
    EXPECT_NEAR(gap(0.5, 0.49), 0.02, 1e-15);
    EXPECT_EQ(gap(0.3, 0.3), 0.0);
    EXPECT_THROW(gap(0.0, 0.0), DomainError);
    EXPECT_THROW(gap(0.5, 0.6), DomainError);
}

TEST(Solve, QuadraticTerminalIsWorstUtilityNotWorstReliability) {
    // At x = (0, 0) every profile gives R = 1 and U = 0; at x = (0, 9) the two
    // members give R = 0.2 + 0.8 * 0.5^9 and 0.8 + 0.2 * 0.5^9, so the
    // smaller utility comes from the larger reliability.
    const ModelSpec model{2, {1, 9}, {0.3, 0.5}, 1};
    const auto P = UncertaintySet::finite({OperationalProfile({0.2, 0.8}), OperationalProfile({0.8, 0.2})});
    const auto r = solve(model, UtilitySpec::quadratic(), P, serial());
    const std::vector<int> x{0, 9};
    const double low = 0.2 + 0.8 * std::pow(0.5, 9), high = 0.8 + 0.2 * std::pow(0.5, 9);
    EXPECT_NEAR(r.values.at(1, x), high - high * high, 1e-15);
    EXPECT_LT(high - high * high, low - low * low);
}
