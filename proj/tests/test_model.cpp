#include "reltest/errors.hpp"
#include "reltest/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace reltest;

namespace {

// C(n, k) q^k (1 - q)^{n - k} straight from the definition.
double binomial_pmf_direct(int n, int k, double q) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(q) +
                    (n - k) * std::log1p(-q));
}

} // namespace

TEST(Reliability, ZeroDefectsIsCertainSuccess) {
    const std::vector<int> x{0, 0};
    EXPECT_DOUBLE_EQ(reliability(x, OperationalProfile({0.2, 0.8}), std::vector<double>{0.3, 0.2}), 1.0);
}

TEST(Reliability, TwoProfileExampleValues) {
    const OperationalProfile p({0.8, 0.2});
    const std::vector<double> theta{0.3, 0.2};
    const double at12 = reliability(std::vector<int>{12, 19}, p, theta);
    const double at13 = reliability(std::vector<int>{13, 19}, p, theta);
    EXPECT_NEAR(at12, 0.014, 5e-4);
    EXPECT_NEAR(at12, 0.0139553335, 1e-9);
    EXPECT_NEAR(at13, 0.0106, 5e-5);
    EXPECT_NEAR(at13, 0.0106334246, 1e-9);
}

TEST(Reliability, RejectsBadInput) {
    const OperationalProfile p({0.5, 0.5});
    EXPECT_THROW(reliability(std::vector<int>{1, 2, 3}, p, std::vector<double>{0.1, 0.1}), ValidationError);
    EXPECT_THROW(reliability(std::vector<int>{1, 2}, p, std::vector<double>{0.0, 0.1}), ValidationError);
    EXPECT_THROW(reliability(std::vector<int>{1, 2}, p, std::vector<double>{0.1, 1.0}), ValidationError);
}

TEST(Reliability, NonIncreasingInEachComponent) {
    const OperationalProfile p({0.3, 0.5, 0.2});
    const std::vector<double> theta{0.05, 0.4, 0.9};
    for (int a = 0; a < 12; ++a)
        for (int b = 0; b < 12; ++b)
            for (int c = 0; c < 12; ++c) {
                const double here = reliability(std::vector<int>{a, b, c}, p, theta);
                EXPECT_LE(reliability(std::vector<int>{a + 1, b, c}, p, theta), here);
                EXPECT_LE(reliability(std::vector<int>{a, b + 1, c}, p, theta), here);
                EXPECT_LE(reliability(std::vector<int>{a, b, c + 1}, p, theta), here);
            }
}

TEST(Reliability, LinearInProfile) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 40);
    auto random_profile = [&](std::size_t m) {
        std::vector<double> w(m);
        for (auto& v : w) v = unit(rng);
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& v : w) v /= s;
        w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
        return OperationalProfile(w);
    };
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 4;
        std::vector<int> x(m);
        std::vector<double> theta(m);
        for (std::size_t i = 0; i < m; ++i) {
            x[i] = count(rng);
            theta[i] = 0.01 + 0.98 * unit(rng);
        }
        const auto p = random_profile(m);
        const auto q = random_profile(m);
        const double alpha = unit(rng);
        std::vector<double> mix(m);
        for (std::size_t i = 0; i < m; ++i) mix[i] = alpha * p[i] + (1 - alpha) * q[i];
        const double s = std::accumulate(mix.begin(), mix.end(), 0.0);
        ASSERT_NEAR(s, 1.0, 1e-12);
        const double lhs = reliability(x, OperationalProfile(mix), theta);
        const double rhs = alpha * reliability(x, p, theta) + (1 - alpha) * reliability(x, q, theta);
        EXPECT_NEAR(lhs, rhs, 1e-12);
    }
}

TEST(Utility, Examples) {
    EXPECT_DOUBLE_EQ(utility_eval(UtilitySpec::identity(), 0.5382), 0.5382);
    EXPECT_DOUBLE_EQ(utility_eval(UtilitySpec::exponential(1.0), 0.0), 0.0);
    EXPECT_DOUBLE_EQ(utility_eval(UtilitySpec::quadratic(), 0.0), 0.0);
    EXPECT_NEAR(utility_eval(UtilitySpec::quadratic(), 0.3), 0.21, 1e-15);
    EXPECT_NEAR(utility_eval(UtilitySpec::exponential(0.5), 1.0), 1.0 - std::exp(-2.0), 1e-15);
}

TEST(Utility, DomainAndGammaErrors) {
    EXPECT_THROW(utility_eval(UtilitySpec::identity(), 1.01), DomainError);
    EXPECT_THROW(utility_eval(UtilitySpec::identity(), -0.01), DomainError);
    EXPECT_NO_THROW(utility_eval(UtilitySpec::identity(), 1.0 + 5e-10));
    EXPECT_THROW(utility_eval(UtilitySpec::exponential(0.0), 0.5), ValidationError);
    EXPECT_THROW(utility_eval(UtilitySpec::exponential(-1.0), 0.5), ValidationError);
}

TEST(Utility, NonDecreasingOnItsIncreasingRange) {
    for (const auto& u : {UtilitySpec::identity(), UtilitySpec::exponential(0.001), UtilitySpec::exponential(1.0),
                          UtilitySpec::exponential(1e6)}) {
        for (int k = 0; k < 1000; ++k) EXPECT_LE(utility_eval(u, k * 1e-3), utility_eval(u, (k + 1) * 1e-3));
    }
    for (int k = 0; k < 500; ++k) {
        EXPECT_LE(utility_eval(UtilitySpec::quadratic(), k * 1e-3), utility_eval(UtilitySpec::quadratic(), (k + 1) * 1e-3));
    }
}

TEST(Utility, KindNamesRoundTrip) {
    for (auto k : {UtilityKind::identity, UtilityKind::quadratic, UtilityKind::exponential}) {
        EXPECT_EQ(utility_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(utility_kind_from_string("logarithmic"), ValidationError);
}

TEST(BinomialKernel, SmallCases) {
    EXPECT_EQ(binomial_kernel(0, 0.8).pmf, std::vector<double>{1.0});
    const auto one = binomial_kernel(1, 0.8).pmf;
    ASSERT_EQ(one.size(), 2u);
    EXPECT_NEAR(one[0], 0.2, 1e-15);
    EXPECT_NEAR(one[1], 0.8, 1e-15);
    const auto two = binomial_kernel(2, 0.9).pmf;
    ASSERT_EQ(two.size(), 3u);
    EXPECT_NEAR(two[0], 0.01, 1e-15);
    EXPECT_NEAR(two[1], 0.18, 1e-15);
    EXPECT_NEAR(two[2], 0.81, 1e-15);
}

TEST(BinomialKernel, SumsToOneAndMatchesDefinition) {
    for (double q : {0.001, 0.015, 0.2, 0.5, 0.8, 0.985, 0.999}) {
        for (int n = 0; n <= 200; ++n) {
            const auto k = binomial_kernel(n, q);
            ASSERT_EQ(k.pmf.size(), static_cast<std::size_t>(n) + 1);
            double sum = 0.0;
            for (int j = 0; j <= n; ++j) {
                ASSERT_GE(k.pmf[j], 0.0);
                sum += k.pmf[j];
                EXPECT_NEAR(k.pmf[j], binomial_pmf_direct(n, j, q), 1e-12) << "n=" << n << " k=" << j << " q=" << q;
            }
            EXPECT_NEAR(sum, 1.0, 1e-12) << "n=" << n << " q=" << q;
        }
    }
}

TEST(BinomialKernel, RejectsDegenerateProbability) {
    EXPECT_THROW(binomial_kernel(3, 0.0), ValidationError);
    EXPECT_THROW(binomial_kernel(3, 1.0), ValidationError);
    EXPECT_THROW(binomial_kernel(-1, 0.5), ValidationError);
}

TEST(ValidateModel, AcceptsReferenceAndDegenerateModels) {
    const ModelSpec model{2, {40, 50}, {0.015, 0.02}, 40};
    EXPECT_EQ(validate_model(model), model);
    EXPECT_EQ(model.state_count(), 2091u);

    const ModelSpec tiny{1, {0}, {0.5}, 1};
    EXPECT_NO_THROW(validate_model(tiny));
    EXPECT_EQ(tiny.state_count(), 1u);
}

TEST(ValidateModel, NamesTheBadTheta) {
    try {
        validate_model({2, {3, 3}, {0.0, 0.5}, 2});
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_EQ(e.violations()[0].field, "theta[1]");
    }
}

TEST(ValidateModel, ReportsEveryViolation) {
    try {
        validate_model({2, {-1, 3}, {0.5, 1.5}, 0});
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        std::vector<std::string> fields;
        for (const auto& v : e.violations()) fields.push_back(v.field);
        EXPECT_EQ(fields, (std::vector<std::string>{"N[1]", "theta[2]", "T"}));
    }
    EXPECT_THROW(validate_model({3, {1, 1}, {0.5, 0.5}, 1}), ValidationError);
}

TEST(ValidateModel, StateCap) {
    const ModelSpec big{3, {999, 999, 999}, {0.1, 0.1, 0.1}, 1};
    try {
        validate_model(big);
        FAIL() << "expected CapacityError";
    } catch (const CapacityError& e) {
        EXPECT_EQ(e.required(), 1'000'000'000u);
        EXPECT_EQ(e.limit(), kDefaultStateCap);
    }
    EXPECT_NO_THROW(validate_model({2, {9, 9}, {0.1, 0.1}, 1}, 100));
    EXPECT_THROW(validate_model({2, {9, 10}, {0.1, 0.1}, 1}, 100), CapacityError);
}

TEST(DefectState, Bounds) {
    const ModelSpec model{2, {3, 4}, {0.1, 0.2}, 5};
    EXPECT_TRUE((DefectState{{3, 4}, 0}.valid_for(model)));
    EXPECT_TRUE((DefectState{{0, 0}, 5}.valid_for(model)));
    EXPECT_FALSE((DefectState{{4, 0}, 0}.valid_for(model)));
    EXPECT_FALSE((DefectState{{0, 0}, 6}.valid_for(model)));
    EXPECT_FALSE((DefectState{{0}, 0}.valid_for(model)));
}

TEST(OperationalProfile, Invariants) {
    EXPECT_NO_THROW(OperationalProfile({0.2, 0.8}));
    EXPECT_THROW(OperationalProfile({0.2, 0.7}), ValidationError);
    EXPECT_THROW(OperationalProfile({-0.1, 1.1}), ValidationError);
    EXPECT_THROW(OperationalProfile(std::vector<double>{}), ValidationError);
}
