#pragma once

#include "reltest/model.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace reltest {

/// Set P of operational profiles the tester considers possible.
///
/// Four shapes are supported:
///   singleton  {p}
///   finite     {p^1, ..., p^K}
///   interval   {p in simplex : lo <= p <= hi}
///   ellipsoid  {p0 + Y z : ||z||_2 <= eps, p >= 0}, where every column of
///              the m x L matrix Y sums to zero so that sum(p) stays 1.
///
/// An ellipsoid written with a covariance, (p - p0)^T S^{-1} (p - p0) <= eps^2,
/// maps onto this form with Y = S^{1/2} (any square root with zero column sums).
class UncertaintySet {
public:
    enum class Kind { singleton, finite, interval, ellipsoid };

    struct Members {
        std::vector<OperationalProfile> profiles;
        bool operator==(const Members&) const = default;
    };
    struct Interval {
        std::vector<double> lo;
        std::vector<double> hi;
        bool operator==(const Interval&) const = default;
    };
    struct Ellipsoid {
        OperationalProfile center;
        std::vector<std::vector<double>> Y; ///< m rows, L columns
        double epsilon = 0.0;
        bool operator==(const Ellipsoid&) const = default;
    };

    static constexpr double kFeasibilityTol = 1e-9;

    static UncertaintySet singleton(OperationalProfile p);
    static UncertaintySet finite(std::vector<OperationalProfile> profiles);
    /// Throws ValidationError on malformed bounds, InfeasibleError when the box misses the simplex.
    static UncertaintySet interval(std::vector<double> lo, std::vector<double> hi);
    static UncertaintySet ellipsoid(OperationalProfile center, std::vector<std::vector<double>> Y, double epsilon);

    Kind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept;

    /// Singleton and finite sets only.
    const std::vector<OperationalProfile>& members() const;
    const Interval& interval_bounds() const;
    const Ellipsoid& ellipsoid_data() const;

    bool operator==(const UncertaintySet&) const = default;

private:
    UncertaintySet(Kind kind, std::variant<Members, Interval, Ellipsoid> data)
        : kind_(kind), data_(std::move(data)) {}

    Kind kind_;
    std::variant<Members, Interval, Ellipsoid> data_;
};

std::string to_string(UncertaintySet::Kind kind);

struct WorstCaseResult {
    OperationalProfile profile;
    double value = 0.0;   ///< min over P of sum_i p_i c_i
    std::string active;   ///< which member / vertex / boundary point attained it
};

/// Minimizes the delivered reliability R(x, p) over p in P.
WorstCaseResult worst_case(std::span<const int> x, std::span<const double> theta, const UncertaintySet& P);

/// Minimizes the linear function c . p over P. `worst_case` is this with
/// c_i = (1 - theta_i)^{x_i}.
WorstCaseResult minimize_linear(std::span<const double> c, const UncertaintySet& P);

/// Two-member set equivalent to the m = 2 interval p_1 in [p_hat1 - delta, p_hat1 + delta].
UncertaintySet interval_m2_reduce(double p_hat1, double delta);

/// Membership with tolerance. On dimension mismatch returns false and, if
/// `diagnostic` is given, says why.
bool contains(const UncertaintySet& P, std::span<const double> p, double tol = UncertaintySet::kFeasibilityTol,
              std::string* diagnostic = nullptr);

inline bool contains(const UncertaintySet& P, const OperationalProfile& p, double tol = UncertaintySet::kFeasibilityTol,
                     std::string* diagnostic = nullptr) {
    return contains(P, p.span(), tol, diagnostic);
}

} // namespace reltest
