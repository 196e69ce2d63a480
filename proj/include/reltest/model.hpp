#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace reltest {

inline constexpr std::uint64_t kDefaultStateCap = 10'000'000;

/// The testing problem: m modules with initial defect counts N_i, per-defect
/// detection probabilities theta_i, and T testing periods of one module each.
struct ModelSpec {
    int m = 0;
    std::vector<int> N;
    std::vector<double> theta;
    int T = 0;

    /// Number of grid states prod(N_i + 1). Saturates at UINT64_MAX.
    std::uint64_t state_count() const;

    bool operator==(const ModelSpec&) const = default;
};

/// Checks every ModelSpec invariant and reports all violations at once.
/// Throws ValidationError, or CapacityError when the grid exceeds `state_cap`.
ModelSpec validate_model(const ModelSpec& spec, std::uint64_t state_cap = kDefaultStateCap);

/// (x, t): x_i defects left in module i at the start of period t.
struct DefectState {
    std::vector<int> x;
    int t = 0;

    bool valid_for(const ModelSpec& model) const;
};

/// Probability vector over modules. Always a member of the simplex.
class OperationalProfile {
public:
    static constexpr double kSumTolerance = 1e-12;

    explicit OperationalProfile(std::vector<double> p);

    std::size_t size() const noexcept { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    const std::vector<double>& values() const noexcept { return p_; }
    std::span<const double> span() const noexcept { return p_; }

    bool operator==(const OperationalProfile&) const = default;
    auto operator<=>(const OperationalProfile& other) const { return p_ <=> other.p_; }

private:
    std::vector<double> p_;
};

enum class UtilityKind { identity, quadratic, exponential };

std::string to_string(UtilityKind kind);
UtilityKind utility_kind_from_string(const std::string& name);

/// The tester's risk attitude.
///   identity     U(r) = r
///   quadratic    U(r) = r - r^2      (decreasing above 1/2)
///   exponential  U(r) = 1 - exp(-r / gamma)
struct UtilitySpec {
    UtilityKind kind = UtilityKind::identity;
    double gamma = 1.0;

    static UtilitySpec identity() { return {UtilityKind::identity, 1.0}; }
    static UtilitySpec quadratic() { return {UtilityKind::quadratic, 1.0}; }
    static UtilitySpec exponential(double gamma) { return {UtilityKind::exponential, gamma}; }

    bool operator==(const UtilitySpec&) const = default;
};

void validate_utility(const UtilitySpec& u);

/// U(r) for r in [0, 1] (1e-9 slack; values in the slack are clamped).
double utility_eval(const UtilitySpec& u, double r);

/// (1 - theta)^x
double survival_power(double theta, int x);

/// Delivered reliability sum_i p_i (1 - theta_i)^{x_i}.
double reliability(std::span<const int> x, const OperationalProfile& p, std::span<const double> theta);

/// Distribution of the number of survivors among n defects that each survive
/// one test independently with probability q.
struct BinomialKernel {
    int n = 0;
    double q = 0.0;
    std::vector<double> pmf;
};

BinomialKernel binomial_kernel(int n, double q);

} // namespace reltest
