#include "reltest/model.hpp"
#include "reltest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace reltest {

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
    std::string out = "validation failed:";
    for (const auto& v : violations) {
        out += fmt::format(" [{}: {}]", v.field, v.constraint);
    }
    return out;
}

} // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::invalid_argument(join_violations(violations)), violations_(std::move(violations)) {}

ValidationError::ValidationError(std::string field, std::string constraint)
    : ValidationError(std::vector<Violation>{{std::move(field), std::move(constraint)}}) {}

CapacityError::CapacityError(const std::string& what, std::uint64_t required, std::uint64_t limit)
    : std::runtime_error(fmt::format("{}: requires {} but the limit is {}", what, required, limit)),
      required_(required), limit_(limit) {}

IoError::IoError(const std::string& path, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", path, what)), path_(path) {}

std::uint64_t ModelSpec::state_count() const {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t count = 1;
    for (int n : N) {
        const auto side = static_cast<std::uint64_t>(n < 0 ? 0 : n) + 1;
        if (count > kMax / side) return kMax;
        count *= side;
    }
    return count;
}

ModelSpec validate_model(const ModelSpec& spec, std::uint64_t state_cap) {
    std::vector<Violation> bad;
    if (spec.m < 1) bad.push_back({"m", "must be a positive integer"});
    if (spec.N.size() != static_cast<std::size_t>(spec.m) && spec.m >= 1) {
        bad.push_back({"N", fmt::format("length {} does not match m = {}", spec.N.size(), spec.m)});
    }
    if (spec.theta.size() != static_cast<std::size_t>(spec.m) && spec.m >= 1) {
        bad.push_back({"theta", fmt::format("length {} does not match m = {}", spec.theta.size(), spec.m)});
    }
    for (std::size_t i = 0; i < spec.N.size(); ++i) {
        if (spec.N[i] < 0) bad.push_back({fmt::format("N[{}]", i + 1), "must be >= 0"});
    }
    for (std::size_t i = 0; i < spec.theta.size(); ++i) {
        const double th = spec.theta[i];
        if (!(th > 0.0 && th < 1.0)) {
            bad.push_back({fmt::format("theta[{}]", i + 1), fmt::format("{} is not strictly inside (0, 1)", th)});
        }
    }
    if (spec.T < 1) bad.push_back({"T", "must be >= 1"});
    if (!bad.empty()) throw ValidationError(std::move(bad));

    const auto states = spec.state_count();
    if (states > state_cap) throw CapacityError("state space prod(N_i + 1)", states, state_cap);
    return spec;
}

bool DefectState::valid_for(const ModelSpec& model) const {
    if (x.size() != model.N.size() || t < 0 || t > model.T) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0 || x[i] > model.N[i]) return false;
    }
    return true;
}

OperationalProfile::OperationalProfile(std::vector<double> p) : p_(std::move(p)) {
    std::vector<Violation> bad;
    if (p_.empty()) bad.push_back({"p", "must have at least one component"});
    double sum = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
        if (!(p_[i] >= 0.0)) bad.push_back({fmt::format("p[{}]", i + 1), fmt::format("{} is negative", p_[i])});
        sum += p_[i];
    }
    if (!p_.empty() && std::abs(sum - 1.0) > kSumTolerance) {
        bad.push_back({"p", fmt::format("components sum to {:.17g}, not 1", sum)});
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::string to_string(UtilityKind kind) {
    switch (kind) {
    case UtilityKind::identity: return "identity";
    case UtilityKind::quadratic: return "quadratic";
    case UtilityKind::exponential: return "exponential";
    }
    return "unknown";
}

UtilityKind utility_kind_from_string(const std::string& name) {
    if (name == "identity") return UtilityKind::identity;
    if (name == "quadratic") return UtilityKind::quadratic;
    if (name == "exponential") return UtilityKind::exponential;
    throw ValidationError("utility.kind", fmt::format("unknown kind '{}'", name));
}

void validate_utility(const UtilitySpec& u) {
    if (u.kind == UtilityKind::exponential && !(u.gamma > 0.0 && std::isfinite(u.gamma))) {
        throw ValidationError("utility.gamma", fmt::format("{} must be a positive finite number", u.gamma));
    }
}

double utility_eval(const UtilitySpec& u, double r) {
    constexpr double kSlack = 1e-9;
    if (!(r >= -kSlack && r <= 1.0 + kSlack)) {
        throw DomainError(fmt::format("utility argument {} outside [0, 1]", r));
    }
    validate_utility(u);
    r = std::clamp(r, 0.0, 1.0);
    switch (u.kind) {
    case UtilityKind::identity: return r;
    case UtilityKind::quadratic: return r - r * r;
    case UtilityKind::exponential: return -std::expm1(-r / u.gamma);
    }
    return r;
}

double survival_power(double theta, int x) {
    return std::pow(1.0 - theta, x);
}

double reliability(std::span<const int> x, const OperationalProfile& p, std::span<const double> theta) {
    if (x.size() != p.size() || theta.size() != p.size()) {
        throw ValidationError("x/p/theta", fmt::format("dimension mismatch ({}, {}, {})", x.size(), p.size(), theta.size()));
    }
    std::vector<Violation> bad;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0) bad.push_back({fmt::format("x[{}]", i + 1), "must be >= 0"});
        if (!(theta[i] > 0.0 && theta[i] < 1.0)) bad.push_back({fmt::format("theta[{}]", i + 1), "must be in (0, 1)"});
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));

    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r += p[i] * survival_power(theta[i], x[i]);
    return r;
}

BinomialKernel binomial_kernel(int n, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("q", fmt::format("{} is not strictly inside (0, 1)", q));
    if (n < 0) throw ValidationError("n", "must be >= 0");

    BinomialKernel kernel{n, q, std::vector<double>(static_cast<std::size_t>(n) + 1)};
    auto& pmf = kernel.pmf;
    const double odds = q / (1.0 - q);
    const double seed = std::pow(1.0 - q, n);
    if (seed > 1e-250) {
        pmf[0] = seed;
        for (int k = 0; k < n; ++k) {
            pmf[k + 1] = pmf[k] * (static_cast<double>(n - k) / (k + 1)) * odds;
        }
    } else {
        // Same recurrence in log space; pmf[0] underflows for large n.
        const double log_odds = std::log(odds);
        double log_term = n * std::log1p(-q);
        pmf[0] = std::exp(log_term);
        for (int k = 0; k < n; ++k) {
            log_term += std::log(static_cast<double>(n - k) / (k + 1)) + log_odds;
            pmf[k + 1] = std::exp(log_term);
        }
    }
    return kernel;
}

} // namespace reltest
