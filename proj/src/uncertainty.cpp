#include "reltest/uncertainty.hpp"
#include "reltest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace reltest {

namespace {

constexpr double kTieTol = 1e-12;

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto L = m == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd Y(m, L);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index l = 0; l < L; ++l) Y(i, l) = rows[i][l];
    }
    return Y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Snaps entries within tolerance of zero and rescales onto the simplex.
OperationalProfile snap_to_simplex(std::vector<double> p) {
    for (auto& v : p) v = std::max(v, 0.0);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= sum;
    return OperationalProfile(std::move(p));
}

} // namespace

std::string to_string(UncertaintySet::Kind kind) {
    switch (kind) {
    case UncertaintySet::Kind::singleton: return "singleton";
    case UncertaintySet::Kind::finite: return "finite";
    case UncertaintySet::Kind::interval: return "interval";
    case UncertaintySet::Kind::ellipsoid: return "ellipsoid";
    }
    return "unknown";
}

UncertaintySet UncertaintySet::singleton(OperationalProfile p) {
    return {Kind::singleton, Members{{std::move(p)}}};
}

UncertaintySet UncertaintySet::finite(std::vector<OperationalProfile> profiles) {
    if (profiles.empty()) throw ValidationError("uncertainty.profiles", "finite set needs at least one profile");
    const auto m = profiles.front().size();
    for (std::size_t k = 1; k < profiles.size(); ++k) {
        if (profiles[k].size() != m) {
            throw ValidationError(fmt::format("uncertainty.profiles[{}]", k + 1),
                                  fmt::format("has {} components, expected {}", profiles[k].size(), m));
        }
    }
    return {Kind::finite, Members{std::move(profiles)}};
}

UncertaintySet UncertaintySet::interval(std::vector<double> lo, std::vector<double> hi) {
    std::vector<Violation> bad;
    if (lo.empty()) bad.push_back({"uncertainty.p_lo", "must be non-empty"});
    if (lo.size() != hi.size()) bad.push_back({"uncertainty.p_hi", "length differs from p_lo"});
    for (std::size_t i = 0; i < std::min(lo.size(), hi.size()); ++i) {
        if (!(lo[i] >= 0.0)) bad.push_back({fmt::format("uncertainty.p_lo[{}]", i + 1), "must be >= 0"});
        if (!(hi[i] <= 1.0)) bad.push_back({fmt::format("uncertainty.p_hi[{}]", i + 1), "must be <= 1"});
        if (!(lo[i] <= hi[i])) bad.push_back({fmt::format("uncertainty.p_lo[{}]", i + 1), "must be <= p_hi"});
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));

    const double sum_lo = std::accumulate(lo.begin(), lo.end(), 0.0);
    const double sum_hi = std::accumulate(hi.begin(), hi.end(), 0.0);
    if (sum_lo > 1.0 + kFeasibilityTol || sum_hi < 1.0 - kFeasibilityTol) {
        throw InfeasibleError(fmt::format("interval bounds miss the simplex: sum(p_lo) = {}, sum(p_hi) = {}", sum_lo, sum_hi));
    }
    return {Kind::interval, Interval{std::move(lo), std::move(hi)}};
}

UncertaintySet UncertaintySet::ellipsoid(OperationalProfile center, std::vector<std::vector<double>> Y, double epsilon) {
    std::vector<Violation> bad;
    if (Y.size() != center.size()) {
        bad.push_back({"uncertainty.Y", fmt::format("has {} rows, expected {}", Y.size(), center.size())});
    } else if (!Y.empty()) {
        const auto L = Y.front().size();
        if (L == 0) bad.push_back({"uncertainty.Y", "needs at least one column"});
        for (std::size_t i = 0; i < Y.size(); ++i) {
            if (Y[i].size() != L) bad.push_back({fmt::format("uncertainty.Y[{}]", i + 1), "ragged row"});
        }
        if (bad.empty()) {
            for (std::size_t l = 0; l < L; ++l) {
                double col = 0.0;
                for (const auto& row : Y) col += row[l];
                if (std::abs(col) > 1e-12) {
                    bad.push_back({fmt::format("uncertainty.Y column {}", l + 1), fmt::format("sums to {}, not 0", col)});
                }
            }
        }
    }
    if (!(epsilon >= 0.0 && std::isfinite(epsilon))) bad.push_back({"uncertainty.epsilon", "must be finite and >= 0"});
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return {Kind::ellipsoid, Ellipsoid{std::move(center), std::move(Y), epsilon}};
}

std::size_t UncertaintySet::dimension() const noexcept {
    return std::visit(
        [](const auto& d) -> std::size_t {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Members>) return d.profiles.front().size();
            else if constexpr (std::is_same_v<T, Interval>) return d.lo.size();
            else return d.center.size();
        },
        data_);
}

const std::vector<OperationalProfile>& UncertaintySet::members() const {
    if (const auto* m = std::get_if<Members>(&data_)) return m->profiles;
    throw UnsupportedError("members() requires a singleton or finite set, not " + to_string(kind_));
}

const UncertaintySet::Interval& UncertaintySet::interval_bounds() const {
    if (const auto* m = std::get_if<Interval>(&data_)) return *m;
    throw UnsupportedError("interval_bounds() on a " + to_string(kind_) + " set");
}

const UncertaintySet::Ellipsoid& UncertaintySet::ellipsoid_data() const {
    if (const auto* m = std::get_if<Ellipsoid>(&data_)) return *m;
    throw UnsupportedError("ellipsoid_data() on a " + to_string(kind_) + " set");
}

WorstCaseResult minimize_linear(std::span<const double> c, const UncertaintySet& P) {
    if (c.size() != P.dimension()) {
        throw ValidationError("x/theta", fmt::format("dimension {} does not match uncertainty set dimension {}", c.size(), P.dimension()));
    }

    switch (P.kind()) {
    case UncertaintySet::Kind::singleton:
    case UncertaintySet::Kind::finite: {
        const auto& members = P.members();
        std::size_t best = 0;
        double best_value = dot(c, members[0].span());
        for (std::size_t k = 1; k < members.size(); ++k) {
            const double v = dot(c, members[k].span());
            if (v < best_value - kTieTol || (v <= best_value + kTieTol && members[k] < members[best])) {
                best_value = std::min(best_value, v);
                best = k;
            }
        }
        return {members[best], dot(c, members[best].span()), fmt::format("member {}", best + 1)};
    }
    case UncertaintySet::Kind::interval: {
        // Greedy fill: start from the lower bounds and hand out the remaining
        // mass to the cheapest coordinates first. On equal cost the higher
        // index is filled first, which yields the lexicographically smallest
        // minimizer.
        const auto& box = P.interval_bounds();
        const auto m = c.size();
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (c[a] != c[b]) return c[a] < c[b];
            return a > b;
        });
        std::vector<double> p = box.lo;
        double slack = 1.0 - std::accumulate(p.begin(), p.end(), 0.0);
        std::size_t balancing = m;
        for (std::size_t i : order) {
            if (slack <= 0.0) break;
            const double room = box.hi[i] - box.lo[i];
            const double add = std::min(room, slack);
            p[i] += add;
            slack -= add;
            if (add < room) balancing = i;
        }
        auto profile = snap_to_simplex(std::move(p));
        const double value = dot(c, profile.span());
        std::string active = balancing == m ? "vertex (all coordinates at a bound)"
                                            : fmt::format("vertex balanced on coordinate {}", balancing + 1);
        return {std::move(profile), value, std::move(active)};
    }
    case UncertaintySet::Kind::ellipsoid: {
        const auto& e = P.ellipsoid_data();
        const Eigen::MatrixXd Y = to_matrix(e.Y);
        const Eigen::Map<const Eigen::VectorXd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
        const Eigen::VectorXd g = Y.transpose() * cv;
        const double norm = g.norm();
        if (norm == 0.0 || e.epsilon == 0.0) {
            return {e.center, dot(c, e.center.span()), "center (objective flat on the ellipsoid)"};
        }
        const Eigen::VectorXd step = Y * g * (e.epsilon / norm);
        std::vector<double> p(e.center.values());
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] -= step(static_cast<Eigen::Index>(i));
            if (p[i] < -UncertaintySet::kFeasibilityTol) {
                throw UnsupportedError(fmt::format(
                    "ellipsoid worst case leaves the simplex: component {} would be {}", i + 1, p[i]));
            }
        }
        auto profile = snap_to_simplex(std::move(p));
        const double value = dot(c, profile.span());
        return {std::move(profile), value, "ellipsoid boundary"};
    }
    }
    throw UnsupportedError("unknown uncertainty set kind");
}

WorstCaseResult worst_case(std::span<const int> x, std::span<const double> theta, const UncertaintySet& P) {
    if (x.size() != theta.size()) {
        throw ValidationError("x/theta", fmt::format("dimension mismatch ({} vs {})", x.size(), theta.size()));
    }
    std::vector<Violation> bad;
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0) bad.push_back({fmt::format("x[{}]", i + 1), "must be >= 0"});
        if (!(theta[i] > 0.0 && theta[i] < 1.0)) bad.push_back({fmt::format("theta[{}]", i + 1), "must be in (0, 1)"});
        c[i] = survival_power(theta[i], x[i]);
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return minimize_linear(c, P);
}

UncertaintySet interval_m2_reduce(double p_hat1, double delta) {
    std::vector<Violation> bad;
    if (!(delta >= 0.0)) bad.push_back({"delta", "must be >= 0"});
    if (!(p_hat1 - delta >= -1e-12)) bad.push_back({"p_hat1 - delta", "must be >= 0"});
    if (!(p_hat1 + delta <= 1.0 + 1e-12)) bad.push_back({"p_hat1 + delta", "must be <= 1"});
    if (!bad.empty()) throw ValidationError(std::move(bad));

    const double low = std::max(0.0, p_hat1 - delta);
    const double high = std::min(1.0, p_hat1 + delta);
    return UncertaintySet::finite({OperationalProfile({low, 1.0 - low}), OperationalProfile({high, 1.0 - high})});
}

bool contains(const UncertaintySet& P, std::span<const double> p, double tol, std::string* diagnostic) {
    auto fail = [&](std::string why) {
        if (diagnostic) *diagnostic = std::move(why);
        return false;
    };
    if (p.size() != P.dimension()) {
        return fail(fmt::format("dimension {} does not match set dimension {}", p.size(), P.dimension()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < -tol) return fail(fmt::format("component {} is negative", i + 1));
    }

    switch (P.kind()) {
    case UncertaintySet::Kind::singleton:
    case UncertaintySet::Kind::finite:
        for (const auto& member : P.members()) {
            bool same = true;
            for (std::size_t i = 0; i < p.size() && same; ++i) same = std::abs(member[i] - p[i]) <= tol;
            if (same) return true;
        }
        return fail("not a member of the set");
    case UncertaintySet::Kind::interval: {
        const auto& box = P.interval_bounds();
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] < box.lo[i] - tol || p[i] > box.hi[i] + tol) {
                return fail(fmt::format("component {} = {} outside [{}, {}]", i + 1, p[i], box.lo[i], box.hi[i]));
            }
        }
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        if (std::abs(sum - 1.0) > tol) return fail(fmt::format("components sum to {}", sum));
        return true;
    }
    case UncertaintySet::Kind::ellipsoid: {
        const auto& e = P.ellipsoid_data();
        const Eigen::MatrixXd Y = to_matrix(e.Y);
        Eigen::VectorXd d(static_cast<Eigen::Index>(p.size()));
        for (std::size_t i = 0; i < p.size(); ++i) d(static_cast<Eigen::Index>(i)) = p[i] - e.center[i];
        // Minimal-norm z with Y z = p - p0.
        const Eigen::VectorXd z = Y.completeOrthogonalDecomposition().solve(d);
        if ((Y * z - d).lpNorm<Eigen::Infinity>() > tol) return fail("p - p0 is not in the range of Y");
        if (z.norm() > e.epsilon + tol) return fail(fmt::format("||z|| = {} exceeds epsilon = {}", z.norm(), e.epsilon));
        return true;
    }
    }
    return fail("unknown set kind");
}

} // namespace reltest
