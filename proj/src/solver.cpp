#include "reltest/solver.hpp"
#include "reltest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

namespace reltest {

// ---------------------------------------------------------------------------
// StateGrid

StateGrid::StateGrid(std::span<const int> upper) : upper_(upper.begin(), upper.end()), strides_(upper.size()) {
    std::size_t stride = 1;
    for (std::size_t k = upper_.size(); k-- > 0;) {
        strides_[k] = stride;
        stride *= static_cast<std::size_t>(upper_[k]) + 1;
    }
    size_ = stride;
}

std::size_t StateGrid::index(std::span<const int> x) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < upper_.size(); ++k) idx += static_cast<std::size_t>(x[k]) * strides_[k];
    return idx;
}

void StateGrid::decode(std::size_t index, std::span<int> x) const {
    for (std::size_t k = 0; k < upper_.size(); ++k) {
        x[k] = static_cast<int>(index / strides_[k]);
        index %= strides_[k];
    }
}

std::vector<int> StateGrid::decode(std::size_t index) const {
    std::vector<int> x(upper_.size());
    decode(index, x);
    return x;
}

// ---------------------------------------------------------------------------
// Tables

ValueTable::ValueTable(StateGrid grid, int horizon)
    : grid_(std::move(grid)), slices_(static_cast<std::size_t>(horizon) + 1) {}

bool ValueTable::has_slice(int t) const {
    return t >= 0 && t <= horizon() && !slices_[static_cast<std::size_t>(t)].empty();
}

bool ValueTable::complete() const {
    return std::all_of(slices_.begin(), slices_.end(), [](const auto& s) { return !s.empty(); });
}

std::span<const double> ValueTable::slice(int t) const {
    if (!has_slice(t)) throw UnsupportedError(fmt::format("value slice t = {} was not retained", t));
    return slices_[static_cast<std::size_t>(t)];
}

std::vector<double>& ValueTable::mutable_slice(int t) {
    auto& s = slices_.at(static_cast<std::size_t>(t));
    if (s.empty()) s.resize(grid_.size());
    return s;
}

void ValueTable::drop_slice(int t) {
    auto& s = slices_.at(static_cast<std::size_t>(t));
    s.clear();
    s.shrink_to_fit();
}

PolicyTable::PolicyTable(StateGrid grid, int horizon)
    : grid_(std::move(grid)), choices_(static_cast<std::size_t>(horizon), std::vector<std::uint16_t>(grid_.size(), 0)) {}

PolicyTable PolicyTable::constant(StateGrid grid, int horizon, int module) {
    PolicyTable policy(std::move(grid), horizon);
    for (auto& slice : policy.choices_) std::fill(slice.begin(), slice.end(), static_cast<std::uint16_t>(module));
    return policy;
}

// ---------------------------------------------------------------------------
// Backward induction engine

namespace {

// Survivor pmfs per module and defect count: kernels[i][n][k].
using KernelBank = std::vector<std::vector<std::vector<double>>>;

KernelBank make_kernels(const ModelSpec& model) {
    KernelBank bank(static_cast<std::size_t>(model.m));
    for (int i = 0; i < model.m; ++i) {
        auto& per_n = bank[static_cast<std::size_t>(i)];
        per_n.reserve(static_cast<std::size_t>(model.N[i]) + 1);
        for (int n = 0; n <= model.N[i]; ++n) per_n.push_back(binomial_kernel(n, 1.0 - model.theta[i]).pmf);
    }
    return bank;
}

KernelBank log_of(const KernelBank& bank) {
    KernelBank out = bank;
    for (auto& per_n : out)
        for (auto& pmf : per_n)
            for (auto& v : pmf) v = v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    return out;
}

unsigned resolve_workers(unsigned requested, std::size_t work) {
    unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    if (work < 4096) w = 1;
    return w;
}

// Calls body(begin, end) over disjoint chunks of [0, n).
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        pool.emplace_back([&body, begin, end = std::min(n, begin + chunk)] { body(begin, end); });
    }
}

double expect_linear(std::span<const double> next, const std::vector<double>& pmf, std::size_t base, std::size_t stride) {
    double acc = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) acc += pmf[k] * next[base + k * stride];
    return acc;
}

// log E[exp(next)] under the kernel, with log-pmf given.
double expect_log(std::span<const double> next, const std::vector<double>& log_pmf, std::size_t base, std::size_t stride) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < log_pmf.size(); ++k) peak = std::max(peak, log_pmf[k] + next[base + k * stride]);
    double acc = 0.0;
    for (std::size_t k = 0; k < log_pmf.size(); ++k) {
        const double term = log_pmf[k] + next[base + k * stride];
        if (term > -std::numeric_limits<double>::infinity()) acc += std::exp(term - peak);
    }
    return peak + std::log(acc);
}

enum class Domain {
    linear, // values are expected utilities; maximize
    log_disutility, // values are log E[exp(-R/gamma)]; minimize
};

struct EngineResult {
    ValueTable values;
    PolicyTable policy;
};

// `store` maps an engine value to the value written into the table.
template <class Store>
EngineResult backward_induction(const ModelSpec& model, const StateGrid& grid, std::vector<double> terminal, Domain domain,
                                const SolveOptions& options, Store store) {
    const int T = model.T;
    const auto m = static_cast<std::size_t>(model.m);
    EngineResult result{ValueTable(grid, T), PolicyTable(grid, T)};

    {
        auto& slice = result.values.mutable_slice(T);
        for (std::size_t s = 0; s < grid.size(); ++s) slice[s] = store(terminal[s]);
    }

    const KernelBank kernels = make_kernels(model);
    const KernelBank log_kernels = domain == Domain::log_disutility ? log_of(kernels) : KernelBank{};
    const unsigned workers = resolve_workers(options.workers, grid.size());

    std::vector<double> next = std::move(terminal);
    std::vector<double> current(grid.size());
    for (int t = T - 1; t >= 0; --t) {
        parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
            std::vector<double> candidate(m);
            for (std::size_t s = begin; s < end; ++s) {
                for (std::size_t i = 0; i < m; ++i) {
                    const int xi = grid.coordinate(s, i);
                    const std::size_t base = s - static_cast<std::size_t>(xi) * grid.stride(i);
                    candidate[i] = domain == Domain::linear
                                       ? expect_linear(next, kernels[i][static_cast<std::size_t>(xi)], base, grid.stride(i))
                                       : expect_log(next, log_kernels[i][static_cast<std::size_t>(xi)], base, grid.stride(i));
                }
                double best;
                int chosen = 0;
                if (domain == Domain::linear) {
                    best = *std::max_element(candidate.begin(), candidate.end());
                    const double tol = 1e-12 * std::max(1.0, std::abs(best));
                    while (candidate[static_cast<std::size_t>(chosen)] < best - tol) ++chosen;
                } else {
                    best = *std::min_element(candidate.begin(), candidate.end());
                    while (candidate[static_cast<std::size_t>(chosen)] > best + 1e-12) ++chosen;
                }
                current[s] = best;
                result.policy.set(t, s, chosen);
            }
        });
        if (options.retain_all_slices || t == 0) {
            auto& slice = result.values.mutable_slice(t);
            for (std::size_t s = 0; s < grid.size(); ++s) slice[s] = store(current[s]);
        }
        std::swap(next, current);
    }
    return result;
}

void check_dimensions(const ModelSpec& model, const UncertaintySet& P) {
    if (P.dimension() != static_cast<std::size_t>(model.m)) {
        throw ValidationError("uncertainty", fmt::format("set has dimension {} but the model has m = {}", P.dimension(), model.m));
    }
}

// min over P of R(x, p) at every grid state, or with `maximize` the max.
std::vector<double> terminal_reliability_bound(const ModelSpec& model, const StateGrid& grid, const UncertaintySet& P,
                                               bool maximize = false) {
    const auto m = static_cast<std::size_t>(model.m);
    std::vector<std::vector<double>> powers(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (int n = 0; n <= model.N[i]; ++n) powers[i].push_back(survival_power(model.theta[i], n));
    }
    std::vector<double> out(grid.size());
    std::vector<double> c(m);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const double sign = maximize ? -1.0 : 1.0;
        for (std::size_t i = 0; i < m; ++i) c[i] = sign * powers[i][static_cast<std::size_t>(grid.coordinate(s, i))];
        out[s] = sign * minimize_linear(c, P).value;
    }
    return out;
}

} // namespace

SolveReport solve(const ModelSpec& model, const UtilitySpec& u, const UncertaintySet& P, const SolveOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    validate_model(model, options.state_cap);
    validate_utility(u);
    check_dimensions(model, P);

    SolveReport report;
    if (u.kind == UtilityKind::quadratic) {
        report.warnings.emplace_back("quadratic utility r - r^2 decreases for r > 1/2; it is not a valid risk-averse objective there");
    }

    const StateGrid grid(model.N);
    std::vector<double> worst = terminal_reliability_bound(model, grid, P);

    EngineResult engine;
    if (u.kind == UtilityKind::exponential) {
        // Maximizing E[1 - exp(-R/g)] is minimizing log E[exp(-R/g)]; working
        // with the log keeps small gamma from rounding every value to 1.
        for (auto& v : worst) v = -v / u.gamma;
        engine = backward_induction(model, grid, std::move(worst), Domain::log_disutility, options,
                                    [](double log_d) { return -std::expm1(log_d); });
    } else if (u.kind == UtilityKind::quadratic) {
        // r - r^2 is not monotone but is concave in r, and R is linear in p,
        // so min over P of U(R) sits at the smallest or the largest R.
        const auto best = terminal_reliability_bound(model, grid, P, true);
        for (std::size_t s = 0; s < worst.size(); ++s) worst[s] = std::min(utility_eval(u, worst[s]), utility_eval(u, best[s]));
        engine = backward_induction(model, grid, std::move(worst), Domain::linear, options, [](double v) { return v; });
    } else {
        for (auto& v : worst) v = utility_eval(u, v);
        engine = backward_induction(model, grid, std::move(worst), Domain::linear, options, [](double v) { return v; });
    }

    report.values = std::move(engine.values);
    report.policy = std::move(engine.policy);
    report.value_at_start = report.values.at(0, model.N);
    report.states_evaluated = static_cast<std::uint64_t>(grid.size()) * static_cast<std::uint64_t>(model.T);
    report.wall_time = std::chrono::steady_clock::now() - start;
    return report;
}

std::vector<double> bellman_step(std::span<const double> next_values, const ModelSpec& model, int module) {
    validate_model(model);
    if (module < 0 || module >= model.m) {
        throw ValidationError("module", fmt::format("index {} outside 0..{}", module, model.m - 1));
    }
    const StateGrid grid(model.N);
    if (next_values.size() != grid.size()) {
        throw ValidationError("next_values", fmt::format("has {} entries, grid has {}", next_values.size(), grid.size()));
    }
    const auto i = static_cast<std::size_t>(module);
    const auto stride = grid.stride(i);
    std::vector<std::vector<double>> kernels;
    for (int n = 0; n <= model.N[i]; ++n) kernels.push_back(binomial_kernel(n, 1.0 - model.theta[i]).pmf);

    std::vector<double> out(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const int xi = grid.coordinate(s, i);
        out[s] = expect_linear(next_values, kernels[static_cast<std::size_t>(xi)], s - static_cast<std::size_t>(xi) * stride, stride);
    }
    return out;
}

std::vector<double> policy_expectation(const PolicyTable& policy, const ModelSpec& model, std::span<const double> terminal) {
    validate_model(model);
    const StateGrid grid(model.N);
    std::vector<Violation> bad;
    if (!(policy.grid() == grid)) bad.push_back({"policy", "grid does not match the model's N"});
    if (policy.horizon() != model.T) {
        bad.push_back({"policy", fmt::format("covers {} periods, model has T = {}", policy.horizon(), model.T)});
    }
    if (terminal.size() != grid.size()) bad.push_back({"terminal", "size does not match the grid"});
    if (!bad.empty()) throw ValidationError(std::move(bad));

    const KernelBank kernels = make_kernels(model);
    std::vector<double> next(terminal.begin(), terminal.end());
    std::vector<double> current(grid.size());
    for (int t = model.T - 1; t >= 0; --t) {
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const int c = policy.choice(t, s);
            if (c < 0 || c >= model.m) throw ValidationError("policy", fmt::format("choice {} out of range at t = {}", c, t));
            const auto i = static_cast<std::size_t>(c);
            const int xi = grid.coordinate(s, i);
            current[s] = expect_linear(next, kernels[i][static_cast<std::size_t>(xi)],
                                       s - static_cast<std::size_t>(xi) * grid.stride(i), grid.stride(i));
        }
        std::swap(next, current);
    }
    return next;
}

double evaluate_policy(const PolicyTable& policy, const ModelSpec& model, const UtilitySpec& u,
                       const OperationalProfile& true_profile) {
    validate_model(model);
    validate_utility(u);
    if (true_profile.size() != static_cast<std::size_t>(model.m)) {
        throw ValidationError("true_profile", fmt::format("has {} components, model has m = {}", true_profile.size(), model.m));
    }
    const StateGrid grid(model.N);
    std::vector<double> terminal(grid.size());
    std::vector<int> x(static_cast<std::size_t>(model.m));
    for (std::size_t s = 0; s < grid.size(); ++s) {
        grid.decode(s, x);
        terminal[s] = utility_eval(u, reliability(x, true_profile, model.theta));
    }
    return policy_expectation(policy, model, terminal)[grid.index(model.N)];
}

SolveReport solve_min_defects(const ModelSpec& model, const SolveOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    validate_model(model, options.state_cap);
    const StateGrid grid(model.N);

    // Same engine as the reliability objective: maximize minus the defect count.
    std::vector<double> terminal(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        int total = 0;
        for (std::size_t i = 0; i < grid.dimension(); ++i) total += grid.coordinate(s, i);
        terminal[s] = -static_cast<double>(total);
    }
    auto engine = backward_induction(model, grid, std::move(terminal), Domain::linear, options, [](double v) { return -v; });

    SolveReport report;
    report.values = std::move(engine.values);
    report.policy = std::move(engine.policy);
    report.value_at_start = report.values.at(0, model.N);
    report.states_evaluated = static_cast<std::uint64_t>(grid.size()) * static_cast<std::uint64_t>(model.T);
    report.wall_time = std::chrono::steady_clock::now() - start;
    return report;
}

double tminus1_score(int x, double theta, double p) {
    return p * (std::pow(1.0 - theta + theta * theta, x) - std::pow(1.0 - theta, x));
}

int closed_form_Tminus1_choice(std::span<const int> x, const ModelSpec& model, const OperationalProfile& p) {
    if (x.size() != static_cast<std::size_t>(model.m) || p.size() != x.size()) {
        throw ValidationError("x/p", "dimension does not match the model");
    }
    std::vector<double> score(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) score[i] = tminus1_score(x[i], model.theta[i], p[i]);
    const double best = *std::max_element(score.begin(), score.end());
    int chosen = 0;
    while (score[static_cast<std::size_t>(chosen)] < best - 1e-12) ++chosen;
    return chosen;
}

int closed_form_Tminus1_choice(std::span<const int> x, const ModelSpec& model, const UtilitySpec& u,
                               const UncertaintySet& P) {
    if (u.kind != UtilityKind::identity || P.kind() != UncertaintySet::Kind::singleton) {
        throw UnsupportedError("closed-form T-1 choice needs identity utility and a singleton uncertainty set");
    }
    return closed_form_Tminus1_choice(x, model, P.members().front());
}

double gap(double optimal_value, double achieved_value) {
    if (!(optimal_value > 0.0)) throw DomainError(fmt::format("gap needs a positive optimal value, got {}", optimal_value));
    if (achieved_value > optimal_value + 1e-9) {
        throw DomainError(fmt::format("achieved value {} exceeds optimal value {}", achieved_value, optimal_value));
    }
    return (optimal_value - achieved_value) / optimal_value;
}

} // namespace reltest
