#include "reltest/simulator.hpp"
#include "reltest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace reltest {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Kahan-compensated sum in index order.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

} // namespace

void validate_simulation(const SimulationConfig& cfg, const ModelSpec& model) {
    std::vector<Violation> bad;
    if (cfg.runs < 1) bad.push_back({"simulation.runs", "must be >= 1"});
    if (cfg.histogram_bins < 1) bad.push_back({"simulation.histogram_bins", "must be >= 1"});
    if (cfg.scoring_profile.size() != static_cast<std::size_t>(model.m)) {
        bad.push_back({"simulation.scoring_profile",
                       fmt::format("has {} components, model has m = {}", cfg.scoring_profile.size(), model.m)});
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::size_t Histogram::bin_of(double r) const {
    const std::size_t bins = counts.size();
    if (!(r > 0.0)) return 0;
    if (r >= 1.0) return bins - 1;
    return std::min(bins - 1, static_cast<std::size_t>(r * static_cast<double>(bins)));
}

RunStream::RunStream(std::uint64_t seed, std::uint64_t run) : key_(splitmix64(splitmix64(seed) ^ run)) {}

double RunStream::uniform(int period, int module, int defect) const {
    std::uint64_t h = splitmix64(key_ ^ static_cast<std::uint64_t>(period));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(module) << 32));
    h = splitmix64(h + static_cast<std::uint64_t>(defect));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

SimulationOutcome simulate_once(const ModelSpec& model, const PolicyTable& policy, const OperationalProfile& scoring_profile,
                                const RunStream& stream) {
    if (policy.horizon() != model.T || policy.grid().upper() != model.N) {
        throw ValidationError("policy", "does not cover the model's grid and horizon");
    }
    std::vector<int> x = model.N;
    for (int t = 0; t < model.T; ++t) {
        const int i = policy.choice(t, x);
        const double theta = model.theta[static_cast<std::size_t>(i)];
        auto& xi = x[static_cast<std::size_t>(i)];
        int survivors = 0;
        for (int d = 0; d < xi; ++d) {
            if (stream.uniform(t, i, d) >= theta) ++survivors;
        }
        xi = survivors;
    }
    const double r = reliability(x, scoring_profile, model.theta);
    return {std::move(x), r};
}

SimulationStats simulate_many(const ModelSpec& model, const PolicyTable& policy, const SimulationConfig& cfg) {
    validate_model(model);
    validate_simulation(cfg, model);

    const auto runs = static_cast<std::size_t>(cfg.runs);
    std::vector<SimulationOutcome> outcomes(runs);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            outcomes[r] = simulate_once(model, policy, cfg.scoring_profile, RunStream(cfg.seed, r));
        }
    };
    unsigned workers = cfg.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, runs));
    if (workers <= 1) {
        work(0, runs);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (runs + workers - 1) / workers;
        for (std::size_t begin = 0; begin < runs; begin += chunk) pool.emplace_back(work, begin, std::min(runs, begin + chunk));
    }

    // Aggregation walks the runs in index order, so the worker count never
    // affects the result.
    SimulationStats stats;
    stats.runs = cfg.runs;
    stats.seed = cfg.seed;
    KahanSum sum;
    for (const auto& o : outcomes) sum.add(o.reliability);
    stats.mean = sum.sum / static_cast<double>(runs);
    KahanSum squares;
    for (const auto& o : outcomes) squares.add((o.reliability - stats.mean) * (o.reliability - stats.mean));
    stats.variance = squares.sum / static_cast<double>(runs);

    const auto bins = static_cast<std::size_t>(cfg.histogram_bins);
    stats.histogram.counts.assign(bins, 0);
    stats.histogram.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) stats.histogram.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
    for (const auto& o : outcomes) {
        ++stats.histogram.counts[stats.histogram.bin_of(o.reliability)];
        ++stats.terminal_state_counts[o.terminal];
    }
    return stats;
}

CsvWriter histogram_csv(const SimulationStats& stats, CsvMetadata metadata) {
    metadata.seed = stats.seed;
    CsvWriter csv(std::move(metadata), {"bin_lo", "bin_hi", "count", "frequency"});
    const auto& h = stats.histogram;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        csv.add_row({format_number(h.edges[b]), format_number(h.edges[b + 1]), std::to_string(h.counts[b]),
                     format_number(static_cast<double>(h.counts[b]) / static_cast<double>(stats.runs))});
    }
    return csv;
}

void export_histogram(const SimulationStats& stats, const std::filesystem::path& path, CsvMetadata metadata) {
    histogram_csv(stats, std::move(metadata)).write(path);
}

CsvWriter summary_csv(const SimulationStats& stats, CsvMetadata metadata) {
    metadata.seed = stats.seed;
    CsvWriter csv(std::move(metadata), {"mean", "variance", "runs", "seed", "variance_definition"});
    csv.add_row({format_number(stats.mean), format_number(stats.variance), std::to_string(stats.runs),
                 std::to_string(stats.seed), "population"});
    return csv;
}

} // namespace reltest
