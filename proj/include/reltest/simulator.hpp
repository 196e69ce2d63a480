#pragma once

#include "reltest/csv.hpp"
#include "reltest/model.hpp"
#include "reltest/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

namespace reltest {

struct SimulationConfig {
    std::uint64_t runs = 10000;
    std::uint64_t seed = 0;
    OperationalProfile scoring_profile{std::vector<double>{1.0}};
    int histogram_bins = 50;
    unsigned workers = 0; ///< 0 picks hardware concurrency; never changes the result

    bool operator==(const SimulationConfig& o) const {
        return runs == o.runs && seed == o.seed && scoring_profile == o.scoring_profile && histogram_bins == o.histogram_bins;
    }
};

void validate_simulation(const SimulationConfig& cfg, const ModelSpec& model);

/// Uniform bins on [0, 1]; the last bin is closed on the right.
struct Histogram {
    std::vector<double> edges; ///< bins + 1 entries
    std::vector<std::uint64_t> counts;

    std::size_t bin_of(double r) const;
};

struct SimulationStats {
    std::uint64_t runs = 0;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double variance = 0.0; ///< population variance (divides by runs)
    Histogram histogram;
    std::map<std::vector<int>, std::uint64_t> terminal_state_counts;
};

/// Stateless random source for one replication. Every draw is a hash of
/// (seed, run, period, module, defect), so runs can be split across threads
/// without changing any number.
class RunStream {
public:
    RunStream(std::uint64_t seed, std::uint64_t run);

    /// Uniform in [0, 1) for the given draw coordinates.
    double uniform(int period, int module, int defect) const;

private:
    std::uint64_t key_;
};

struct SimulationOutcome {
    std::vector<int> terminal;
    double reliability = 0.0;
};

/// One pass through the T testing periods following `policy`; each defect in
/// the tested module is removed independently with probability theta_i.
SimulationOutcome simulate_once(const ModelSpec& model, const PolicyTable& policy, const OperationalProfile& scoring_profile,
                                const RunStream& stream);

SimulationStats simulate_many(const ModelSpec& model, const PolicyTable& policy, const SimulationConfig& cfg);

/// Columns: bin_lo, bin_hi, count, frequency.
CsvWriter histogram_csv(const SimulationStats& stats, CsvMetadata metadata);
void export_histogram(const SimulationStats& stats, const std::filesystem::path& path, CsvMetadata metadata = {});

/// Columns: mean, variance, runs, seed, variance_definition.
CsvWriter summary_csv(const SimulationStats& stats, CsvMetadata metadata);

} // namespace reltest
