#pragma once

#include "reltest/model.hpp"
#include "reltest/simulator.hpp"
#include "reltest/uncertainty.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace reltest {

/// Everything one CLI run needs. Serialized as JSON:
///
///   {
///     "model":       {"m": 2, "N": [40, 50], "theta": [0.015, 0.02], "T": 40},
///     "utility":     {"kind": "exponential", "gamma": 0.1},
///     "uncertainty": {"kind": "singleton", "profile": [0.2, 0.8]}
///                  | {"kind": "finite", "profiles": [[...], ...]}
///                  | {"kind": "interval", "p_lo": [...], "p_hi": [...]}
///                  | {"kind": "ellipsoid", "center": [...], "Y": [[row 1], ...], "epsilon": 0.1},
///     "simulation":  {"runs": 10000, "seed": 1, "scoring_profile": [...], "histogram_bins": 50},
///     "output_dir":  "out"
///   }
///
/// "simulation" and "output_dir" are optional.
struct ExperimentConfig {
    ModelSpec model;
    UtilitySpec utility;
    UncertaintySet uncertainty = UncertaintySet::singleton(OperationalProfile({1.0}));
    std::optional<SimulationConfig> simulation;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates. Throws ValidationError listing every problem found.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text (stable key order, round-trips through parse_config).
std::string serialize_config(const ExperimentConfig& config);

/// Digest of the canonical serialization, used in CSV metadata lines.
std::string config_digest(const ExperimentConfig& config);

} // namespace reltest
