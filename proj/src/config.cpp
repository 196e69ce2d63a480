#include "reltest/config.hpp"
#include "reltest/csv.hpp"
#include "reltest/errors.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace reltest {

using nlohmann::json;

namespace {

// Collects violations while walking the document so that all of them are
// reported together.
class Reader {
public:
    std::vector<Violation> bad;

    const json* field(const json& obj, const char* key, const std::string& path, bool required = true) {
        if (!obj.is_object()) {
            bad.push_back({path, "must be an object"});
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) bad.push_back({path + "." + key, "is required"});
            return nullptr;
        }
        return &*it;
    }

    template <class T>
    std::optional<T> get(const json& obj, const char* key, const std::string& path, bool required = true) {
        const json* v = field(obj, key, path, required);
        if (!v) return std::nullopt;
        try {
            return v->get<T>();
        } catch (const json::exception&) {
            bad.push_back({path + "." + key, fmt::format("has the wrong type ({})", v->type_name())});
            return std::nullopt;
        }
    }

    std::optional<OperationalProfile> profile(const json& obj, const char* key, const std::string& path) {
        auto values = get<std::vector<double>>(obj, key, path);
        if (!values) return std::nullopt;
        return profile_from(*values, path + "." + key);
    }

    std::optional<OperationalProfile> profile_from(const std::vector<double>& values, const std::string& path) {
        try {
            return OperationalProfile(values);
        } catch (const ValidationError& e) {
            for (const auto& v : e.violations()) bad.push_back({path + " " + v.field, v.constraint});
            return std::nullopt;
        }
    }
};

std::optional<UncertaintySet> read_uncertainty(Reader& r, const json& node) {
    const std::string path = "uncertainty";
    auto kind = r.get<std::string>(node, "kind", path);
    if (!kind) return std::nullopt;
    try {
        if (*kind == "singleton") {
            auto p = r.profile(node, "profile", path);
            if (p) return UncertaintySet::singleton(*p);
        } else if (*kind == "finite") {
            auto rows = r.get<std::vector<std::vector<double>>>(node, "profiles", path);
            if (!rows) return std::nullopt;
            std::vector<OperationalProfile> members;
            for (std::size_t k = 0; k < rows->size(); ++k) {
                auto p = r.profile_from((*rows)[k], fmt::format("uncertainty.profiles[{}]", k + 1));
                if (p) members.push_back(*p);
            }
            if (members.size() == rows->size()) return UncertaintySet::finite(std::move(members));
        } else if (*kind == "interval") {
            auto lo = r.get<std::vector<double>>(node, "p_lo", path);
            auto hi = r.get<std::vector<double>>(node, "p_hi", path);
            if (lo && hi) return UncertaintySet::interval(*lo, *hi);
        } else if (*kind == "ellipsoid") {
            auto center = r.profile(node, "center", path);
            auto Y = r.get<std::vector<std::vector<double>>>(node, "Y", path);
            auto eps = r.get<double>(node, "epsilon", path);
            if (center && Y && eps) return UncertaintySet::ellipsoid(*center, *Y, *eps);
        } else {
            r.bad.push_back({"uncertainty.kind", fmt::format("unknown kind '{}'", *kind)});
        }
    } catch (const ValidationError& e) {
        r.bad.insert(r.bad.end(), e.violations().begin(), e.violations().end());
    } catch (const InfeasibleError& e) {
        r.bad.push_back({"uncertainty", e.what()});
    }
    return std::nullopt;
}

json profile_json(const OperationalProfile& p) { return p.values(); }

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", fmt::format("not valid JSON: {}", e.what()));
    }

    Reader r;
    ExperimentConfig config;

    if (const json* model = r.field(doc, "model", "config")) {
        auto m = r.get<int>(*model, "m", "model");
        auto N = r.get<std::vector<int>>(*model, "N", "model");
        auto theta = r.get<std::vector<double>>(*model, "theta", "model");
        auto T = r.get<int>(*model, "T", "model");
        if (m && N && theta && T) {
            config.model = ModelSpec{*m, *N, *theta, *T};
            try {
                validate_model(config.model, std::numeric_limits<std::uint64_t>::max());
            } catch (const ValidationError& e) {
                for (const auto& v : e.violations()) r.bad.push_back({"model." + v.field, v.constraint});
            }
        }
    }

    if (const json* utility = r.field(doc, "utility", "config")) {
        auto kind = r.get<std::string>(*utility, "kind", "utility");
        auto gamma = r.get<double>(*utility, "gamma", "utility", false);
        if (kind) {
            try {
                config.utility = UtilitySpec{utility_kind_from_string(*kind), gamma.value_or(1.0)};
                validate_utility(config.utility);
            } catch (const ValidationError& e) {
                r.bad.insert(r.bad.end(), e.violations().begin(), e.violations().end());
            }
        }
    }

    if (const json* node = r.field(doc, "uncertainty", "config")) {
        if (auto P = read_uncertainty(r, *node)) {
            config.uncertainty = std::move(*P);
            if (config.uncertainty.dimension() != static_cast<std::size_t>(config.model.m) && config.model.m > 0) {
                r.bad.push_back({"uncertainty", fmt::format("dimension {} does not match model.m = {}",
                                                            config.uncertainty.dimension(), config.model.m)});
            }
        }
    }

    if (const json* sim = r.field(doc, "simulation", "config", false); sim && !sim->is_null()) {
        auto runs = r.get<std::uint64_t>(*sim, "runs", "simulation");
        auto seed = r.get<std::uint64_t>(*sim, "seed", "simulation");
        auto profile = r.profile(*sim, "scoring_profile", "simulation");
        auto bins = r.get<int>(*sim, "histogram_bins", "simulation", false);
        if (runs && seed && profile) {
            SimulationConfig cfg;
            cfg.runs = *runs;
            cfg.seed = *seed;
            cfg.scoring_profile = *profile;
            cfg.histogram_bins = bins.value_or(50);
            try {
                validate_simulation(cfg, config.model);
            } catch (const ValidationError& e) {
                r.bad.insert(r.bad.end(), e.violations().begin(), e.violations().end());
            }
            config.simulation = cfg;
        }
    }

    if (auto out = r.get<std::string>(doc, "output_dir", "config", false)) config.output_dir = *out;

    if (!r.bad.empty()) throw ValidationError(std::move(r.bad));
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw IoError(path.string(), "cannot open config");
    std::stringstream buffer;
    buffer << file.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    json doc;
    doc["model"] = {{"m", config.model.m}, {"N", config.model.N}, {"theta", config.model.theta}, {"T", config.model.T}};
    doc["utility"] = {{"kind", to_string(config.utility.kind)}, {"gamma", config.utility.gamma}};

    const auto& P = config.uncertainty;
    json u;
    u["kind"] = to_string(P.kind());
    switch (P.kind()) {
    case UncertaintySet::Kind::singleton: u["profile"] = profile_json(P.members().front()); break;
    case UncertaintySet::Kind::finite: {
        json rows = json::array();
        for (const auto& p : P.members()) rows.push_back(profile_json(p));
        u["profiles"] = rows;
        break;
    }
    case UncertaintySet::Kind::interval:
        u["p_lo"] = P.interval_bounds().lo;
        u["p_hi"] = P.interval_bounds().hi;
        break;
    case UncertaintySet::Kind::ellipsoid:
        u["center"] = profile_json(P.ellipsoid_data().center);
        u["Y"] = P.ellipsoid_data().Y;
        u["epsilon"] = P.ellipsoid_data().epsilon;
        break;
    }
    doc["uncertainty"] = u;

    if (config.simulation) {
        const auto& s = *config.simulation;
        doc["simulation"] = {{"runs", s.runs},
                             {"seed", s.seed},
                             {"scoring_profile", profile_json(s.scoring_profile)},
                             {"histogram_bins", s.histogram_bins}};
    }
    doc["output_dir"] = config.output_dir;
    return doc.dump(2);
}

std::string config_digest(const ExperimentConfig& config) { return digest(serialize_config(config)); }

} // namespace reltest
