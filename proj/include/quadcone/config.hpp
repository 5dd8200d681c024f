#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadcone/types.hpp"

namespace qc {

struct Tolerances {
    double D = 4;
    double E = 4;
    double dilate = 10;
    double tolerance_multiplier = 1;
    double rho = 0.25;
};

// Every field is optional in the file; experiments fill their own defaults
// for unset sweeps. Present sweeps must be non-empty.
struct ExperimentConfig {
    nlohmann::json system;  // catalog name (string) or inline object; null if unset
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
    std::optional<std::vector<double>> delta, r, R, sigma, K, N, s, t;
    std::optional<std::vector<double>> xi;
    std::optional<int> ensemble, resolution, modes, t_nodes, quadrature_n, grid;
    std::optional<std::int64_t> samples, budget;
    std::optional<bool> conical, force;
    std::optional<std::string> method;
    Tolerances tol;

    nlohmann::json to_json() const;
};

// Strict: unknown keys, wrong types and empty sweeps are ConfigError with the
// offending field named.
ExperimentConfig parse_config(const nlohmann::json& j);
// Parse errors report line and column.
nlohmann::json load_config_json(const std::string& path);
nlohmann::json parse_config_text(const std::string& text);

}  // namespace qc
