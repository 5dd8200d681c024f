#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "quadcone/config.hpp"
#include "quadcone/report.hpp"

namespace qc {

struct Plot {
    std::string name;
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
};

struct RunOutput {
    nlohmann::json results;
    std::vector<Table> tables;
    std::vector<Plot> plots;
};

// Experiment names: certify, biortho, cover.build, cover.check, cover.overlap,
// lorentz, sqfn.ratio, sqfn.kakeya, sqfn.smeasure, sqfn.tubes, smoothing.phase,
// smoothing.osc, smoothing.average, smoothing.fio.
std::vector<std::string> experiment_names();
RunOutput run_experiment(const std::string& name, const ExperimentConfig& cfg);

// report.json (config echo, results, version, wall time), one CSV per table
// and one SVG per plot under dir. Returns the report.
nlohmann::json write_outputs(const std::string& dir, const std::string& name, const ExperimentConfig& cfg,
                             const RunOutput& out, double wall_seconds);

}  // namespace qc
