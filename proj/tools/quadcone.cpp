#include <chrono>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quadcone/config.hpp"
#include "quadcone/experiments.hpp"
#include "quadcone/parallel.hpp"
#include "quadcone/types.hpp"

using nlohmann::json;

namespace {

// Values given on the command line; each one overrides the config file.
struct Overrides {
    std::string system;
    std::map<std::string, std::vector<double>> sweeps;
    std::map<std::string, std::int64_t> ints;
    std::optional<bool> conical;
    bool force = false;
    std::string method;
    std::map<std::string, double> tol;
};

const std::vector<std::string> kSweeps{"delta", "r", "R", "sigma", "K", "N", "s", "t", "xi"};
const std::vector<std::pair<std::string, std::string>> kInts{{"ensemble", "ensemble"},   {"samples", "samples"},
                                                             {"resolution", "resolution"}, {"modes", "modes"},
                                                             {"t-nodes", "t_nodes"},     {"quadrature-n", "quadrature_n"},
                                                             {"grid", "grid"},           {"budget", "budget"}};
const std::vector<std::pair<std::string, std::string>> kTols{
    {"D", "D"}, {"E", "E"}, {"dilate", "dilate"}, {"tolerance-multiplier", "tolerance_multiplier"}, {"rho", "rho"}};

void add_leaf_options(CLI::App* leaf, Overrides& ov) {
    leaf->add_option("--system", ov.system, "catalog name or inline JSON object");
    for (const auto& k : kSweeps) leaf->add_option("--" + k, ov.sweeps[k], k + " sweep")->delimiter(',');
    for (const auto& [flag, key] : kInts) leaf->add_option("--" + flag, ov.ints[key]);
    leaf->add_flag("--conical,!--manifold", ov.conical, "cone or manifold neighbourhood");
    leaf->add_flag("--force", ov.force, "run past the enumeration budget");
    leaf->add_option("--method", ov.method)->check(CLI::IsMember({"exact", "monte-carlo"}));
    for (const auto& [flag, key] : kTols) leaf->add_option("--" + flag, ov.tol[key]);
}

json merge(json base, const Overrides& ov, CLI::App* leaf) {
    if (!base.is_object()) base = json::object();
    if (leaf->count("--system")) {
        if (!ov.system.empty() && ov.system.front() == '{')
            base["system"] = qc::parse_config_text(ov.system);
        else
            base["system"] = ov.system;
    }
    for (const auto& k : kSweeps)
        if (leaf->count("--" + k)) base[k] = ov.sweeps.at(k);
    for (const auto& [flag, key] : kInts)
        if (leaf->count("--" + flag)) base[key] = ov.ints.at(key);
    if (ov.conical) base["conical"] = *ov.conical;
    if (ov.force) base["force"] = true;
    if (leaf->count("--method")) base["method"] = ov.method;
    for (const auto& [flag, key] : kTols)
        if (leaf->count("--" + flag)) base["tolerances"][key] = ov.tol.at(key);
    return base;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadcone: square functions, Kakeya geometry and local smoothing experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("--out", out_dir, "output directory");

    Overrides ov;
    std::vector<std::pair<CLI::App*, std::string>> leaves;
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, const std::string& id) {
        CLI::App* c = parent->add_subcommand(name, help);
        add_leaf_options(c, ov);
        leaves.emplace_back(c, id);
        return c;
    };
    leaf(&app, "certify", "transversality certificate", "certify");
    leaf(&app, "biortho", "biorthogonality search on the sqrt(delta) lattice", "biortho");
    auto* cover = app.add_subcommand("cover", "cap covers and plank overlap");
    cover->require_subcommand(1);
    leaf(cover, "build", "build the cap cover", "cover.build");
    leaf(cover, "check", "sample the neighbourhood against the cover", "cover.check");
    leaf(cover, "overlap", "plank overlap campaign", "cover.overlap");
    leaf(&app, "lorentz", "generalized Lorentz rescaling checks", "lorentz");
    auto* sq = app.add_subcommand("sqfn", "square function and Kakeya experiments");
    sq->require_subcommand(1);
    leaf(sq, "ratio", "square-function ratio ensembles", "sqfn.ratio");
    leaf(sq, "kakeya", "wave-envelope Kakeya ratio", "sqfn.kakeya");
    leaf(sq, "smeasure", "two-scale quantity S(r, R)", "sqfn.smeasure");
    leaf(sq, "tubes", "tube intersection volumes", "sqfn.tubes");
    auto* sm = app.add_subcommand("smoothing", "stationary phase and multi-parameter averages");
    sm->require_subcommand(1);
    leaf(sm, "phase", "stationary points and phase values", "smoothing.phase");
    leaf(sm, "osc", "oscillatory integral decay", "smoothing.osc");
    leaf(sm, "average", "averages on a periodic grid", "smoothing.average");
    leaf(sm, "fio", "averages against the FIO model", "smoothing.fio");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* chosen = nullptr;
        std::string id;
        for (auto& [c, name] : leaves)
            if (c->parsed()) chosen = c, id = name;
        if (!chosen) throw qc::ConfigError("no experiment selected");
        json j = config_path.empty() ? json::object() : qc::load_config_json(config_path);
        j = merge(j, ov, chosen);
        if (seed) j["seed"] = *seed;
        if (threads) j["threads"] = *threads;
        if (!out_dir.empty()) j["out"] = out_dir;
        qc::ExperimentConfig cfg = qc::parse_config(j);
        if (cfg.out.empty()) cfg.out = "quadcone_out";
        qc::set_threads(cfg.threads);
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = qc::run_experiment(id, cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        qc::write_outputs(cfg.out, id, cfg, out, wall);
        std::cout << out.results.dump(2) << "\n";
        return 0;
    } catch (const qc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
