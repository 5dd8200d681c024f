#include "quadcone/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>

#include "quadcone/biortho.hpp"
#include "quadcone/cover.hpp"
#include "quadcone/lorentz.hpp"
#include "quadcone/parallel.hpp"
#include "quadcone/quadform.hpp"
#include "quadcone/smoothing.hpp"
#include "quadcone/sqfn.hpp"

namespace qc {

namespace {

using nlohmann::json;

QuadraticSystem system_of(const ExperimentConfig& c, const std::string& fallback) {
    if (c.system.is_null()) return catalog(fallback);
    if (c.system.is_string()) return resolve_system(c.system.get<std::string>());
    return system_from_json(c.system);
}

std::vector<double> or_default(const std::optional<std::vector<double>>& v, std::vector<double> d) {
    return v ? *v : d;
}

Vec unit(int d) {
    Vec e = Vec::Zero(d);
    e[0] = 1;
    return e;
}

json maybe_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return nullptr;
    for (size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0) || !(y[i] > 0)) return nullptr;
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) return nullptr;
    return fit_loglog(x, y).slope;
}

RunOutput run_certify(const ExperimentConfig& c) {
    const auto sys = system_of(c, "complex_parabola_rotated");
    const int res = c.resolution.value_or(10000);
    RunOutput o;
    const auto cert = certify_transversality(sys, res);
    o.results = {{"system", system_to_json(sys)}, {"certificate", certificate_to_json(cert)}};
    o.tables.push_back({"certify", {"resolution", "c_min", "grid_min", "certified_floor"},
                        {{double(res), cert.c_min, cert.grid_min, cert.certified_floor}}});
    return o;
}

RunOutput run_biortho(const ExperimentConfig& c) {
    const auto sys = system_of(c, "complex_parabola");
    const auto deltas = or_default(c.delta, {1.0 / 64, 1.0 / 256});
    BiorthoOptions opt;
    opt.tolerance = c.tol.tolerance_multiplier;
    opt.budget = c.budget.value_or(1000000);
    opt.force = c.force.value_or(false);
    RunOutput o;
    Table t{"biortho", {"delta", "tolerance", "worst_ratio", "count_admissible", "candidates"}, {}};
    json arr = json::array();
    std::vector<double> x, y;
    for (double d : deltas) {
        const auto rep = certify_biorthogonality(sys, d, opt);
        arr.push_back(rep.to_json());
        t.rows.push_back({d, opt.tolerance, rep.worst_ratio, double(rep.count_admissible), double(rep.candidates)});
        x.push_back(1 / d);
        y.push_back(rep.worst_ratio);
    }
    o.results = {{"system", system_to_json(sys)}, {"reports", arr}, {"slope_vs_inverse_delta", maybe_slope(x, y)}};
    o.tables.push_back(t);
    o.plots.push_back({"biortho", "worst biorthogonality ratio", "1/delta", "worst ratio", {{"worst ratio", x, y}}});
    return o;
}

RunOutput run_cover_build(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto rs = or_default(c.r, {16});
    const bool conical = c.conical.value_or(true);
    RunOutput o;
    Table t{"cover_build", {"r", "boxes"}, {}};
    for (double r : rs) {
        const auto cover = build_cap_cover(sys, r, conical, c.tol.D);
        t.rows.push_back({r, double(cover.size())});
    }
    o.results = {{"system", system_to_json(sys)}, {"conical", conical}, {"D", c.tol.D}};
    o.tables.push_back(t);
    return o;
}

RunOutput run_cover_check(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto rs = or_default(c.r, {16});
    const bool conical = c.conical.value_or(true);
    const auto samples = c.samples.value_or(10000);
    RunOutput o;
    Table t{"cover_check", {"r", "samples", "covered", "max_multiplicity"}, {}};
    json arr = json::array();
    for (double r : rs) {
        const auto cover = build_cap_cover(sys, r, conical, c.tol.D);
        const auto rep = covering_check(cover, sys, r, conical, samples, c.seed);
        arr.push_back(rep.to_json());
        t.rows.push_back({r, double(rep.samples), double(rep.covered), double(rep.max_multiplicity)});
    }
    o.results = {{"system", system_to_json(sys)}, {"conical", conical}, {"reports", arr}};
    o.tables.push_back(t);
    return o;
}

RunOutput run_cover_overlap(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto rs = or_default(c.r, {16});
    const auto samples = c.samples.value_or(1000);
    RunOutput o;
    Table t{"cover_overlap", {"r", "sigma", "samples", "max_count", "p99_count", "median_count", "sort_success"}, {}};
    json arr = json::array();
    Plot p{"cover_overlap", "plank overlap", "r sigma", "max count", {}};
    std::map<double, Series> by_r;
    for (double r : rs) {
        const auto sigmas = c.sigma ? *c.sigma : dyadic_sigmas(r);
        Series s{"r = " + std::to_string(int(r)), {}, {}};
        for (double sg : sigmas) {
            const auto rep = overlap_campaign(sys, r, sg, c.tol.D, c.tol.E, c.tol.dilate, samples, c.seed);
            arr.push_back(rep.to_json());
            t.rows.push_back({r, sg, double(rep.samples), double(rep.max_count), double(rep.p99_count),
                              double(rep.median_count), double(rep.sort_success)});
            s.x.push_back(r * sg);
            s.y.push_back(rep.max_count);
        }
        p.series.push_back(s);
    }
    int worst = 0;
    for (const auto& row : t.rows) worst = std::max(worst, int(row[3]));
    o.results = {{"system", system_to_json(sys)}, {"campaigns", arr}, {"max_count", worst}};
    o.tables.push_back(t);
    o.plots.push_back(p);
    return o;
}

RunOutput run_lorentz(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto ss = or_default(c.s, {0.5, 0.25});
    const auto rs = or_default(c.r, {64});
    const auto samples = c.samples.value_or(10000);
    RunOutput o;
    Table t{"lorentz", {"s", "r", "min_factor", "max_factor", "on_cone_error", "log_jacobian"}, {}};
    json arr = json::array();
    for (double s : ss)
        for (double r : rs) {
            const LorentzMap map(sys, 0.5 * (1 - s) * unit(sys.d), s);
            const auto rep = neighborhood_rescaling_check(map, r, samples, c.seed);
            const double err = on_cone_error(map, samples, c.seed);
            const auto fit = plank_image_fit(map, 0.5 * (1 - s) * unit(sys.d), 0.5, r, c.tol.E);
            arr.push_back({{"rescaling", rep.to_json()}, {"on_cone_error", err}, {"plank_image", fit.to_json()}});
            t.rows.push_back({s, r, rep.min_factor, rep.max_factor, err, rep.log_jacobian});
        }
    o.results = {{"system", system_to_json(sys)}, {"reports", arr}};
    o.tables.push_back(t);
    return o;
}

RunOutput run_sqfn_ratio(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const bool conical = c.conical.value_or(false);
    const auto deltas = or_default(c.delta, {1.0 / 16, 1.0 / 64, 1.0 / 256});
    const int ens = c.ensemble.value_or(20);
    RunOutput o;
    Table t{"sqfn_ratio", {"delta", "max_ratio", "min_ratio", "stress_ratio", "terms"}, {}};
    json arr = json::array();
    std::vector<double> x, y;
    for (double d : deltas) {
        const auto rep = sq_ensemble(sys, d, conical, ens, c.seed);
        arr.push_back(rep.to_json());
        t.rows.push_back({d, rep.max_ratio, rep.min_ratio, rep.stress_ratio, double(rep.terms)});
        x.push_back(1 / d);
        y.push_back(rep.max_ratio);
    }
    o.results = {{"system", system_to_json(sys)},
                 {"conical", conical},
                 {"reports", arr},
                 {"slope_vs_inverse_delta", maybe_slope(x, y)}};
    o.tables.push_back(t);
    o.plots.push_back({"sqfn_ratio", "square function ratio", "1/delta", "max ratio", {{"max ratio", x, y}}});
    return o;
}

RunOutput run_sqfn_kakeya(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto rs = or_default(c.r, {8, 16, 32});
    const int ens = c.ensemble.value_or(10);
    RunOutput o;
    Table t{"sqfn_kakeya", {"r", "max_ratio", "median_ratio"}, {}};
    std::vector<double> x, y;
    for (double r : rs) {
        const auto caps = make_caps(sys, 1 / (r * r), true);
        std::vector<double> ratios(ens, 0.0);
        parallel_for(ens, [&](std::int64_t m) {
            SynthesisOptions so;
            so.aligned = (m == 0);
            const auto f = synthesize_field(sys, caps, c.seed, static_cast<std::uint64_t>(m), so);
            ratios[m] = kakeya_check(f, caps, r).ratio;
        });
        auto sorted = ratios;
        std::sort(sorted.begin(), sorted.end());
        t.rows.push_back({r, sorted.back(), sorted[sorted.size() / 2]});
        x.push_back(r);
        y.push_back(sorted.back());
    }
    o.results = {{"system", system_to_json(sys)}, {"ensemble", ens}, {"slope_vs_r", maybe_slope(x, y)}};
    o.tables.push_back(t);
    o.plots.push_back({"sqfn_kakeya", "Kakeya ratio LHS/RHS", "r", "max ratio", {{"max ratio", x, y}}});
    return o;
}

RunOutput run_sqfn_smeasure(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto rs = or_default(c.r, {2, 4, 8});
    std::vector<double> Rs;
    if (c.R) {
        if (c.R->size() != rs.size()) throw ConfigError("config field 'R': must have the same length as 'r'");
        Rs = *c.R;
    } else {
        for (double r : rs) Rs.push_back(r * r);
    }
    const int ens = c.ensemble.value_or(10);
    RunOutput o;
    Table t{"sqfn_smeasure", {"r", "R", "S_emp", "median"}, {}};
    json arr = json::array();
    std::vector<double> x, y;
    for (size_t i = 0; i < rs.size(); ++i) {
        const auto rep = measure_S(sys, rs[i], Rs[i], ens, c.seed);
        arr.push_back(rep.to_json());
        t.rows.push_back({rs[i], Rs[i], rep.S_emp, rep.median});
        x.push_back(rs[i]);
        y.push_back(rep.S_emp);
    }
    o.results = {{"system", system_to_json(sys)}, {"reports", arr}};
    o.tables.push_back(t);
    o.plots.push_back({"sqfn_smeasure", "two-scale quantity S(r, R)", "r", "S_emp", {{"S_emp", x, y}}});
    return o;
}

RunOutput run_sqfn_tubes(const ExperimentConfig& c) {
    const auto sys = system_of(c, "parabola");
    const auto Ks = or_default(c.K, {4096});
    const auto ss = or_default(c.s, {1.0 / 16, 1.0 / 8, 1.0 / 4});
    const auto method = c.method.value_or("exact") == "exact" ? TubeMethod::Exact : TubeMethod::MonteCarlo;
    const auto samples = c.samples.value_or(1000000);
    RunOutput o;
    Table t{"sqfn_tubes", {"K", "s", "volume", "std_error", "single_volume"}, {}};
    Plot p{"sqfn_tubes", "tube intersection volume", "s", "volume", {}};
    json slopes = json::array();
    for (double K : Ks) {
        Series se{"K = " + std::to_string(int(K)), {}, {}};
        for (double s : ss) {
            const Vec e = unit(sys.d);
            const auto rep = tube_intersection(sys, K, -0.5 * s * e, 0.5 * s * e, method, samples, c.seed);
            t.rows.push_back({K, s, rep.volume, rep.std_error, rep.single_volume});
            se.x.push_back(s);
            se.y.push_back(rep.volume);
        }
        slopes.push_back({{"K", K}, {"slope", maybe_slope(se.x, se.y)}});
        p.series.push_back(se);
    }
    o.results = {{"system", system_to_json(sys)},
                 {"method", method == TubeMethod::Exact ? "exact" : "monte-carlo"},
                 {"slopes", slopes}};
    o.tables.push_back(t);
    o.plots.push_back(p);
    return o;
}

AverageSpec smoothing_spec(const ExperimentConfig& c) {
    const auto base = two_parameter_spec();
    return make_average_spec(base.A, c.tol.rho);
}

Vec frequency_of(const ExperimentConfig& c, int D) {
    const auto v = or_default(c.xi, {0.3, 0.2, 0.5});
    if (static_cast<int>(v.size()) != D) throw ConfigError("config field 'xi': expected " + std::to_string(D) + " entries");
    return from_std(v);
}

RunOutput run_smoothing_phase(const ExperimentConfig& c) {
    const auto spec = smoothing_spec(c);
    const Vec xi = frequency_of(c, spec.d + 1);
    const auto pd = phase_data(spec, xi);
    RunOutput o;
    o.results = {{"spec", spec.to_json()}, {"phase", pd.to_json()}};
    Table t{"smoothing_phase", {"form", "s1", "s2", "phase_value", "gradient_norm"}, {}};
    for (int i = 0; i < spec.m; ++i) {
        const auto& f = pd.forms[i];
        t.rows.push_back({double(i), f.s_star[0], f.s_star[1], f.phase_value, f.gradient_norm});
    }
    o.tables.push_back(t);
    return o;
}

RunOutput run_smoothing_osc(const ExperimentConfig& c) {
    const auto spec = smoothing_spec(c);
    const Vec xi = frequency_of(c, spec.d + 1);
    const auto ts = or_default(c.t, {100, 316, 1000});
    const int n = c.quadrature_n.value_or(0);
    RunOutput o;
    Table t{"smoothing_osc", {"form", "t", "abs_I", "abs_I_scaled", "leading_scaled", "aligned_phase"}, {}};
    Plot p{"smoothing_osc", "oscillatory integral decay", "t", "|I(t)|", {}};
    json slopes = json::array();
    for (int i = 0; i < spec.m; ++i) {
        const auto sp = stationary_point(spec, i, xi);
        Series se{"form " + std::to_string(i + 1), {}, {}};
        for (double tv : ts) {
            const cplx I = oscillatory_integral(spec, i, tv, xi, n);
            const cplx L = stationary_phase_leading(spec, i, tv, xi);
            const double scale = std::pow(tv, 0.5 * spec.d);
            const double ph = std::arg(I * std::exp(cplx(0, tv * sp.phase_value)));
            t.rows.push_back({double(i), tv, std::abs(I), std::abs(I) * scale, std::abs(L) * scale, ph});
            se.x.push_back(tv);
            se.y.push_back(std::abs(I));
        }
        slopes.push_back(maybe_slope(se.x, se.y));
        p.series.push_back(se);
    }
    o.results = {{"spec", spec.to_json()}, {"xi", to_std(xi)}, {"decay_slopes", slopes}};
    o.tables.push_back(t);
    o.plots.push_back(p);
    return o;
}

RunOutput run_smoothing_average(const ExperimentConfig& c) {
    const auto spec = smoothing_spec(c);
    const int n = c.grid.value_or(16);
    const auto tv = or_default(c.t, {1.0, 1.25});
    if (static_cast<int>(tv.size()) != spec.m) throw ConfigError("config field 't': expected m entries");
    const int modes = c.modes.value_or(6);
    const int qn = c.quadrature_n.value_or(0);
    // Real trigonometric polynomial with random modes well below Nyquist.
    auto rng = make_rng(c.seed, 0xa11);
    std::uniform_int_distribution<int> kd(-n / 4, n / 4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::array<int, 3>> ks;
    std::vector<cplx> amps;
    for (int j = 0; j < modes; ++j) {
        ks.push_back({kd(rng), kd(rng), kd(rng)});
        amps.push_back(std::polar(0.5 + 0.5 * u(rng), 2 * M_PI * u(rng)));
    }
    GridField f;
    f.dims = {n, n, n};
    f.extent = Vec::Constant(3, 2 * M_PI);
    f.values.assign(static_cast<size_t>(n) * n * n, 0.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int cc = 0; cc < n; ++cc) {
                const double x[3] = {2 * M_PI * a / n, 2 * M_PI * b / n, 2 * M_PI * cc / n};
                double v = 1.0;
                for (int j = 0; j < modes; ++j)
                    v += 2 * std::real(amps[j] * std::exp(cplx(0, ks[j][0] * x[0] + ks[j][1] * x[1] + ks[j][2] * x[2])));
                f.values[(static_cast<size_t>(a) * n + b) * n + cc] = v;
            }
    const Vec t = from_std(tv);
    const auto g = average_direct(spec, f, t, qn);
    double mf = 0, mg = 0, imag = 0;
    for (size_t i = 0; i < f.total(); ++i) {
        mf += f.values[i].real();
        mg += g.values[i].real();
        imag = std::max(imag, std::abs(g.values[i].imag()));
    }
    // Single-mode factorization on the first mode.
    GridField one = f;
    const auto& k0 = ks[0];
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int cc = 0; cc < n; ++cc)
                one.values[(static_cast<size_t>(a) * n + b) * n + cc] =
                    std::exp(cplx(0, 2 * M_PI * (k0[0] * a + k0[1] * b + k0[2] * cc) / n));
    const auto g1 = average_direct(spec, one, t, qn);
    Vec xi0(3);
    xi0 << k0[0], k0[1], k0[2];
    const cplx m0 = average_multiplier(spec, t, xi0, qn);
    double ferr = 0;
    for (size_t i = 0; i < one.total(); ++i) ferr = std::max(ferr, std::abs(g1.values[i] - m0 * one.values[i]));
    RunOutput o;
    o.results = {{"spec", spec.to_json()},
                 {"t", tv},
                 {"grid", n},
                 {"mean_ratio", mg / mf},
                 {"expected_mean_ratio", spec.chi_mass * spec.chi_mass},
                 {"max_imag", imag},
                 {"factorization_error", ferr}};
    Table tab{"smoothing_average", {"k1", "k2", "k3", "abs_multiplier"}, {}};
    for (const auto& k : ks) {
        Vec xi(3);
        xi << k[0], k[1], k[2];
        tab.rows.push_back({double(k[0]), double(k[1]), double(k[2]), std::abs(average_multiplier(spec, t, xi, qn))});
    }
    o.tables.push_back(tab);
    return o;
}

RunOutput run_smoothing_fio(const ExperimentConfig& c) {
    const auto spec = smoothing_spec(c);
    const auto Ns = or_default(c.N, {8, 16, 32});
    const int modes = c.modes.value_or(48);
    const int tn = c.t_nodes.value_or(4);
    const int qn = c.quadrature_n.value_or(0);
    RunOutput o;
    Table t{"smoothing_fio", {"N", "ratio", "max_pointwise", "min_pointwise", "off_cone_decay"}, {}};
    json arr = json::array();
    std::vector<double> x, y, dec;
    Vec t11 = Vec::Ones(spec.m);
    for (double Nd : Ns) {
        const int N = static_cast<int>(Nd);
        const auto rep = fio_compare(spec, band_field(spec, N, modes, c.seed), N, tn, qn);
        const double decay = average_l4_ratio(spec, band_field(spec, N, modes, c.seed, 0.0), t11, 512);
        arr.push_back(rep.to_json());
        t.rows.push_back({Nd, rep.ratio, rep.max_pointwise, rep.min_pointwise, decay});
        x.push_back(Nd);
        y.push_back(rep.ratio);
        dec.push_back(decay);
    }
    o.results = {{"spec", spec.to_json()},
                 {"reports", arr},
                 {"ratio_slope", maybe_slope(x, y)},
                 {"off_cone_slope", maybe_slope(x, dec)}};
    o.tables.push_back(t);
    o.plots.push_back({"smoothing_fio", "averages against the FIO model", "N", "value",
                       {{"ratio", x, y}, {"off-cone decay", x, dec}}});
    return o;
}

const std::map<std::string, std::function<RunOutput(const ExperimentConfig&)>>& registry() {
    static const std::map<std::string, std::function<RunOutput(const ExperimentConfig&)>> r{
        {"certify", run_certify},
        {"biortho", run_biortho},
        {"cover.build", run_cover_build},
        {"cover.check", run_cover_check},
        {"cover.overlap", run_cover_overlap},
        {"lorentz", run_lorentz},
        {"sqfn.ratio", run_sqfn_ratio},
        {"sqfn.kakeya", run_sqfn_kakeya},
        {"sqfn.smeasure", run_sqfn_smeasure},
        {"sqfn.tubes", run_sqfn_tubes},
        {"smoothing.phase", run_smoothing_phase},
        {"smoothing.osc", run_smoothing_osc},
        {"smoothing.average", run_smoothing_average},
        {"smoothing.fio", run_smoothing_fio},
    };
    return r;
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> n;
    for (const auto& [k, v] : registry()) n.push_back(k);
    return n;
}

RunOutput run_experiment(const std::string& name, const ExperimentConfig& cfg) {
    const auto it = registry().find(name);
    if (it == registry().end()) throw ConfigError("unknown experiment '" + name + "'");
    return it->second(cfg);
}

json write_outputs(const std::string& dir, const std::string& name, const ExperimentConfig& cfg, const RunOutput& out,
                   double wall_seconds) {
    json rep;
    rep["experiment"] = name;
    rep["version"] = version_string();
    rep["config"] = cfg.to_json();
    rep["results"] = out.results;
    rep["wall_time_s"] = wall_seconds;
    json files = json::array();
    std::string stem = name;
    std::replace(stem.begin(), stem.end(), '.', '_');
    for (const auto& t : out.tables) {
        write_text(dir + "/" + t.name + ".csv", to_csv(t));
        files.push_back(t.name + ".csv");
    }
    for (const auto& p : out.plots) {
        write_text(dir + "/" + p.name + ".svg", loglog_svg(p.title, p.xlabel, p.ylabel, p.series));
        files.push_back(p.name + ".svg");
    }
    rep["files"] = files;
    write_text(dir + "/" + stem + "_report.json", rep.dump(2) + "\n");
    return rep;
}

}  // namespace qc
