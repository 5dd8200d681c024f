#include "quadcone/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>

#include "quadcone/parallel.hpp"
#include "quadcone/sqfn.hpp"

namespace qc {

namespace {

constexpr double kPi = std::numbers::pi;

double profile(double r2) { return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0; }

}  // namespace

double chi_ball(const Vec& s) { return profile(s.squaredNorm()); }

double chi_time(double t) {
    const double u = 2.0 * (t - 1.0);
    return profile(u * u);
}

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw Error("Gauss-Legendre rule needs n >= 1");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
    auto rule = std::make_unique<GaussRule>();
    rule->x.assign(n, 0.0);
    rule->w.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? x : p1;
            const double pm = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node for the weight.
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule->x[i] = -x;
        rule->w[i] = w;
        rule->x[n - 1 - i] = x;
        rule->w[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule->x[n / 2] = 0.0;
    auto& ref = *rule;
    cache.emplace(n, std::move(rule));
    return ref;
}

double chi_mass(int d) {
    // |S^{d-1}| * int_0^1 chi(r) r^{d-1} dr.
    const auto& g = gauss_legendre(4000);
    double radial = 0;
    for (size_t j = 0; j < g.x.size(); ++j) {
        const double r = 0.5 * (g.x[j] + 1.0);
        radial += 0.5 * g.w[j] * profile(r * r) * std::pow(r, d - 1);
    }
    const double sphere = 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
    return sphere * radial;
}

QuadraticSystem AverageSpec::inverse_system() const {
    // quadform uses q = 1/2 <xi, A xi>; only the matrices matter for certification.
    return make_system(A_inv, {}, {}, false, "inverse_forms");
}

nlohmann::json AverageSpec::to_json() const {
    nlohmann::json j;
    j["d"] = d;
    j["m"] = m;
    j["rho"] = rho;
    j["chi_mass"] = chi_mass;
    j["condition"] = condition;
    auto mats = nlohmann::json::array();
    for (const auto& a : A) {
        auto rows = nlohmann::json::array();
        for (int r = 0; r < a.rows(); ++r) rows.push_back(to_std(a.row(r).transpose()));
        mats.push_back(rows);
    }
    j["A"] = mats;
    return j;
}

AverageSpec make_average_spec(std::vector<Mat> A, double rho) {
    if (A.empty()) throw DimensionMismatch("average spec needs at least one form");
    if (!(rho > 0)) throw Error("rho must be positive");
    AverageSpec s;
    s.d = static_cast<int>(A[0].rows());
    s.m = static_cast<int>(A.size());
    s.rho = rho;
    for (auto& a : A) {
        if (a.rows() != s.d || a.cols() != s.d) throw DimensionMismatch("forms must be d x d");
        const Mat sym = 0.5 * (a + a.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(sym);
        const Vec ev = es.eigenvalues();
        const double amin = ev.cwiseAbs().minCoeff();
        if (amin < 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
            throw StructurallyDegenerate("averaging form is singular");
        s.A.push_back(sym);
        s.A_inv.push_back(sym.inverse());
        s.condition.push_back(ev.cwiseAbs().maxCoeff() / amin);
        s.eigval.push_back(ev);
        s.eigvec.push_back(es.eigenvectors());
    }
    s.chi_mass = chi_mass(s.d);
    return s;
}

AverageSpec two_parameter_spec() {
    Mat a1(2, 2), a2(2, 2);
    a1 << 1, 0, 0, -1;
    a2 << 0, 1, 1, 0;
    return make_average_spec({a1, a2});
}

nlohmann::json PhaseData::to_json() const {
    nlohmann::json j;
    j["xi"] = to_std(xi);
    auto arr = nlohmann::json::array();
    for (const auto& f : forms)
        arr.push_back({{"s_star", to_std(f.s_star)}, {"phase_value", f.phase_value}, {"gradient_norm", f.gradient_norm}});
    j["forms"] = arr;
    return j;
}

namespace {
void check_form(const AverageSpec& spec, int i, const Vec& xi) {
    if (i < 0 || i >= spec.m) throw DimensionMismatch("form index out of range");
    if (xi.size() != spec.d + 1) throw DimensionMismatch("frequency must have d + 1 entries");
}
}  // namespace

double phase(const AverageSpec& spec, int i, const Vec& s, const Vec& xi) {
    check_form(spec, i, xi);
    return s.dot(xi.head(spec.d)) + s.dot(spec.A[i] * s) * xi[spec.d];
}

Vec phase_gradient(const AverageSpec& spec, int i, const Vec& s, const Vec& xi) {
    check_form(spec, i, xi);
    return xi.head(spec.d) + 2.0 * xi[spec.d] * (spec.A[i] * s);
}

StationaryPoint stationary_point(const AverageSpec& spec, int i, const Vec& xi) {
    check_form(spec, i, xi);
    const Vec xp = xi.head(spec.d);
    const double x3 = xi[spec.d];
    StationaryPoint p;
    if (xp.norm() == 0) {
        p.s_star = Vec::Zero(spec.d);
        return p;
    }
    if (std::abs(x3) < spec.rho * xp.norm())
        throw NearConeOfDegeneracy("|xi_{d+1}| < rho |xi'|: no admissible stationary point");
    const Vec ax = spec.A_inv[i] * xp;
    p.s_star = -ax / (2.0 * x3);
    p.phase_value = -ax.dot(xp) / (4.0 * x3);
    p.gradient_norm = phase_gradient(spec, i, p.s_star, xi).norm();
    if (p.gradient_norm > 1e-10 * std::max(1.0, xi.norm()))
        throw Error("stationary point gradient check failed");
    return p;
}

PhaseData phase_data(const AverageSpec& spec, const Vec& xi) {
    PhaseData pd;
    pd.xi = xi;
    for (int i = 0; i < spec.m; ++i) pd.forms.push_back(stationary_point(spec, i, xi));
    return pd;
}

namespace {

// Largest local frequency of y_k -> t (eta_k y + xi3 lambda_k y^2) on [-1, 1].
double axis_frequency(const AverageSpec& spec, int i, double t, const Vec& xi, int k) {
    const Vec eta = spec.eigvec[i].transpose() * xi.head(spec.d);
    return std::abs(t) * (std::abs(eta[k]) + 2.0 * std::abs(xi[spec.d] * spec.eigval[i][k]));
}

}  // namespace

int auto_quadrature_n(const AverageSpec& spec, int i, double t, const Vec& xi) {
    check_form(spec, i, xi);
    double w = 0;
    for (int k = 0; k < spec.d; ++k) w = std::max(w, axis_frequency(spec, i, t, xi, k));
    const int by_freq = static_cast<int>(std::ceil(0.55 * w + 40.0));
    const int by_rule = static_cast<int>(std::ceil(64.0 * std::sqrt(std::abs(t))));
    return std::max({128, by_freq, by_rule});
}

cplx oscillatory_integral_fixed(const AverageSpec& spec, int i, double t, const Vec& xi, int n) {
    check_form(spec, i, xi);
    const int d = spec.d;
    const auto& g = gauss_legendre(n);
    const Vec eta = spec.eigvec[i].transpose() * xi.head(d);
    const double x3 = xi[d];
    // Per-axis tables w_j exp(-i t (eta_k y_j + xi3 lambda_k y_j^2)).
    std::vector<std::vector<cplx>> E(d, std::vector<cplx>(n));
    for (int k = 0; k < d; ++k) {
        const double lam = spec.eigval[i][k];
        for (int j = 0; j < n; ++j) {
            const double y = g.x[j];
            const double ph = -t * (eta[k] * y + x3 * lam * y * y);
            E[k][j] = g.w[j] * cplx(std::cos(ph), std::sin(ph));
        }
    }
    if (d == 1) {
        cplx s = 0;
        for (int j = 0; j < n; ++j) s += E[0][j] * profile(g.x[j] * g.x[j]);
        return s;
    }
    // Outer axis in fixed blocks, remaining axes by odometer; ordered reduction.
    constexpr std::int64_t kBlock = 64;
    const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<cplx> partial(static_cast<size_t>(nblocks));
    parallel_blocks(n, kBlock, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        cplx acc = 0;
        std::vector<int> idx(d - 1);
        for (std::int64_t j0 = lo; j0 < hi; ++j0) {
            const double r0 = g.x[j0] * g.x[j0];
            if (r0 >= 1) continue;
            std::fill(idx.begin(), idx.end(), 0);
            cplx inner = 0;
            for (;;) {
                double r2 = r0;
                cplx prod = 1;
                for (int k = 1; k < d; ++k) {
                    const double y = g.x[idx[k - 1]];
                    r2 += y * y;
                    prod *= E[k][idx[k - 1]];
                }
                if (r2 < 1) inner += prod * profile(r2);
                int k = d - 2;
                while (k >= 0 && ++idx[k] == n) idx[k--] = 0;
                if (k < 0) break;
            }
            acc += E[0][j0] * inner;
        }
        partial[static_cast<size_t>(b)] = acc;
    });
    cplx s = 0;
    for (const auto& p : partial) s += p;
    return s;
}

cplx oscillatory_integral(const AverageSpec& spec, int i, double t, const Vec& xi, int quadrature_n, double tol) {
    check_form(spec, i, xi);
    if (quadrature_n < 0) throw Error("quadrature_n must be non-negative");
    const double need = 64.0 * std::sqrt(std::abs(t));
    int n = quadrature_n;
    if (n == 0)
        n = auto_quadrature_n(spec, i, t, xi);
    else if (n < need)
        throw QuadratureUnderresolved("quadrature_n below 64 t^{1/2}");
    const cplx a = oscillatory_integral_fixed(spec, i, t, xi, n);
    const cplx b = oscillatory_integral_fixed(spec, i, t, xi, 2 * n);
    const double floor = 1e-6 * spec.chi_mass;
    if (std::abs(a - b) > tol * std::max(std::abs(b), floor))
        throw QuadratureUnderresolved("doubling test failed at n = " + std::to_string(n));
    return b;
}

cplx stationary_phase_leading(const AverageSpec& spec, int i, double t, const Vec& xi) {
    const StationaryPoint p = stationary_point(spec, i, xi);
    const double x3 = xi[spec.d];
    if (x3 == 0) throw NearConeOfDegeneracy("xi_{d+1} = 0");
    int sgn = 0;
    double det = 1;
    for (int k = 0; k < spec.d; ++k) {
        const double h = 2.0 * x3 * spec.eigval[i][k];
        sgn += h > 0 ? 1 : -1;
        det *= std::abs(h);
    }
    const double amp = chi_ball(p.s_star) * std::pow(2.0 * kPi / t, 0.5 * spec.d) / std::sqrt(det);
    return amp * std::exp(cplx(0, -kPi * sgn / 4.0 - t * p.phase_value));
}

cplx average_multiplier(const AverageSpec& spec, const Vec& t, const Vec& xi, int quadrature_n) {
    if (t.size() != spec.m) throw DimensionMismatch("t must have m entries");
    cplx v = 1;
    for (int i = 0; i < spec.m; ++i) v *= oscillatory_integral(spec, i, t[i], xi, quadrature_n);
    return v;
}

GridField average_direct(const AverageSpec& spec, const GridField& f, const Vec& t, int quadrature_n) {
    const int D = spec.d + 1;
    if (static_cast<int>(f.dims.size()) != D) throw DimensionMismatch("grid must live on R^{d+1}");
    if (t.size() != spec.m) throw DimensionMismatch("t must have m entries");
    for (int i = 0; i < spec.m; ++i)
        if (std::abs(t[i]) > 1.5) throw Error("|t_i| must not exceed 3/2");
    std::vector<cplx> c = f.values;
    fft(c, f.dims, -1);
    const double inv = 1.0 / static_cast<double>(c.size());
    double cmax = 0;
    for (auto& v : c) {
        v *= inv;
        cmax = std::max(cmax, std::abs(v));
    }
    const double cut = 1e-13 * cmax;
    std::vector<std::int64_t> stride(D, 1);
    for (int a = D - 2; a >= 0; --a) stride[a] = stride[a + 1] * f.dims[a + 1];
    auto signed_key = [&](std::int64_t idx, std::vector<int>& k) {
        for (int a = 0; a < D; ++a) {
            const int n = f.dims[a];
            int v = static_cast<int>((idx / stride[a]) % n);
            if (v > n / 2 || (v == n / 2 && n % 2 == 0 && v != 0)) v -= n;
            k[a] = v;
        }
    };
    std::vector<std::int64_t> active;
    {
        std::vector<int> k(D);
        for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(c.size()); ++idx) {
            if (std::abs(c[idx]) <= cut) continue;
            signed_key(idx, k);
            for (int a = 0; a < D; ++a)
                if (f.dims[a] % 2 == 0 && f.dims[a] > 1 && k[a] == -f.dims[a] / 2)
                    throw NyquistViolation("field has energy at the Nyquist frequency");
            active.push_back(idx);
        }
    }
    std::vector<cplx> mult(active.size());
    parallel_for(static_cast<std::int64_t>(active.size()), [&](std::int64_t j) {
        std::vector<int> k(D);
        signed_key(active[j], k);
        Vec xi(D);
        for (int a = 0; a < D; ++a) xi[a] = 2.0 * kPi * k[a] / f.extent[a];
        mult[j] = average_multiplier(spec, t, xi, quadrature_n);
    });
    std::vector<cplx> out(c.size(), cplx(0, 0));
    for (size_t j = 0; j < active.size(); ++j) out[active[j]] = c[active[j]] * mult[j];
    fft(out, f.dims, +1);
    GridField g;
    g.dims = f.dims;
    g.extent = f.extent;
    g.values = std::move(out);
    g.freq_meta = f.freq_meta;
    return g;
}

SpectralField band_field(const AverageSpec& spec, int N, int modes, std::uint64_t seed, double cone) {
    if (N < 1 || modes < 1) throw Error("band_field needs N >= 1 and modes >= 1");
    const int D = spec.d + 1;
    auto rng = make_rng(seed, 0x5a5a);
    std::uniform_real_distribution<double> U(-2.0, 2.0), amp(0.5, 1.0), ph(0.0, 2.0 * kPi);
    SpectralField f;
    f.dim = D;
    f.spacing = Vec::Constant(D, 1.0 / (2.0 * kPi));
    std::set<std::vector<int>> seen;
    // Directions drawn in the unit annulus so the same seed gives the same
    // geometry at every N. cone > 0: |u'| <= cone |u_{d+1}|; cone = 0: u_{d+1} = 0.
    int attempts = 0;
    while (static_cast<int>(f.coeffs.size()) < modes) {
        if (++attempts > 1000 * modes) throw Error("band_field: could not place the requested modes");
        Vec u(D);
        for (int a = 0; a < D; ++a) u[a] = U(rng);
        const double a_ = amp(rng), p_ = ph(rng);
        if (cone == 0) u[D - 1] = 0;
        const double r = u.norm();
        if (r < 1 || r >= 2) continue;
        if (cone > 0 && u.head(spec.d).norm() > cone * std::abs(u[D - 1])) continue;
        std::vector<int> k(D);
        for (int a = 0; a < D; ++a) k[a] = static_cast<int>(std::lround(N * u[a]));
        if (cone > 0 && k[D - 1] == 0) continue;
        if (!seen.insert(k).second) continue;
        f.keys.insert(f.keys.end(), k.begin(), k.end());
        f.coeffs.push_back(a_ * std::exp(cplx(0, p_)));
    }
    return f;
}

nlohmann::json FioReport::to_json() const {
    return {{"N", N},
            {"modes", modes},
            {"t_nodes", t_nodes},
            {"ratios", ratios},
            {"ratio", ratio},
            {"max_pointwise", max_pointwise},
            {"min_pointwise", min_pointwise},
            {"lhs", lhs},
            {"f_norm", f_norm}};
}

FioReport fio_compare(const AverageSpec& spec, const SpectralField& f, int N, int t_nodes, int quadrature_n) {
    const int D = spec.d + 1;
    if (f.dim != D) throw DimensionMismatch("field must live on R^{d+1}");
    if (t_nodes < 1) throw Error("t_nodes must be positive");
    const auto& g = gauss_legendre(t_nodes);
    FioReport rep;
    rep.N = N;
    rep.modes = static_cast<int>(f.size());
    std::vector<double> tw(t_nodes);
    for (int j = 0; j < t_nodes; ++j) {
        rep.t_nodes.push_back(1.0 + 0.5 * g.x[j]);
        tw[j] = 0.5 * g.w[j] * std::pow(chi_time(rep.t_nodes[j]), 4);
    }
    std::int64_t npts = 1;
    for (int i = 0; i < spec.m; ++i) npts *= t_nodes;

    // Multipliers I_i(t_j, k) per form, node and mode.
    const size_t M = f.size();
    std::vector<cplx> I(static_cast<size_t>(spec.m) * t_nodes * M);
    std::vector<double> fio_phase(static_cast<size_t>(spec.m) * M);
    for (size_t q = 0; q < M; ++q) {
        Vec xi(D);
        for (int a = 0; a < D; ++a) xi[a] = f.key(q)[a];
        if (xi[spec.d] == 0) throw NearConeOfDegeneracy("fio_compare needs xi_{d+1} != 0 on the support");
        for (int i = 0; i < spec.m; ++i) {
            const Vec xp = xi.head(spec.d);
            fio_phase[i * M + q] = xp.dot(spec.A_inv[i] * xp) / (4.0 * xi[spec.d]);
        }
    }
    parallel_for(static_cast<std::int64_t>(spec.m) * t_nodes * static_cast<std::int64_t>(M), [&](std::int64_t idx) {
        const size_t q = static_cast<size_t>(idx) % M;
        const std::int64_t rest = idx / static_cast<std::int64_t>(M);
        const int j = static_cast<int>(rest % t_nodes);
        const int i = static_cast<int>(rest / t_nodes);
        Vec xi(D);
        for (int a = 0; a < D; ++a) xi[a] = f.key(q)[a];
        I[static_cast<size_t>(idx)] = oscillatory_integral(spec, i, rep.t_nodes[j], xi, quadrature_n);
    });

    std::vector<double> num(npts), den(npts), wt(npts);
    parallel_for(npts, [&](std::int64_t p) {
        SpectralField a = f, b = f;
        double w = 1;
        std::int64_t rem = p;
        std::vector<int> jj(spec.m);
        for (int i = spec.m - 1; i >= 0; --i) {
            jj[i] = static_cast<int>(rem % t_nodes);
            rem /= t_nodes;
            w *= tw[jj[i]];
        }
        for (size_t q = 0; q < M; ++q) {
            cplx ma = 1;
            double ph = 0;
            for (int i = 0; i < spec.m; ++i) {
                ma *= I[(static_cast<size_t>(i) * t_nodes + jj[i]) * M + q];
                ph += rep.t_nodes[jj[i]] * fio_phase[i * M + q];
            }
            a.coeffs[q] *= ma;
            b.coeffs[q] *= std::exp(cplx(0, ph));
        }
        num[p] = l4_fourth(a);
        den[p] = l4_fourth(b);
        wt[p] = w;
    });
    const double scale = std::pow(static_cast<double>(N), 0.5 * spec.m * spec.d);
    double sn = 0, sd = 0;
    rep.max_pointwise = 0;
    rep.min_pointwise = 1e300;
    for (std::int64_t p = 0; p < npts; ++p) {
        sn += wt[p] * num[p];
        sd += wt[p] * den[p];
        const double r = std::pow(num[p] / den[p], 0.25) * scale;
        rep.ratios.push_back(r);
        rep.max_pointwise = std::max(rep.max_pointwise, r);
        rep.min_pointwise = std::min(rep.min_pointwise, r);
    }
    rep.ratio = std::pow(sn / sd, 0.25) * scale;
    rep.lhs = std::pow(sn, 0.25);
    rep.f_norm = std::pow(l4_fourth(f), 0.25);
    return rep;
}

double average_l4_ratio(const AverageSpec& spec, const SpectralField& f, const Vec& t, int quadrature_n) {
    const int D = spec.d + 1;
    if (f.dim != D) throw DimensionMismatch("field must live on R^{d+1}");
    SpectralField a = f;
    parallel_for(static_cast<std::int64_t>(f.size()), [&](std::int64_t q) {
        Vec xi(D);
        for (int k = 0; k < D; ++k) xi[k] = f.key(q)[k];
        a.coeffs[q] *= average_multiplier(spec, t, xi, quadrature_n);
    });
    return std::pow(l4_fourth(a) / l4_fourth(f), 0.25);
}

}  // namespace qc
