#include "quadcone/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>

#include "quadcone/parallel.hpp"

namespace qc {

namespace {

void check_dim(const Vec& v, int d, const char* what) {
    if (v.size() != d) {
        std::ostringstream os;
        os << what << ": expected dimension " << d << ", got " << v.size();
        throw DimensionMismatch(os.str());
    }
}

}  // namespace

double QuadraticSystem::q(int k, const Vec& xi) const {
    check_dim(xi, d, "q");
    return 0.5 * xi.dot(A_sym[k] * xi) + b[k].dot(xi) + c[k];
}

Vec QuadraticSystem::Q(const Vec& xi) const {
    Vec out(l);
    for (int k = 0; k < l; ++k) out[k] = q(k, xi);
    return out;
}

Vec QuadraticSystem::grad(int k, const Vec& xi) const {
    check_dim(xi, d, "grad");
    return A_sym[k] * xi + b[k];
}

Mat QuadraticSystem::jacobian(const Vec& xi) const {
    Mat J(l, d);
    for (int k = 0; k < l; ++k) J.row(k) = grad(k, xi).transpose();
    return J;
}

bool QuadraticSystem::pure() const {
    for (int k = 0; k < l; ++k)
        if (b[k].norm() != 0.0 || c[k] != 0.0) return false;
    return true;
}

QuadraticSystem make_system(std::vector<Mat> A, std::vector<Vec> b, std::vector<double> c,
                            bool generator_only, std::string name) {
    if (A.empty()) throw DimensionMismatch("quadratic system needs at least one form");
    QuadraticSystem s;
    s.l = static_cast<int>(A.size());
    s.d = static_cast<int>(A[0].rows());
    if (s.d < 1) throw DimensionMismatch("base dimension must be positive");
    for (const auto& M : A)
        if (M.rows() != s.d || M.cols() != s.d) throw DimensionMismatch("generator is not d x d");
    if (b.empty()) b.assign(s.l, Vec::Zero(s.d));
    if (c.empty()) c.assign(s.l, 0.0);
    if (static_cast<int>(b.size()) != s.l || static_cast<int>(c.size()) != s.l)
        throw DimensionMismatch("b and c must have one entry per form");
    for (const auto& v : b) check_dim(v, s.d, "b_k");
    for (const auto& M : A) {
        const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
        if (!generator_only && asym > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
            throw DimensionMismatch("generator is not symmetric; mark the system generator_only");
        s.A_sym.push_back(0.5 * (M + M.transpose()));
    }
    s.A = std::move(A);
    s.b = std::move(b);
    s.c = std::move(c);
    s.generator_only = generator_only;
    s.name = std::move(name);
    return s;
}

QuadraticSystem random_symmetric(int d, int l, std::uint64_t seed) {
    auto rng = make_rng(seed, 0x51a7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Mat> A;
    for (int k = 0; k < l; ++k) {
        Mat M(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) M(i, j) = g(rng);
        A.push_back(0.5 * (M + M.transpose()));
    }
    std::ostringstream nm;
    nm << "random_sym_d" << d << "_l" << l << "(" << seed << ")";
    return make_system(std::move(A), {}, {}, false, nm.str());
}

QuadraticSystem catalog(const std::string& name) {
    if (name == "parabola") {
        Mat A(1, 1);
        A << 2.0;
        return make_system({A}, {}, {}, false, name);
    }
    if (name == "complex_parabola") {
        Mat A1(2, 2), A2(2, 2);
        A1 << 2, 0, 0, -2;
        A2 << 0, 2, 2, 0;
        return make_system({A1, A2}, {}, {}, false, name);
    }
    if (name == "complex_parabola_rotated") {
        Mat B1 = Mat::Identity(2, 2), B2(2, 2);
        B2 << 0, 1, -1, 0;
        return make_system({B1, B2}, {}, {}, true, name);
    }
    if (name == "reflection_inversion_d3") {
        std::vector<Mat> A{Mat::Identity(3, 3)};
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                Mat S = Mat::Identity(3, 3);
                S(i, i) = S(j, j) = 0;
                S(i, j) = S(j, i) = 1;
                A.push_back(S);
            }
        for (int i = 0; i < 3; ++i) {
            Mat F = Mat::Identity(3, 3);
            F(i, i) = -1;
            A.push_back(F);
        }
        return make_system(std::move(A), {}, {}, false, name);
    }
    static const std::regex rnd(R"(random_sym_d3_l3\((\d+)\))");
    std::smatch m;
    if (std::regex_match(name, m, rnd)) return random_symmetric(3, 3, std::stoull(m[1].str()));
    throw Error("unknown catalog system: " + name);
}

std::vector<std::string> catalog_names() {
    return {"parabola", "complex_parabola", "complex_parabola_rotated", "reflection_inversion_d3",
            "random_sym_d3_l3(1)"};
}

nlohmann::json system_to_json(const QuadraticSystem& sys) {
    nlohmann::json j;
    j["d"] = sys.d;
    j["l"] = sys.l;
    j["A"] = nlohmann::json::array();
    for (const auto& M : sys.A) {
        std::vector<double> flat;
        for (int r = 0; r < sys.d; ++r)
            for (int c = 0; c < sys.d; ++c) flat.push_back(M(r, c));
        j["A"].push_back(flat);
    }
    j["b"] = nlohmann::json::array();
    for (const auto& v : sys.b) j["b"].push_back(to_std(v));
    j["c"] = sys.c;
    if (sys.generator_only) j["generator_only"] = true;
    if (!sys.name.empty()) j["name"] = sys.name;
    return j;
}

QuadraticSystem system_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> allowed{"d", "l", "A", "b", "c", "generator_only", "name"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("system: unknown key '" + it.key() + "'");
    const int d = j.at("d").get<int>();
    const int l = j.at("l").get<int>();
    if (d < 1 || l < 1) throw DimensionMismatch("d and l must be positive");
    const auto& JA = j.at("A");
    if (static_cast<int>(JA.size()) != l) throw DimensionMismatch("A must list l matrices");
    std::vector<Mat> A;
    for (const auto& m : JA) {
        Mat M(d, d);
        if (m.size() == static_cast<size_t>(d) && m[0].is_array()) {
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) M(r, c) = m.at(r).at(c).get<double>();
        } else {
            if (m.size() != static_cast<size_t>(d * d)) throw DimensionMismatch("matrix size != d*d");
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) M(r, c) = m.at(r * d + c).get<double>();
        }
        A.push_back(M);
    }
    std::vector<Vec> b;
    if (j.contains("b"))
        for (const auto& v : j["b"]) b.push_back(from_std(v.get<std::vector<double>>()));
    std::vector<double> c;
    if (j.contains("c")) c = j["c"].get<std::vector<double>>();
    return make_system(std::move(A), std::move(b), std::move(c), j.value("generator_only", false),
                       j.value("name", std::string{}));
}

QuadraticSystem resolve_system(const std::string& spec) {
    const auto first = spec.find_first_not_of(" \t\n");
    if (first != std::string::npos && spec[first] == '{')
        return system_from_json(nlohmann::json::parse(spec));
    return catalog(spec);
}

Mat Frame::basis() const {
    const int D = ambient();
    const int cols = static_cast<int>(tangents.size() + normals.size()) + (conical ? 1 : 0);
    Mat M(D, cols);
    int k = 0;
    if (conical) M.col(k++) = center;
    for (const auto& t : tangents) M.col(k++) = t;
    for (const auto& v : normals) M.col(k++) = v;
    return M;
}

Frame frame_at(const QuadraticSystem& sys, const Vec& eta, bool conical) {
    check_dim(eta, sys.d, "frame_at");
    const int d = sys.d, l = sys.l, n = sys.n();
    const int D = conical ? n + 1 : n;
    Frame f;
    f.base = eta;
    f.conical = conical;
    const Mat J = sys.jacobian(eta);
    f.center = Vec::Zero(D);
    f.center.head(d) = eta;
    f.center.segment(d, l) = sys.Q(eta);
    if (conical) f.center[n] = 1.0;
    for (int i = 0; i < d; ++i) {
        Vec t = Vec::Zero(D);
        t[i] = 1.0;
        t.segment(d, l) = J.col(i);
        f.tangents.push_back(t);
    }
    for (int j = 0; j < l; ++j) {
        Vec v = Vec::Zero(D);
        v.head(d) = -J.row(j).transpose();
        v[d + j] = 1.0;
        f.normals.push_back(v);
    }
    return f;
}

std::vector<std::vector<int>> index_subsets(int l, int d) {
    std::vector<std::vector<int>> out;
    if (d > l || d < 1) return out;
    std::vector<int> idx(d);
    for (int i = 0; i < d; ++i) idx[i] = i;
    for (;;) {
        out.push_back(idx);
        int k = d - 1;
        while (k >= 0 && idx[k] == l - d + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

double subset_det(const QuadraticSystem& sys, const std::vector<int>& subset, const Vec& nu) {
    Mat M(sys.d, sys.d);
    for (int k = 0; k < sys.d; ++k) M.col(k) = sys.A[subset[k]] * nu;
    if (sys.d == 1) return M(0, 0);
    if (sys.d == 2) return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    return M.determinant();
}

double best_subset_det(const QuadraticSystem& sys, const Vec& nu, std::vector<int>* arg) {
    const auto subsets = index_subsets(sys.l, sys.d);
    double best = -1;
    for (const auto& s : subsets) {
        const double v = std::abs(subset_det(sys, s, nu));
        if (v > best) {
            best = v;
            if (arg) *arg = s;
        }
    }
    return best;
}

std::vector<Vec> sphere_grid(int dim, int resolution) {
    std::vector<Vec> pts;
    if (dim == 1) {
        pts.push_back(Vec::Constant(1, 1.0));
        pts.push_back(Vec::Constant(1, -1.0));
        return pts;
    }
    const double pi = std::numbers::pi;
    if (dim == 2) {
        for (int k = 0; k < resolution; ++k) {
            const double a = 2 * pi * k / resolution;
            Vec v(2);
            v << std::cos(a), std::sin(a);
            pts.push_back(v);
        }
        return pts;
    }
    if (dim == 3) {
        const double golden = pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < resolution; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / resolution;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * k;
            Vec v(3);
            v << rho * std::cos(phi), rho * std::sin(phi), z;
            pts.push_back(v);
        }
        return pts;
    }
    // Kronecker sequence pushed through Box-Muller, then normalised.
    const int m = dim + (dim % 2);
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (m + 1));
    std::vector<double> alpha(m);
    for (int i = 0; i < m; ++i) alpha[i] = std::fmod(std::pow(1.0 / phi, i + 1), 1.0);
    for (int k = 0; k < resolution; ++k) {
        Vec v(dim);
        for (int i = 0; i < m; i += 2) {
            const double u1 = std::fmod(0.5 + alpha[i] * (k + 1), 1.0);
            const double u2 = std::fmod(0.5 + alpha[i + 1] * (k + 1), 1.0);
            const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
            v[i] = r * std::cos(2 * pi * u2);
            if (i + 1 < dim) v[i + 1] = r * std::sin(2 * pi * u2);
        }
        pts.push_back(v / v.norm());
    }
    return pts;
}

double sphere_grid_spacing(int dim, int resolution) {
    const double pi = std::numbers::pi;
    if (dim == 1) return 0.0;
    if (dim == 2) return 2 * pi / resolution;
    const double area = 2 * std::pow(pi, dim / 2.0) / std::tgamma(dim / 2.0);
    return std::pow(area / resolution, 1.0 / (dim - 1));
}

namespace {

// Orthonormal basis of the complement of nu.
std::vector<Vec> tangent_basis(const Vec& nu) {
    const int d = static_cast<int>(nu.size());
    Mat M(d, d);
    M.col(0) = nu;
    for (int i = 1; i < d; ++i) M.col(i) = Vec::Unit(d, i - 1);
    // pick the coordinate axes least aligned with nu
    int skip = 0;
    nu.cwiseAbs().maxCoeff(&skip);
    int c = 1;
    for (int i = 0; i < d && c < d; ++i)
        if (i != skip) M.col(c++) = Vec::Unit(d, i);
    Eigen::HouseholderQR<Mat> qr(M);
    Mat Qm = qr.householderQ() * Mat::Identity(d, d);
    std::vector<Vec> out;
    for (int i = 1; i < d; ++i) out.push_back(Qm.col(i));
    return out;
}

}  // namespace

TransversalityCertificate certify_transversality(const QuadraticSystem& sys, int resolution,
                                                 int refine_steps) {
    if (sys.l < sys.d)
        throw StructurallyDegenerate("l < d: no d-subset of the generators exists");
    if (resolution < 2) throw BadResolution("sphere resolution must be at least 2");
    const int d = sys.d;
    TransversalityCertificate cert;
    cert.resolution = resolution;
    cert.refine_steps = refine_steps;
    const auto grid = sphere_grid(d, resolution);
    cert.samples = static_cast<int>(grid.size());
    cert.grid_spacing = sphere_grid_spacing(d, resolution);
    cert.covering_radius = d == 2 ? cert.grid_spacing / 2 : cert.grid_spacing;

    std::vector<double> vals(grid.size());
    cert.subset_per_sample.assign(grid.size(), {});
    parallel_for(static_cast<std::int64_t>(grid.size()), [&](std::int64_t i) {
        vals[i] = best_subset_det(sys, grid[i], &cert.subset_per_sample[i]);
    });
    size_t arg = 0;
    for (size_t i = 1; i < vals.size(); ++i)
        if (vals[i] < vals[arg]) arg = i;
    cert.grid_min = vals[arg];

    double lip = 0;
    for (const auto& s : index_subsets(sys.l, d)) {
        double p = d;
        for (int k : s) p *= Eigen::JacobiSVD<Mat>(sys.A[k]).singularValues()[0];
        lip = std::max(lip, p);
    }
    cert.lipschitz = lip;
    cert.certified_floor = std::max(0.0, cert.grid_min - lip * cert.covering_radius);

    // Pattern search on the sphere from the smallest grid samples. The tangent
    // pair is turned by the golden angle each round so ridges of the max do not
    // trap the search along a fixed axis.
    double observed = 0;
    auto refine = [&](size_t from, Vec& nu, double& best, std::vector<int>& best_subset) {
        nu = grid[from];
        best = vals[from];
        best_subset = cert.subset_per_sample[from];
        if (d < 2) return;
        double rho = std::max(cert.grid_spacing, 1e-3);
        for (int step = 0; step < refine_steps; ++step) {
            auto T = tangent_basis(nu);
            const int m = static_cast<int>(T.size());
            if (m >= 2) {
                const double a = 2.399963229728653 * step;
                const Vec t0 = T[0], t1 = T[1];
                T[0] = std::cos(a) * t0 + std::sin(a) * t1;
                T[1] = -std::sin(a) * t0 + std::cos(a) * t1;
            }
            int combos = 1;
            for (int i = 0; i < m; ++i) combos *= 3;
            bool improved = false;
            Vec cand_best = nu;
            double val_best = best;
            std::vector<int> sub_best = best_subset;
            for (int code = 0; code < combos; ++code) {
                int cc = code;
                Vec dir = Vec::Zero(d);
                for (int i = 0; i < m; ++i) {
                    dir += static_cast<double>(cc % 3 - 1) * T[i];
                    cc /= 3;
                }
                if (dir.norm() == 0) continue;
                Vec cand = nu + rho * dir / dir.norm();
                cand /= cand.norm();
                std::vector<int> sub;
                const double v = best_subset_det(sys, cand, &sub);
                observed = std::max(observed, std::abs(v - best) / (cand - nu).norm());
                if (v < val_best) {
                    val_best = v;
                    cand_best = cand;
                    sub_best = sub;
                    improved = true;
                }
            }
            if (improved) {
                nu = cand_best;
                best = val_best;
                best_subset = sub_best;
            } else {
                rho *= 0.5;
            }
        }
    };
    std::vector<size_t> order(vals.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    const size_t starts = std::min<size_t>(16, order.size());
    std::partial_sort(order.begin(), order.begin() + starts, order.end(),
                      [&](size_t a, size_t b) { return vals[a] < vals[b] || (vals[a] == vals[b] && a < b); });
    Vec nu;
    double best = 0;
    std::vector<int> best_subset;
    for (size_t k = 0; k < starts; ++k) {
        Vec nu_k;
        double best_k;
        std::vector<int> sub_k;
        refine(order[k], nu_k, best_k, sub_k);
        if (k == 0 || best_k < best) {
            nu = nu_k;
            best = best_k;
            best_subset = sub_k;
        }
    }
    cert.c_min = best;
    cert.witness_nu = nu;
    cert.witness_subset = best_subset;
    cert.observed_gradient = observed;
    return cert;
}

double tangent_wedge_volume(const QuadraticSystem& sys, const Vec& xi1, const Vec& xi2) {
    const Frame f1 = frame_at(sys, xi1, false);
    const Frame f2 = frame_at(sys, xi2, false);
    const int d = sys.d;
    Mat T(sys.n(), 2 * d);
    for (int i = 0; i < d; ++i) {
        T.col(i) = f1.tangents[i];
        T.col(d + i) = f2.tangents[i];
    }
    if (2 * d > sys.n()) return 0.0;
    const double g = (T.transpose() * T).determinant();
    return std::sqrt(std::max(0.0, g));
}

nlohmann::json certificate_to_json(const TransversalityCertificate& c, bool with_subsets) {
    nlohmann::json j;
    j["c_min"] = c.c_min;
    j["witness_nu"] = to_std(c.witness_nu);
    j["witness_subset"] = c.witness_subset;
    j["resolution"] = c.resolution;
    j["refine_steps"] = c.refine_steps;
    j["samples"] = c.samples;
    j["grid_min"] = c.grid_min;
    j["grid_spacing"] = c.grid_spacing;
    j["covering_radius"] = c.covering_radius;
    j["lipschitz_bound"] = c.lipschitz;
    j["observed_gradient"] = c.observed_gradient;
    j["certified_floor"] = c.certified_floor;
    if (with_subsets) j["subset_per_sample"] = c.subset_per_sample;
    return j;
}

}  // namespace qc
