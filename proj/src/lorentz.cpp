#include "quadcone/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "quadcone/cover.hpp"
#include "quadcone/parallel.hpp"

namespace qc {

LorentzMap::LorentzMap(const QuadraticSystem& sys_, Vec xi_tau_, double s_) : sys(&sys_), xi_tau(std::move(xi_tau_)), s(s_) {
    if (!sys->pure()) throw Error("Lorentz map needs a pure quadratic system (b = 0, c = 0)");
    if (!(s > 0 && s <= 1)) throw Error("Lorentz scale must lie in (0, 1]");
    if (xi_tau.size() != sys->d) throw DimensionMismatch("xi_tau has the wrong dimension");
}

Vec LorentzMap::apply(const Vec& p) const {
    const int d = sys->d, l = sys->l;
    if (p.size() != d + l + 1) throw DimensionMismatch("Lorentz map acts on R^{n+1}");
    const double h = p[d + l];
    Vec out(d + l + 1);
    const Vec eta = (p.head(d) - h * xi_tau) / s;
    out.head(d) = eta;
    for (int i = 0; i < l; ++i) {
        const Vec Ax = sys->A_sym[i] * xi_tau;
        out[d + i] = p[d + i] / (s * s) - eta.dot(Ax) / s - 0.5 * h * xi_tau.dot(Ax) / (s * s);
    }
    out[d + l] = h;
    return out;
}

Mat LorentzMap::matrix() const {
    const int D = sys->n() + 1;
    Mat M(D, D);
    for (int k = 0; k < D; ++k) M.col(k) = apply(Vec::Unit(D, k));
    return M;
}

double LorentzMap::jacobian_det() const { return std::pow(s, -(sys->d + 2 * sys->l)); }

LorentzMap compose(const LorentzMap& first, const LorentzMap& second) {
    return LorentzMap(*first.sys, first.xi_tau + first.s * second.xi_tau, first.s * second.s);
}

Vec cone_point(const QuadraticSystem& sys, const Vec& xi, double h) {
    Vec p(sys.n() + 1);
    p.head(sys.d) = xi;
    for (int i = 0; i < sys.l; ++i) p[sys.d + i] = 0.5 * xi.dot(sys.A_sym[i] * xi) / h;
    p[sys.n()] = h;
    return p;
}

namespace {

// Columns: derivatives of (xi, h) -> cone_point.
Mat cone_jacobian(const QuadraticSystem& sys, const Vec& xi, double h) {
    const int d = sys.d, l = sys.l;
    Mat J = Mat::Zero(d + l + 1, d + 1);
    J.topLeftCorner(d, d).setIdentity();
    for (int i = 0; i < l; ++i) {
        const Vec g = sys.A_sym[i] * xi;
        J.block(d + i, 0, 1, d) = g.transpose() / h;
        J(d + i, d) = -0.5 * xi.dot(g) / (h * h);
    }
    J(d + l, d) = 1.0;
    return J;
}

}  // namespace

Mat cone_normal_basis(const QuadraticSystem& sys, const Vec& xi, double h) {
    const Mat J = cone_jacobian(sys, xi, h);
    const int D = static_cast<int>(J.rows());
    Eigen::HouseholderQR<Mat> qr(J);
    Mat Q = qr.householderQ() * Mat::Identity(D, D);
    return Q.rightCols(sys.l);
}

ConeDistance distance_to_cone(const QuadraticSystem& sys, const Vec& p, const Vec& seed_xi, double seed_h) {
    const int d = sys.d;
    auto run = [&](Vec x, double h, ConeDistance& out) {
        double lambda = 1e-6;
        double f = (p - cone_point(sys, x, h)).squaredNorm();
        int it = 0;
        for (; it < 200; ++it) {
            const Vec res = p - cone_point(sys, x, h);
            const Mat J = cone_jacobian(sys, x, h);
            const Mat JtJ = J.transpose() * J;
            const Vec g = J.transpose() * res;
            bool accepted = false;
            for (int tries = 0; tries < 30; ++tries) {
                Mat Hm = JtJ;
                Hm.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
                const Vec step = Hm.ldlt().solve(g);
                Vec xn = x + step.head(d);
                const double hn = h + step[d];
                if (std::abs(hn) < 1e-6) {
                    lambda *= 10;
                    continue;
                }
                const double fn = (p - cone_point(sys, xn, hn)).squaredNorm();
                if (fn <= f) {
                    const double rel = step.norm();
                    x = xn;
                    h = hn;
                    const double df = f - fn;
                    f = fn;
                    lambda = std::max(lambda / 10, 1e-12);
                    accepted = true;
                    if (rel < 1e-15 || df <= 1e-30 + 1e-16 * f) it = 1000;
                    break;
                }
                lambda *= 10;
            }
            if (!accepted) break;
        }
        out.distance = std::sqrt(f);
        out.xi = x;
        out.h = h;
        out.iterations = std::min(it, 200);
    };
    ConeDistance best;
    run(seed_xi, seed_h, best);
    // Stationarity check: the residual must be normal to the cone.
    const Vec res = p - cone_point(sys, best.xi, best.h);
    const Mat J = cone_jacobian(sys, best.xi, best.h);
    const double tang = (J.transpose() * res).norm() / (J.norm() * std::max(res.norm(), 1e-300));
    if (tang > 1e-6) {
        best.fallback = true;
        double bd = 1e300;
        Vec bx = seed_xi;
        double bh = seed_h;
        const int m = d == 1 ? 201 : (d == 2 ? 31 : 11);
        const double rad = 0.1;
        std::vector<int> idx(d, 0);
        for (;;) {
            Vec x = seed_xi;
            for (int i = 0; i < d; ++i) x[i] += rad * (2.0 * idx[i] / (m - 1) - 1.0);
            for (int kh = -5; kh <= 5; ++kh) {
                const double h = seed_h * (1 + 0.02 * kh);
                const double dd = (p - cone_point(sys, x, h)).squaredNorm();
                if (dd < bd) {
                    bd = dd;
                    bx = x;
                    bh = h;
                }
            }
            int i = 0;
            while (i < d && ++idx[i] == m) idx[i++] = 0;
            if (i == d) break;
        }
        ConeDistance again;
        run(bx, bh, again);
        if (again.distance < best.distance) {
            again.fallback = true;
            best = again;
        }
    }
    return best;
}

nlohmann::json RescalingReport::to_json() const {
    return {{"s", s},
            {"r", r},
            {"samples", samples},
            {"min_factor", min_factor},
            {"max_factor", max_factor},
            {"max_on_cone_error", max_on_cone_error},
            {"fallbacks", fallbacks},
            {"log_jacobian", log_jacobian}};
}

namespace {

// xi = h (xi_tau + s w) with |w| <= 1 and |xi| <= 1.
void sample_sector(const LorentzMap& map, std::mt19937_64& rng, Vec& xi, double& h) {
    const int d = map.sys->d;
    std::uniform_real_distribution<double> u(-1, 1), uh(0.5, 1.0);
    for (;;) {
        Vec w(d);
        do {
            for (int i = 0; i < d; ++i) w[i] = u(rng);
        } while (w.squaredNorm() > 1);
        h = uh(rng);
        xi = h * (map.xi_tau + map.s * w);
        if (xi.squaredNorm() <= 1) return;
    }
}

}  // namespace

double on_cone_error(const LorentzMap& map, std::int64_t samples, std::uint64_t seed) {
    const std::int64_t block = 1024;
    const std::int64_t nb = (samples + block - 1) / block;
    std::vector<double> worst(nb, 0.0);
    const int d = map.sys->d, l = map.sys->l;
    parallel_blocks(samples, block, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
        double w = 0;
        for (std::int64_t i = lo; i < hi; ++i) {
            Vec xi;
            double h;
            sample_sector(map, rng, xi, h);
            const Vec img = map.apply(cone_point(*map.sys, xi, h));
            const Vec eta = img.head(d);
            for (int k = 0; k < l; ++k) {
                const double target = 0.5 * eta.dot(map.sys->A_sym[k] * eta) / h;
                w = std::max(w, std::abs(img[d + k] - target) / std::max(1.0, std::abs(target)));
            }
            w = std::max(w, std::abs(img[d + l] - h));
        }
        worst[b] = w;
    });
    return *std::max_element(worst.begin(), worst.end());
}

RescalingReport neighborhood_rescaling_check(const LorentzMap& map, double r, std::int64_t samples, std::uint64_t seed) {
    if (map.s < 1.0 / r - 1e-15) throw Error("rescaling check needs s >= 1/r");
    const QuadraticSystem& sys = *map.sys;
    const int d = sys.d, l = sys.l;
    const double eps = 1.0 / (r * r);
    RescalingReport rep;
    rep.s = map.s;
    rep.r = r;
    rep.samples = samples;
    rep.log_jacobian = std::log(map.jacobian_det());
    const std::int64_t block = 256;
    const std::int64_t nb = (samples + block - 1) / block;
    std::vector<double> lo_f(nb, 1e300), hi_f(nb, 0.0), on_err(nb, 0.0);
    std::vector<std::int64_t> fb(nb, 0);
    parallel_blocks(samples, block, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
        std::normal_distribution<double> g(0, 1);
        for (std::int64_t i = lo; i < hi; ++i) {
            Vec xi;
            double h;
            sample_sector(map, rng, xi, h);
            const Vec P = cone_point(sys, xi, h);
            const Mat N = cone_normal_basis(sys, xi, h);
            Vec c(l);
            for (int k = 0; k < l; ++k) c[k] = g(rng);
            const Vec nu = N * c.normalized();
            const Vec img = map.apply(P + eps * nu);
            const Vec img0 = map.apply(P);
            const Vec eta = img0.head(d);
            for (int k = 0; k < l; ++k)
                on_err[b] = std::max(on_err[b], std::abs(img0[d + k] - 0.5 * eta.dot(sys.A_sym[k] * eta) / h));
            const ConeDistance cd = distance_to_cone(sys, img, img.head(d), img[d + l]);
            const double factor = cd.distance * r * r * map.s * map.s;
            lo_f[b] = std::min(lo_f[b], factor);
            hi_f[b] = std::max(hi_f[b], factor);
            fb[b] += cd.fallback ? 1 : 0;
        }
    });
    rep.min_factor = *std::min_element(lo_f.begin(), lo_f.end());
    rep.max_factor = *std::max_element(hi_f.begin(), hi_f.end());
    rep.max_on_cone_error = *std::max_element(on_err.begin(), on_err.end());
    for (auto f : fb) rep.fallbacks += f;
    return rep;
}

nlohmann::json PlankImageFit::to_json() const {
    return {{"eta_image", to_std(eta_image)},
            {"height_ratio", height_ratio},
            {"tangential_ratio", tangential_ratio},
            {"normal_ratio", normal_ratio}};
}

PlankImageFit plank_image_fit(const LorentzMap& map, const Vec& eta, double sigma, double r, double E) {
    const QuadraticSystem& sys = *map.sys;
    const int d = sys.d, l = sys.l, D = sys.n() + 1;
    const Box src = make_plank(sys, eta, sigma, r, E);
    PlankImageFit fit;
    fit.eta_image = (eta - map.xi_tau) / map.s;
    const double r2 = r * map.s;
    const Box dst = make_plank(sys, fit.eta_image, sigma, r2, E);
    for (int mask = 0; mask < (1 << D); ++mask) {
        Vec u(D);
        for (int k = 0; k < D; ++k) u[k] = ((mask >> k) & 1 ? 1.0 : -1.0) * src.half[k];
        const Vec c = dst.coords(map.apply(src.point(u)));
        fit.height_ratio = std::max(fit.height_ratio, std::abs(c[0]) / dst.half[0]);
        for (int k = 0; k < d; ++k) fit.tangential_ratio = std::max(fit.tangential_ratio, std::abs(c[1 + k]) / dst.half[1 + k]);
        for (int k = 0; k < l; ++k) fit.normal_ratio = std::max(fit.normal_ratio, std::abs(c[1 + d + k]) / dst.half[1 + d + k]);
    }
    return fit;
}

}  // namespace qc
