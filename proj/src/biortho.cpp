#include "quadcone/biortho.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "quadcone/parallel.hpp"

namespace qc {

Quadruple Quadruple::from_three(const Vec& xi1, const Vec& xi2, const Vec& xi3) {
    return {xi1, xi2, xi3, xi1 + xi3 - xi2};
}

Quadruple Quadruple::from_differences(const Vec& xi1, const Vec& u, const Vec& v) {
    return {xi1, xi1 - u, xi1 - u - v, xi1 - v};
}

DefectPair dmvt_defect(const QuadraticSystem& sys, const Quadruple& quad, int m) {
    DefectPair p;
    const double a = sys.q(m, quad.xi1), b = sys.q(m, quad.xi3), c = sys.q(m, quad.xi2), d = sys.q(m, quad.xi4);
    p.direct = a + b - c - d;
    p.bilinear = quad.xi12().dot(sys.A_sym[m] * quad.xi14());
    const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (std::abs(p.direct - p.bilinear) > 1e-12 * scale) {
        std::ostringstream os;
        os.precision(17);
        os << "double mean value identity broken: direct " << p.direct << " vs bilinear " << p.bilinear;
        throw Error(os.str());
    }
    return p;
}

nlohmann::json quadruple_to_json(const Quadruple& q) {
    return {{"xi1", to_std(q.xi1)}, {"xi2", to_std(q.xi2)}, {"xi3", to_std(q.xi3)}, {"xi4", to_std(q.xi4)}};
}

nlohmann::json BiorthoReport::to_json() const {
    nlohmann::json j{{"delta", delta},
                     {"spacing", spacing},
                     {"tolerance_multiplier", tolerance},
                     {"worst_ratio", worst_ratio},
                     {"count_admissible", count_admissible},
                     {"classes_admissible", classes_admissible},
                     {"candidates", candidates},
                     {"lattice_size", lattice_size},
                     {"max_normalized_defect", max_normalized_defect},
                     {"certificate_floor", certificate_floor}};
    if (witness.xi1.size() > 0) j["witness"] = quadruple_to_json(witness);
    return j;
}

namespace {

using IVec = Eigen::VectorXi;

// Calls f(k) for every integer vector with lo <= k <= hi componentwise.
template <class F>
void for_box(const IVec& lo, const IVec& hi, F&& f) {
    const int d = static_cast<int>(lo.size());
    for (int i = 0; i < d; ++i)
        if (lo[i] > hi[i]) return;
    IVec k = lo;
    for (;;) {
        f(k);
        int i = d - 1;
        while (i >= 0 && k[i] == hi[i]) {
            k[i] = lo[i];
            --i;
        }
        if (i < 0) return;
        ++k[i];
    }
}

struct Geometry {
    int d;
    double h;
    int R;        // max |k_i| of a lattice point in the ball
    double lim2;  // squared radius in lattice units (with slack)
    bool in_ball(const IVec& k) const { return static_cast<double>(k.squaredNorm()) <= lim2; }
};

// Number of lattice xi1 with xi1, xi1-u, xi1-v, xi1-u-v all in the ball; the
// first realising point is stored in first.
std::int64_t realisations(const Geometry& g, const IVec& u, const IVec& v, IVec* first) {
    IVec lo(g.d), hi(g.d);
    for (int i = 0; i < g.d; ++i) {
        lo[i] = std::max({-g.R, u[i] - g.R, v[i] - g.R, u[i] + v[i] - g.R});
        hi[i] = std::min({g.R, u[i] + g.R, v[i] + g.R, u[i] + v[i] + g.R});
    }
    std::int64_t n = 0;
    for_box(lo, hi, [&](const IVec& x) {
        if (g.in_ball(x) && g.in_ball(x - u) && g.in_ball(x - v) && g.in_ball(x - u - v)) {
            if (n == 0 && first) *first = x;
            ++n;
        }
    });
    return n;
}

struct BlockResult {
    std::int64_t count = 0, classes = 0, candidates = 0;
    double best = -1;
    IVec bu, bv, bx;
    double max_norm_defect = 0;
};

}  // namespace

BiorthoReport certify_biorthogonality(const QuadraticSystem& sys, double delta, const BiorthoOptions& opt) {
    if (!(delta > 0 && delta <= 1.0 / 16 + 1e-15)) throw Error("delta must lie in (0, 1/16]");
    const int d = sys.d, l = sys.l;
    BiorthoReport rep;
    rep.delta = delta;
    rep.spacing = opt.spacing > 0 ? opt.spacing : std::sqrt(delta);
    rep.tolerance = opt.tolerance;

    try {
        rep.certificate_floor = certify_transversality(sys, opt.certificate_resolution).certified_floor;
    } catch (const StructurallyDegenerate&) {
        rep.certificate_floor = 0;
    }
    if (rep.certificate_floor <= 0 && !opt.force)
        throw NotTransversal("transversality floor is not positive at the certificate resolution; use force");

    Geometry g{d, rep.spacing, static_cast<int>(std::floor(1.0 / rep.spacing + 1e-9)),
               (1.0 + 1e-12) / (rep.spacing * rep.spacing)};
    const double h2 = rep.spacing * rep.spacing;
    const double thresh = opt.tolerance * delta * (1 + 1e-12);  // |h^2 <ku, A kv>| <= tol delta
    const auto subsets = index_subsets(l, d);

    // xi12 ranges over differences of lattice points of the ball.
    std::vector<IVec> us;
    {
        IVec lo = IVec::Constant(d, -2 * g.R), hi = IVec::Constant(d, 2 * g.R);
        for_box(lo, hi, [&](const IVec& k) {
            if (static_cast<double>(k.squaredNorm()) <= 4 * g.lim2) us.push_back(k);
        });
    }
    {
        IVec lo = IVec::Constant(d, -g.R), hi = IVec::Constant(d, g.R);
        for_box(lo, hi, [&](const IVec& k) { rep.lattice_size += g.in_ball(k) ? 1 : 0; });
    }

    // Box of admissible xi14 for a given xi12, in lattice units.
    auto v_box = [&](const IVec& u, IVec& lo, IVec& hi) {
        const Vec uf = u.cast<double>();
        Mat W(l, d);
        for (int m = 0; m < l; ++m) W.row(m) = (sys.A_sym[m] * uf).transpose();
        double best = 0;
        const std::vector<int>* arg = nullptr;
        for (const auto& s : subsets) {
            Mat S(d, d);
            for (int k = 0; k < d; ++k) S.row(k) = W.row(s[k]);
            const double det = std::abs(S.determinant());
            if (det > best) {
                best = det;
                arg = &s;
            }
        }
        lo = IVec::Constant(d, -2 * g.R);
        hi = IVec::Constant(d, 2 * g.R);
        if (arg == nullptr || best <= 1e-12 * std::pow(W.norm() + 1e-300, d)) return;
        Mat S(d, d);
        for (int k = 0; k < d; ++k) S.row(k) = W.row((*arg)[k]);
        const Mat Si = S.inverse();
        const double T = thresh / h2;
        for (int k = 0; k < d; ++k) {
            const double ext = T * Si.row(k).cwiseAbs().sum();
            const int e = static_cast<int>(std::floor(ext * (1 + 1e-9) + 1e-9));
            lo[k] = std::max(lo[k], -e);
            hi[k] = std::min(hi[k], e);
        }
    };

    // Budget check before any enumeration.
    std::vector<std::int64_t> per_u(us.size());
    parallel_for(static_cast<std::int64_t>(us.size()), [&](std::int64_t i) {
        IVec lo, hi;
        v_box(us[i], lo, hi);
        std::int64_t c = 1;
        for (int k = 0; k < d; ++k) c *= std::max(0, hi[k] - lo[k] + 1);
        per_u[i] = c;
    });
    std::int64_t total = 0;
    for (auto c : per_u) total += c;
    rep.candidates = total;
    if (total > opt.budget && !opt.force) {
        std::ostringstream os;
        os << "enumeration needs " << total << " candidate pairs, budget is " << opt.budget;
        throw TooLarge(os.str());
    }

    const std::int64_t block = 64;
    const std::int64_t nblocks = (static_cast<std::int64_t>(us.size()) + block - 1) / block;
    std::vector<BlockResult> blocks(nblocks);
    parallel_blocks(static_cast<std::int64_t>(us.size()), block, [&](std::int64_t b, std::int64_t lo_i, std::int64_t hi_i) {
        BlockResult br;
        for (std::int64_t i = lo_i; i < hi_i; ++i) {
            const IVec& u = us[i];
            const Vec uf = u.cast<double>();
            IVec lo, hi;
            v_box(u, lo, hi);
            for_box(lo, hi, [&](const IVec& v) {
                ++br.candidates;
                if (static_cast<double>(v.squaredNorm()) > 4 * g.lim2) return;
                const Vec vf = v.cast<double>();
                double worst = 0;
                for (int m = 0; m < l; ++m) {
                    const double dm = std::abs(h2 * uf.dot(sys.A_sym[m] * vf));
                    if (dm > thresh) return;
                    worst = std::max(worst, dm);
                }
                IVec x;
                const std::int64_t n = realisations(g, u, v, &x);
                if (n == 0) return;
                br.count += n;
                ++br.classes;
                const double ratio = std::min(uf.norm(), vf.norm()) * rep.spacing / std::sqrt(delta);
                if (ratio > br.best) {
                    br.best = ratio;
                    br.bu = u;
                    br.bv = v;
                    br.bx = x;
                }
                if (ratio > 0) {
                    const double nd = worst / (h2 * uf.norm() * vf.norm());
                    br.max_norm_defect = std::max(br.max_norm_defect, nd);
                }
            });
        }
        blocks[b] = std::move(br);
    });

    double best = -1;
    for (const auto& br : blocks) {
        rep.count_admissible += br.count;
        rep.classes_admissible += br.classes;
        rep.max_normalized_defect = std::max(rep.max_normalized_defect, br.max_norm_defect);
        if (br.best > best) {
            best = br.best;
            rep.witness = Quadruple::from_differences(br.bx.cast<double>() * rep.spacing, br.bu.cast<double>() * rep.spacing,
                                                      br.bv.cast<double>() * rep.spacing);
        }
    }
    rep.worst_ratio = std::max(0.0, best);
    return rep;
}

BiorthoReport certify_biorthogonality_naive(const QuadraticSystem& sys, double delta, double tolerance, double spacing) {
    BiorthoReport rep;
    rep.delta = delta;
    rep.spacing = spacing > 0 ? spacing : std::sqrt(delta);
    rep.tolerance = tolerance;
    const int R = static_cast<int>(std::floor(1.0 / rep.spacing + 1e-9));
    std::vector<Vec> pts;
    IVec lo = IVec::Constant(sys.d, -R), hi = IVec::Constant(sys.d, R);
    for_box(lo, hi, [&](const IVec& k) {
        const Vec p = k.cast<double>() * rep.spacing;
        if (p.squaredNorm() <= 1 + 1e-12) pts.push_back(p);
    });
    rep.lattice_size = static_cast<std::int64_t>(pts.size());
    double best = -1;
    for (const auto& a : pts)
        for (const auto& b : pts)
            for (const auto& c : pts) {
                const Quadruple q = Quadruple::from_three(a, b, c);
                if (q.xi4.squaredNorm() > 1 + 1e-12) continue;
                ++rep.candidates;
                bool ok = true;
                for (int m = 0; m < sys.l && ok; ++m) {
                    const double direct = sys.q(m, q.xi1) + sys.q(m, q.xi3) - sys.q(m, q.xi2) - sys.q(m, q.xi4);
                    ok = std::abs(direct) <= tolerance * delta + 1e-12;
                }
                if (!ok) continue;
                ++rep.count_admissible;
                const double ratio = std::min(q.xi12().norm(), q.xi14().norm()) / std::sqrt(delta);
                if (ratio > best + 1e-12) {
                    best = ratio;
                    rep.witness = q;
                }
            }
    rep.worst_ratio = std::max(0.0, best);
    return rep;
}

Quadruple plant_degenerate_quadruple(const QuadraticSystem& sys, const Vec& nu, double length) {
    const int d = sys.d;
    Mat W(sys.l, d);
    for (int m = 0; m < sys.l; ++m) W.row(m) = (sys.A_sym[m] * nu).transpose();
    Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeFullV);
    const Vec u = svd.matrixV().col(d - 1).normalized() * length;
    const Vec v = nu.normalized() * length;
    return Quadruple::from_differences(0.5 * (u + v), u, v);
}

}  // namespace qc
