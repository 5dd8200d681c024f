#include "quadcone/polytope.hpp"

#include <algorithm>
#include <cmath>

namespace qc {

HPolytope box_halfspaces(const Vec& origin, const Mat& axes, const Vec& half) {
    // x = origin + axes u, |u_k| <= half_k  <=>  |(axes^{-1}(x - origin))_k| <= half_k.
    const int D = static_cast<int>(origin.size());
    const Mat inv = axes.inverse();
    HPolytope p;
    p.A.resize(2 * D, D);
    p.b.resize(2 * D);
    for (int k = 0; k < D; ++k) {
        const Vec row = inv.row(k).transpose();
        const double off = row.dot(origin);
        p.A.row(2 * k) = row.transpose();
        p.b[2 * k] = half[k] + off;
        p.A.row(2 * k + 1) = -row.transpose();
        p.b[2 * k + 1] = half[k] - off;
    }
    return p;
}

HPolytope intersect(const HPolytope& p, const HPolytope& q) {
    HPolytope r;
    r.A.resize(p.A.rows() + q.A.rows(), p.A.cols());
    r.A << p.A, q.A;
    r.b.resize(p.b.size() + q.b.size());
    r.b << p.b, q.b;
    return r;
}

namespace {

// Unit rows, duplicates removed.
HPolytope normalise(const HPolytope& p, double tol) {
    std::vector<Vec> rows;
    std::vector<double> rhs;
    for (int i = 0; i < p.A.rows(); ++i) {
        const double nrm = p.A.row(i).norm();
        if (nrm < 1e-14) continue;
        Vec a = p.A.row(i).transpose() / nrm;
        const double b = p.b[i] / nrm;
        bool dup = false;
        for (size_t j = 0; j < rows.size(); ++j) {
            if ((rows[j] - a).norm() < 1e-12) {
                rhs[j] = std::min(rhs[j], b);
                dup = true;
                break;
            }
        }
        if (!dup) {
            rows.push_back(a);
            rhs.push_back(b);
        }
    }
    (void)tol;
    HPolytope out;
    out.A.resize(static_cast<Eigen::Index>(rows.size()), p.A.cols());
    out.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        out.A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        out.b[static_cast<Eigen::Index>(i)] = rhs[i];
    }
    return out;
}

double volume_rec(const HPolytope& raw, double tol) {
    const int D = static_cast<int>(raw.A.cols());
    const HPolytope p = normalise(raw, tol);
    const int m = static_cast<int>(p.A.rows());
    if (D == 1) {
        double lo = -1e300, hi = 1e300;
        for (int i = 0; i < m; ++i) {
            if (p.A(i, 0) > 0)
                hi = std::min(hi, p.b[i] / p.A(i, 0));
            else
                lo = std::max(lo, p.b[i] / p.A(i, 0));
        }
        if (lo < -1e299 || hi > 1e299) throw Error("polytope is unbounded");
        return std::max(0.0, hi - lo);
    }
    const auto V = enumerate_vertices(p, tol);
    if (static_cast<int>(V.size()) < D + 1) return 0.0;
    Vec p0 = Vec::Zero(D);
    for (const auto& v : V) p0 += v;
    p0 /= static_cast<double>(V.size());
    double vol = 0;
    for (int f = 0; f < m; ++f) {
        const Vec a = p.A.row(f).transpose();
        int tight = 0;
        for (const auto& v : V)
            if (std::abs(a.dot(v) - p.b[f]) <= tol) ++tight;
        if (tight < D) continue;
        const double height = p.b[f] - a.dot(p0);
        if (height <= tol) continue;
        Eigen::HouseholderQR<Mat> qr(a);
        const Mat Q = qr.householderQ() * Mat::Identity(D, D);
        const Mat B = Q.rightCols(D - 1);
        const Vec x0 = a * p.b[f];
        HPolytope sub;
        std::vector<int> keep;
        bool empty = false;
        for (int g = 0; g < m; ++g) {
            if (g == f) continue;
            const Vec ag = B.transpose() * p.A.row(g).transpose();
            const double bg = p.b[g] - p.A.row(g).dot(x0);
            if (ag.norm() < 1e-12) {
                if (bg < -tol) empty = true;
                continue;
            }
            keep.push_back(g);
        }
        if (empty) continue;
        sub.A.resize(static_cast<Eigen::Index>(keep.size()), D - 1);
        sub.b.resize(static_cast<Eigen::Index>(keep.size()));
        for (size_t i = 0; i < keep.size(); ++i) {
            const int g = keep[i];
            sub.A.row(static_cast<Eigen::Index>(i)) = (B.transpose() * p.A.row(g).transpose()).transpose();
            sub.b[static_cast<Eigen::Index>(i)] = p.b[g] - p.A.row(g).dot(x0);
        }
        vol += height * volume_rec(sub, tol) / D;
    }
    return vol;
}

}  // namespace

std::vector<Vec> enumerate_vertices(const HPolytope& p, double tol) {
    const int D = static_cast<int>(p.A.cols());
    const int m = static_cast<int>(p.A.rows());
    std::vector<Vec> out;
    if (m < D) return out;
    std::vector<int> idx(D);
    for (int i = 0; i < D; ++i) idx[i] = i;
    Mat M(D, D);
    Vec rhs(D);
    for (;;) {
        for (int i = 0; i < D; ++i) {
            M.row(i) = p.A.row(idx[i]);
            rhs[i] = p.b[idx[i]];
        }
        Eigen::FullPivLU<Mat> lu(M);
        if (lu.rank() == D && std::abs(lu.determinant()) > 1e-12) {
            const Vec x = lu.solve(rhs);
            if (((p.A * x - p.b).array() <= tol).all()) {
                bool dup = false;
                for (const auto& v : out)
                    if ((v - x).norm() <= tol) {
                        dup = true;
                        break;
                    }
                if (!dup) out.push_back(x);
            }
        }
        int k = D - 1;
        while (k >= 0 && idx[k] == m - D + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < D; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

double polytope_volume(const HPolytope& p) {
    if (p.A.cols() > 4) throw MethodInfeasible("exact polytope volume is limited to dimension 4");
    const double scale = 1.0 + p.b.cwiseAbs().maxCoeff() / std::max(1e-300, p.A.rowwise().norm().minCoeff());
    return volume_rec(p, 1e-9 * scale);
}

}  // namespace qc
