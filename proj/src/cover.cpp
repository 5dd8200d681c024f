#include "quadcone/cover.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "quadcone/parallel.hpp"

namespace qc {

namespace {

constexpr std::int64_t kBlock = 256;

void enumerate_lattice(int d, int dim, double spacing, int kmax, Vec& cur, std::vector<Vec>& out) {
    if (dim == d) {
        if (cur.squaredNorm() <= 1.0 + 1e-12) out.push_back(cur);
        return;
    }
    for (int k = -kmax; k <= kmax; ++k) {
        cur[dim] = k * spacing;
        enumerate_lattice(d, dim + 1, spacing, kmax, cur, out);
    }
}

Vec uniform_in_ball(int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec x(d);
    do {
        for (int i = 0; i < d; ++i) x[i] = u(rng);
    } while (x.squaredNorm() > 1.0);
    return x;
}

// Orthonormal basis of the orthogonal complement of span(V).
Mat complement(const Mat& V) {
    const int D = static_cast<int>(V.rows());
    Eigen::HouseholderQR<Mat> qr(V);
    Mat Q = qr.householderQ() * Mat::Identity(D, D);
    return Q.rightCols(D - V.cols());
}

}  // namespace

size_t Lattice::nearest(const Vec& x) const {
    size_t best = 0;
    double bd = 1e300;
    for (size_t i = 0; i < points.size(); ++i) {
        const double dd = (points[i] - x).squaredNorm();
        if (dd < bd - 1e-15) {
            bd = dd;
            best = i;
        }
    }
    return best;
}

Lattice make_lattice(int d, double spacing) {
    Lattice L;
    L.d = d;
    L.spacing = spacing;
    const int kmax = static_cast<int>(std::floor(1.0 / spacing + 1e-9));
    Vec cur = Vec::Zero(d);
    enumerate_lattice(d, 0, spacing, kmax, cur, L.points);
    return L;
}

Box::Box(Vec eta_, Vec origin_, Mat axes_, Vec half_)
    : eta(std::move(eta_)), origin(std::move(origin_)), axes(std::move(axes_)), half(std::move(half_)) {
    for (int k = 0; k < half.size(); ++k)
        if (!(half[k] > 0)) throw Error("box half-widths must be positive");
    inv = axes.inverse();
}

double Box::gauge(const Vec& p) const {
    const Vec u = coords(p);
    return (u.cwiseAbs().array() / half.array()).maxCoeff();
}

Box make_cap(const QuadraticSystem& sys, const Vec& eta, double r, double D) {
    const Frame f = frame_at(sys, eta, false);
    Vec half(sys.n());
    half.head(sys.d).setConstant(D / r);
    half.tail(sys.l).setConstant(D / (r * r));
    return Box(eta, f.center, f.basis(), half);
}

Box make_slab(const QuadraticSystem& sys, const Vec& eta, double r, double D) {
    const Frame f = frame_at(sys, eta, true);
    Vec half(sys.n() + 1);
    half[0] = 0.25;
    half.segment(1, sys.d).setConstant(D / r);
    half.tail(sys.l).setConstant(D / (r * r));
    return Box(eta, 0.75 * f.center, f.basis(), half);
}

Box make_plank(const QuadraticSystem& sys, const Vec& eta, double sigma, double r, double E) {
    const Frame f = frame_at(sys, eta, true);
    Vec half(sys.n() + 1);
    half[0] = sigma * sigma;
    half.segment(1, sys.d).setConstant(E * sigma / r);
    half.tail(sys.l).setConstant(E / (r * r));
    return Box(eta, Vec::Zero(sys.n() + 1), f.basis(), half);
}

Box make_slab_difference(const QuadraticSystem& sys, const Vec& xi, double r, double D) {
    const Frame f = frame_at(sys, xi, true);
    Vec half(sys.n() + 1);
    half[0] = 0.5;
    half.segment(1, sys.d).setConstant(2 * D / r);
    half.tail(sys.l).setConstant(2 * D / (r * r));
    return Box(xi, Vec::Zero(sys.n() + 1), f.basis(), half);
}

std::vector<Box> build_cap_cover(const QuadraticSystem& sys, double r, bool conical, double D) {
    if (r < 2) throw Error("cap cover needs r >= 2");
    const Lattice L = make_lattice(sys.d, 1.0 / r);
    std::vector<Box> out;
    out.reserve(L.points.size());
    for (const auto& eta : L.points) out.push_back(conical ? make_slab(sys, eta, r, D) : make_cap(sys, eta, r, D));
    return out;
}

nlohmann::json CoverReport::to_json() const {
    return {{"samples", samples},
            {"covered", covered},
            {"coverage", samples ? static_cast<double>(covered) / samples : 1.0},
            {"max_multiplicity", max_multiplicity},
            {"multiplicity_histogram", multiplicity_hist}};
}

CoverReport covering_check(const std::vector<Box>& cover, const QuadraticSystem& sys, double r, bool conical,
                           std::int64_t samples, std::uint64_t seed) {
    const std::int64_t nblocks = (samples + kBlock - 1) / kBlock;
    std::vector<std::vector<int>> mult(nblocks);
    std::vector<Vec> points(samples);
    parallel_blocks(samples, kBlock, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
        std::uniform_real_distribution<double> uh(0.5, 1.0);
        for (std::int64_t i = lo; i < hi; ++i) {
            Vec p;
            for (;;) {
                const Vec eta = uniform_in_ball(sys.d, rng);
                const Frame f = frame_at(sys, eta, conical);
                Mat span(f.ambient(), sys.d + (conical ? 1 : 0));
                int k = 0;
                if (conical) span.col(k++) = f.center;
                for (const auto& t : f.tangents) span.col(k++) = t;
                const Mat N = complement(span);
                const Vec w = uniform_in_ball(sys.l, rng) / (r * r);
                const double h = conical ? uh(rng) : 1.0;
                p = h * f.center + N * w;
                // the slab height is the last coordinate; keep the sample inside [1/2, 1]
                if (!conical || (p[f.ambient() - 1] >= 0.5 && p[f.ambient() - 1] <= 1.0)) break;
            }
            points[i] = p;
        }
    });
    std::vector<int> counts(samples, 0);
    parallel_for(samples, [&](std::int64_t i) {
        int c = 0;
        for (const auto& box : cover) c += box.contains(points[i]) ? 1 : 0;
        counts[i] = c;
    });
    CoverReport rep;
    rep.samples = samples;
    for (std::int64_t i = 0; i < samples; ++i) {
        if (counts[i] == 0) {
            std::ostringstream os;
            os << "sample " << i << " is not covered";
            throw UncoveredSample(os.str(), points[i]);
        }
        ++rep.covered;
        rep.max_multiplicity = std::max(rep.max_multiplicity, counts[i]);
        if (static_cast<int>(rep.multiplicity_hist.size()) <= counts[i]) rep.multiplicity_hist.resize(counts[i] + 1, 0);
        ++rep.multiplicity_hist[counts[i]];
    }
    return rep;
}

std::vector<double> dyadic_sigmas(double r) {
    const double lg = std::log2(r);
    if (std::abs(lg - std::round(lg)) > 1e-12) throw Error("r must be a power of two");
    std::vector<double> out;
    for (double s = 1.0; s >= 1.0 / r * (1 - 1e-12); s *= 0.5) out.push_back(s);
    return out;
}

PlankFamily build_plank_family(const QuadraticSystem& sys, double sigma, double r, double E) {
    PlankFamily fam;
    fam.sigma = sigma;
    fam.lattice = make_lattice(sys.d, 1.0 / (r * sigma));
    for (const auto& eta : fam.lattice.points) fam.planks.push_back(make_plank(sys, eta, sigma, r, E));
    return fam;
}

std::vector<PlankFamily> build_plank_families(const QuadraticSystem& sys, double r, double E) {
    std::vector<PlankFamily> out;
    for (double s : dyadic_sigmas(r)) out.push_back(build_plank_family(sys, s, r, E));
    return out;
}

bool in_family(const PlankFamily& fam, const Vec& omega, double dilate) {
    const double h = std::abs(omega[omega.size() - 1]);
    if (h > dilate * fam.sigma * fam.sigma * (1 + 1e-12)) return false;
    for (const auto& p : fam.planks)
        if (p.contains(omega, dilate)) return true;
    return false;
}

ShellMembership shell_classify(const Vec& omega, const std::vector<PlankFamily>& families) {
    if (families.empty() || !in_family(families.front(), omega)) throw NotInCone("point is not in the union of CP_1");
    for (size_t k = 0; k + 1 < families.size(); ++k)
        if (!in_family(families[k + 1], omega)) return {omega, families[k].sigma};
    return {omega, families.back().sigma};
}

Vec sort_into_plank(const QuadraticSystem& sys, const Vec& omega, const Vec& xi, const PlankFamily& fam, double r,
                    double E, double dilate) {
    const double sigma = fam.sigma;
    const double reach = 4.0 / (r * sigma);
    double best = 1e300;
    Vec out;
    for (size_t i = 0; i < fam.lattice.points.size(); ++i) {
        const Vec& eta = fam.lattice.points[i];
        const double dist = (eta - xi).norm();
        if (dist > reach * (1 + 1e-12)) continue;
        if (!fam.planks[i].contains(omega, dilate)) continue;
        if (dist < best - 1e-15) {
            best = dist;
            out = eta;
        }
    }
    if (out.size() == 0) throw SortFailure("no admissible plank", omega, xi, sigma);
    // independent re-verification with a fresh plank
    const Box check = make_plank(sys, out, sigma, r, E);
    if (!check.contains(omega, dilate) || (out - xi).norm() > reach * (1 + 1e-12))
        throw SortFailure("re-verification failed", omega, xi, sigma);
    return out;
}

int count_plank_overlap(const PlankFamily& fam, const Vec& omega, double dilate, std::vector<PlankHit>* hits) {
    int count = 0;
    for (const auto& p : fam.planks) {
        if (p.contains(omega, dilate)) {
            ++count;
            if (hits) hits->push_back({p.eta, p.coords(omega)});
        }
    }
    return count;
}

double measure_representation_constant(const QuadraticSystem& sys, double r, double sigma, double D,
                                       std::int64_t samples, std::uint64_t seed) {
    const Lattice L = make_lattice(sys.d, 1.0 / (r * sigma));
    const std::int64_t nblocks = (samples + kBlock - 1) / kBlock;
    std::vector<double> block_max(nblocks, 0.0);
    parallel_blocks(samples, kBlock, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double m = 0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const Vec eta = uniform_in_ball(sys.d, rng);
            const Frame f = frame_at(sys, eta, true);
            Vec p = u(rng) * sigma * sigma * f.center;
            for (const auto& t : f.tangents) p += u(rng) * D * sigma / r * t;
            for (const auto& n : f.normals) p += u(rng) * D / (r * r) * n;
            const Vec& xi = L.points[L.nearest(eta)];
            const Frame g = frame_at(sys, xi, true);
            const Vec coef = g.basis().lu().solve(p);
            for (int k = 0; k < sys.d; ++k) m = std::max(m, std::abs(coef[1 + k]) / (D * sigma / r));
            for (int k = 0; k < sys.l; ++k) m = std::max(m, std::abs(coef[1 + sys.d + k]) / (D / (r * r)));
        }
        block_max[b] = m;
    });
    return *std::max_element(block_max.begin(), block_max.end());
}

nlohmann::json OverlapCampaign::to_json() const {
    return {{"r", r},
            {"sigma", sigma},
            {"samples", samples},
            {"proposals", proposals},
            {"max_count", max_count},
            {"p99_count", p99_count},
            {"median_count", median_count},
            {"sort_success", sort_success},
            {"histogram", histogram},
            {"ends_checked", ends_checked},
            {"ends_opposite_sign", ends_opposite}};
}

OverlapCampaign overlap_campaign(const QuadraticSystem& sys, double r, double sigma, double D, double E, double dilate,
                                 std::int64_t samples, std::uint64_t seed) {
    dyadic_sigmas(r);  // rejects r that is not a power of two
    const PlankFamily fam = build_plank_family(sys, sigma, r, E);
    const bool floor_scale = sigma <= 1.0 / r * (1 + 1e-12);
    PlankFamily finer;
    if (!floor_scale) finer = build_plank_family(sys, sigma / 2, r, E);
    const Lattice base = make_lattice(sys.d, 1.0 / r);

    // theta~(xi) restricted to |a| <= sigma^2 (Omega_sigma lies below that
    // height) and to tangential offsets of order sigma / r, where the shell lives.
    const double b_half = std::min(2 * D / r, 4 * E * sigma / r);
    const double c_half = 2 * D / (r * r);
    const double a_half = std::min(0.5, sigma * sigma);

    struct Result {
        int count;
        bool sorted;
        bool end_checked;
        bool end_opposite;
    };
    std::vector<Result> results(samples);
    std::vector<std::int64_t> props(samples, 0);
    parallel_blocks(samples, 64, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_int_distribution<size_t> pick(0, base.points.size() - 1);
        for (std::int64_t i = lo; i < hi; ++i) {
            Vec omega, xi;
            std::int64_t tries = 0;
            for (;;) {
                ++tries;
                if (tries > 2000000) throw Error("overlap sampler: Omega_sigma acceptance too small");
                xi = base.points[pick(rng)];
                const Frame f = frame_at(sys, xi, true);
                omega = u(rng) * a_half * f.center;
                for (const auto& t : f.tangents) omega += u(rng) * b_half * t;
                for (const auto& nv : f.normals) omega += u(rng) * c_half * nv;
                if (!in_family(fam, omega)) continue;
                if (!floor_scale && in_family(finer, omega)) continue;
                break;
            }
            props[i] = tries;
            std::vector<PlankHit> hits;
            Result res{count_plank_overlap(fam, omega, dilate, &hits), false, false, false};
            const Vec eta0 = sort_into_plank(sys, omega, xi, fam, r, E, dilate);
            res.sorted = true;
            const double h = omega[omega.size() - 1];
            if (std::abs(h) <= sigma * sigma / 16 && !floor_scale) {
                Vec l0;
                for (const auto& hit : hits)
                    if ((hit.eta - eta0).norm() < 1e-12) l0 = hit.coords.segment(1, sys.d);
                bool any = false, all_opposite = true;
                for (const auto& hit : hits) {
                    const Vec delta = hit.eta - eta0;
                    if (delta.norm() <= 4.0 / (r * sigma) + 1e-12) continue;
                    const Vec dir = delta / delta.norm();
                    const double s0 = l0.dot(dir), s1 = hit.coords.segment(1, sys.d).dot(dir);
                    if (std::abs(s0) < sigma / (2 * r) || std::abs(s1) < sigma / (2 * r)) continue;
                    any = true;
                    if (!(s0 * s1 < 0)) all_opposite = false;
                }
                res.end_checked = any;
                res.end_opposite = any && all_opposite;
            }
            results[i] = res;
        }
    });
    OverlapCampaign out;
    out.r = r;
    out.sigma = sigma;
    out.samples = samples;
    for (std::int64_t i = 0; i < samples; ++i) {
        out.proposals += props[i];
        out.max_count = std::max(out.max_count, results[i].count);
        if (static_cast<int>(out.histogram.size()) <= results[i].count) out.histogram.resize(results[i].count + 1, 0);
        ++out.histogram[results[i].count];
        out.sort_success += results[i].sorted ? 1 : 0;
        out.ends_checked += results[i].end_checked ? 1 : 0;
        out.ends_opposite += results[i].end_opposite ? 1 : 0;
    }
    std::int64_t acc = 0;
    bool have_median = false;
    for (size_t k = 0; k < out.histogram.size(); ++k) {
        acc += out.histogram[k];
        if (!have_median && 2 * acc >= samples) {
            out.median_count = static_cast<int>(k);
            have_median = true;
        }
        if (100 * acc >= 99 * samples) {
            out.p99_count = static_cast<int>(k);
            break;
        }
    }
    return out;
}

}  // namespace qc
