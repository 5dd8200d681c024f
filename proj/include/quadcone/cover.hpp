#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadcone/quadform.hpp"
#include "quadcone/types.hpp"

namespace qc {

// spacing * Z^d intersected with the closed unit ball.
struct Lattice {
    int d = 0;
    double spacing = 0;
    std::vector<Vec> points;

    // Index of the lattice point nearest to x (ties broken by index).
    size_t nearest(const Vec& x) const;
};

Lattice make_lattice(int d, double spacing);

// Parallelepiped origin + sum_k u_k axis_k with |u_k| <= half_k after
// dilation about the origin. Axis order: [c | t_1..t_d | n_1..n_l] for
// conical boxes, [t | n] for manifold caps.
struct Box {
    Vec eta;     // base point of the frame
    Vec origin;  // box centre in ambient coordinates
    Mat axes;    // columns
    Vec half;    // half-widths per axis
    Mat inv;     // axes^{-1}

    Box() = default;
    Box(Vec eta, Vec origin, Mat axes, Vec half);

    int dim() const { return static_cast<int>(origin.size()); }
    Vec coords(const Vec& p) const { return inv * (p - origin); }
    Vec point(const Vec& u) const { return origin + axes * u; }
    // Largest |u_k| / half_k; the point is inside the dilate-fold box iff this
    // is at most dilate.
    double gauge(const Vec& p) const;
    bool contains(const Vec& p, double dilate = 1.0) const { return gauge(p) <= dilate * (1 + 1e-12); }
};

// Cap theta(eta): manifold case, half-widths D/r tangential and D/r^2 normal.
Box make_cap(const QuadraticSystem& sys, const Vec& eta, double r, double D);
// Conical slab: a in [1/2, 1] along c(eta), same tangential and normal widths.
Box make_slab(const QuadraticSystem& sys, const Vec& eta, double r, double D);
// Centered plank Theta(sigma, eta): |a| <= sigma^2, |b| <= E sigma / r, |c| <= E / r^2.
Box make_plank(const QuadraticSystem& sys, const Vec& eta, double sigma, double r, double E);
// theta(xi) - theta(xi) for the conical slab: doubled widths, |a| <= 1/2.
Box make_slab_difference(const QuadraticSystem& sys, const Vec& xi, double r, double D);

std::vector<Box> build_cap_cover(const QuadraticSystem& sys, double r, bool conical, double D);

struct CoverReport {
    std::int64_t samples = 0;
    std::int64_t covered = 0;
    int max_multiplicity = 0;
    std::vector<std::int64_t> multiplicity_hist;  // index = multiplicity
    nlohmann::json to_json() const;
};

// Uniform points of the r^{-2} neighbourhood (manifold or cone), tested
// against the cover. Throws UncoveredSample on the first uncovered point in
// sample order.
CoverReport covering_check(const std::vector<Box>& cover, const QuadraticSystem& sys, double r,
                           bool conical, std::int64_t samples, std::uint64_t seed);

struct PlankFamily {
    double sigma = 1;
    Lattice lattice;
    std::vector<Box> planks;
};

// sigma in {1, 1/2, ..., 1/r}; r must be a power of two.
std::vector<double> dyadic_sigmas(double r);
PlankFamily build_plank_family(const QuadraticSystem& sys, double sigma, double r, double E);
std::vector<PlankFamily> build_plank_families(const QuadraticSystem& sys, double r, double E);

bool in_family(const PlankFamily& fam, const Vec& omega, double dilate = 1.0);

struct ShellMembership {
    Vec point;
    double sigma = 0;
};

ShellMembership shell_classify(const Vec& omega, const std::vector<PlankFamily>& families);

// Corollary-style sorting: a lattice eta with omega in dilate*Theta(sigma, eta)
// and |xi - eta| <= 4/(r sigma). Nearest admissible eta is returned.
Vec sort_into_plank(const QuadraticSystem& sys, const Vec& omega, const Vec& xi, const PlankFamily& fam,
                    double r, double E, double dilate = 10.0);

struct PlankHit {
    Vec eta;
    Vec coords;  // (a, b_1..b_d, c_1..c_l)
};

int count_plank_overlap(const PlankFamily& fam, const Vec& omega, double dilate = 10.0,
                        std::vector<PlankHit>* hits = nullptr);

// Representation constant: for omega = h c(eta) + l t(eta) + c n(eta) with
// |h| <= sigma^2, |l| <= D sigma / r, |c| <= D / r^2 and arbitrary |eta| <= 1,
// re-expand at the nearest lattice point xi of spacing 1/(r sigma) and return
// the largest of |l'| / (D sigma / r) and |c'| / (D / r^2) over the samples.
double measure_representation_constant(const QuadraticSystem& sys, double r, double sigma, double D,
                                       std::int64_t samples, std::uint64_t seed);

struct OverlapCampaign {
    double r = 0;
    double sigma = 0;
    std::int64_t samples = 0;
    std::int64_t proposals = 0;
    int max_count = 0;
    int p99_count = 0;
    int median_count = 0;
    std::int64_t sort_success = 0;
    std::vector<std::int64_t> histogram;
    // ends regime |h| <= sigma^2 / 16: hits at distance > 4/(r sigma) from the
    // sorted plank where both tangential offsets are at least sigma / (2r) in
    // size; counts how many of those carry the opposite sign
    std::int64_t ends_checked = 0;
    std::int64_t ends_opposite = 0;
    nlohmann::json to_json() const;
};

// Samples omega from theta~(xi) (random lattice xi) conditioned on omega in
// Omega_sigma by rejection, counts overlaps and sorts every sample.
OverlapCampaign overlap_campaign(const QuadraticSystem& sys, double r, double sigma, double D, double E,
                                 double dilate, std::int64_t samples, std::uint64_t seed);

}  // namespace qc
