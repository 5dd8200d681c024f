#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "quadcone/cover.hpp"
#include "quadcone/field.hpp"
#include "quadcone/quadform.hpp"

namespace qc {

// Lattice resolution: points per cap width along tangential axes, points per
// delta along normal axes, points per unit height (cone only, h in [1/2, 1]).
struct LatticeOptions {
    int tangential = 8;
    int normal = 2;
    int height = 16;
};

// Caps of the delta-neighbourhood: centres eta on spacing * Z^d with spacing
// 2 sqrt(delta). Membership and the partition of unity use chart coordinates
// (xi - eta) of the base point; a cone frequency (x, y, h) has base point
// (x/h, y/h).
struct CapSet {
    const QuadraticSystem* sys = nullptr;
    double delta = 0;
    bool conical = false;
    double spacing = 0;
    std::vector<Vec> centers;
    std::vector<Box> boxes;  // slab (cone) or cap (manifold) in the ambient frame, for dual boxes
    std::vector<std::vector<int>> index;  // integer lattice index of each centre
    int J = 0;                            // indices lie in [-J, J]^d
    std::vector<int> lookup;              // dense index -> cap, -1 if absent

    int find(const std::vector<int>& idx) const;  // -1 if absent
};

CapSet make_caps(const QuadraticSystem& sys, double delta, bool conical);

Vec lattice_spacing(const QuadraticSystem& sys, double delta, bool conical, const LatticeOptions& opt = {});

// Base point split into chart coordinates: xi (d), vertical offset zeta - Q(xi)
// (l), and height (1 for the manifold).
struct BasePoint {
    Vec xi;
    Vec vertical;
    double h = 1;
};
BasePoint base_point(const QuadraticSystem& sys, const Vec& omega, bool conical);

// Smooth profile: 1 on |u| <= 1/2, 0 on |u| >= 1.
double partition_profile(double u);
// exp(1 - 1/(1 - t^2)) on |t| < 1.
double bump(double t);

struct SynthesisOptions {
    int packets = 0;       // 0 means one per cap
    bool aligned = false;  // every cap once, amplitude 1, phase 0, centred at the origin
    LatticeOptions lattice;
};

SpectralField synthesize_field(const QuadraticSystem& sys, const CapSet& caps, std::uint64_t seed,
                               std::uint64_t stream = 0, const SynthesisOptions& opt = {});

struct CapProjection {
    int cap = -1;
    std::vector<size_t> terms;  // indices into the parent field
    std::vector<cplx> coeffs;   // chi_theta * c on those terms
};

// Throws PartitionGap if the cap weights at a nonzero term do not sum to 1.
std::vector<CapProjection> cap_project(const SpectralField& f, const CapSet& caps);

// ||f||_4 / ||(sum |f_theta|^2)^{1/2}||_4 from lattice autocorrelations
// (Parseval, no aliasing).
double sq_ratio(const SpectralField& f, const std::vector<CapProjection>& proj);
// Same quantity by FFT on an alias-free grid (mean over samples).
double sq_ratio_grid(const SpectralField& f, const std::vector<CapProjection>& proj);

// L^4 norms to the fourth power (means over one period).
double l4_fourth(const SpectralField& f);

struct SectorLevel {
    double s = 1;                            // half side of the sector in xi
    std::vector<std::vector<int>> members;   // caps per sector
    std::vector<Mat> frame;                  // conical frame at the sector centre
    std::vector<Vec> halfwidth;              // U in dual-frame coordinates
};

// Dyadic sectors from s = 1 down to s >= sqrt(delta), each with the bounding
// plank of the dual boxes of its caps (half-widths dual_scale / w).
std::vector<SectorLevel> build_envelopes(const CapSet& caps, double dual_scale = 1.0);
// Groups caps into cells of half side s (the caps of a coarser scale).
std::vector<std::vector<int>> group_caps(const CapSet& caps, double s);

struct KakeyaReport {
    double r = 0;
    double lhs = 0;
    double rhs = 0;
    double ratio = 0;
    bool trivial = false;
    std::vector<double> level_s;
    std::vector<double> level_rhs;
    nlohmann::json to_json() const;
};

KakeyaReport kakeya_check(const SpectralField& f, const CapSet& caps, double r, double dual_scale = 1.0);

struct TwoScaleReport {
    double r = 0;
    double R = 0;
    double S_emp = 0;
    double median = 0;
    int ensemble_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> ratios;
    nlohmann::json to_json() const;
};

// Ball-tile side of the left-hand side (tiles are cubes of half width r).
double two_scale_ratio(const SpectralField& f, const CapSet& caps, double r, double dual_scale = 1.0);
TwoScaleReport measure_S(const QuadraticSystem& sys, double r, double R, int ensemble, std::uint64_t seed,
                         const SynthesisOptions& opt = {});

struct SqEnsembleReport {
    double delta = 0;
    bool conical = false;
    int ensemble = 0;
    double max_ratio = 0;
    double min_ratio = 0;
    double stress_ratio = 0;  // aligned field
    std::int64_t terms = 0;   // lattice terms of the stress field
    int caps = 0;
    nlohmann::json to_json() const;
};

// Member 0 is the aligned stress field, the rest are random packet sums.
SqEnsembleReport sq_ensemble(const QuadraticSystem& sys, double delta, bool conical, int ensemble,
                             std::uint64_t seed, const SynthesisOptions& opt = {});

enum class TubeMethod { Exact, MonteCarlo };

struct TubeReport {
    double volume = 0;
    double std_error = 0;
    double single_volume = 0;
    std::int64_t samples = 0;
    TubeMethod method = TubeMethod::Exact;
    nlohmann::json to_json() const;
};

// Orthonormalised frame [t | n | c] at xi with half-widths K^{1/2}/2 (t) and
// K/2 (n, c).
Box make_tube(const QuadraticSystem& sys, const Vec& xi, double K);
TubeReport tube_intersection(const QuadraticSystem& sys, double K, const Vec& xi1, const Vec& xi2,
                             TubeMethod method, std::int64_t samples = 10000000, std::uint64_t seed = 1);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qc
