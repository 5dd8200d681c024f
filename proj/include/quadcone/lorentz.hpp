#pragma once

#include <cstdint>

#include "json.hpp"
#include "quadcone/quadform.hpp"

namespace qc {

// (xi, zeta, h) -> (eta, zeta', h) with eta = (xi - h xi_tau) / s and
// zeta'_i = zeta_i / s^2 - <eta, A_i xi_tau> / s - h <xi_tau, A_i xi_tau> / (2 s^2).
// Linear in the ambient coordinates of R^{n+1}.
struct LorentzMap {
    const QuadraticSystem* sys = nullptr;
    Vec xi_tau;
    double s = 1;

    LorentzMap(const QuadraticSystem& sys, Vec xi_tau, double s);

    Vec apply(const Vec& p) const;  // p = (xi, zeta, h)
    Mat matrix() const;             // (n+1) x (n+1)
    double jacobian_det() const;    // s^{-(d + 2l)}
};

// Lambda_{tau2, s2} after Lambda_{tau1, s1} equals Lambda_{tau1 + s1 tau2, s1 s2}.
LorentzMap compose(const LorentzMap& first, const LorentzMap& second);

// Point (xi, Q(xi)/h, h) of the cone over the graph.
Vec cone_point(const QuadraticSystem& sys, const Vec& xi, double h);
// Orthonormal basis (columns) of the normal space of the cone at (xi, Q(xi)/h, h).
Mat cone_normal_basis(const QuadraticSystem& sys, const Vec& xi, double h);

struct ConeDistance {
    double distance = 0;
    Vec xi;
    double h = 1;
    int iterations = 0;
    bool fallback = false;
};

// Distance from p to the unconstrained cone {(xi, Q(xi)/h, h)}: damped
// Gauss-Newton over (xi, h) from the seed, with a grid restart if it stalls.
ConeDistance distance_to_cone(const QuadraticSystem& sys, const Vec& p, const Vec& seed_xi, double seed_h);

struct RescalingReport {
    double s = 0;
    double r = 0;
    std::int64_t samples = 0;
    double min_factor = 0;  // min over samples of dist * r^2 s^2
    double max_factor = 0;
    double max_on_cone_error = 0;
    std::int64_t fallbacks = 0;
    double log_jacobian = 0;
    nlohmann::json to_json() const;
};

// Points of the r^{-2} neighbourhood of the s-sector around xi_tau (normal
// offset exactly r^{-2} in a random unit normal direction), mapped and
// measured against the full cone.
RescalingReport neighborhood_rescaling_check(const LorentzMap& map, double r, std::int64_t samples,
                                             std::uint64_t seed);

// Largest on-cone defect |zeta'_i - q_i(eta)/h| over random sector points.
double on_cone_error(const LorentzMap& map, std::int64_t samples, std::uint64_t seed);

struct PlankImageFit {
    Vec eta_image;
    double height_ratio = 0;      // max |a| / sigma^2 over image vertices
    double tangential_ratio = 0;  // max |b_i| / (E sigma / r')
    double normal_ratio = 0;      // max |c_j| / (E / r'^2)
    nlohmann::json to_json() const;
};

// Maps the vertices of Theta(sigma, eta) (scale r) and reads them in the frame
// of Theta(sigma, eta') at scale r' = r s, eta' = (eta - xi_tau) / s.
PlankImageFit plank_image_fit(const LorentzMap& map, const Vec& eta, double sigma, double r, double E);

}  // namespace qc
