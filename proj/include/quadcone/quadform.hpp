#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadcone/types.hpp"

namespace qc {

// Q : R^d -> R^l with q_k(xi) = 1/2 <xi, A_k xi> + <b_k, xi> + c_k.
//
// A generator-only system keeps matrices that need not be symmetric (such as a
// rotation); certification uses them verbatim while the forms q_k use the
// symmetric part.
struct QuadraticSystem {
    int d = 0;
    int l = 0;
    std::vector<Mat> A;
    std::vector<Vec> b;
    std::vector<double> c;
    bool generator_only = false;
    std::string name;

    int n() const { return d + l; }
    std::vector<Mat> A_sym;  // symmetric parts, filled by make_system

    const Mat& hessian(int k) const { return A_sym[k]; }
    double q(int k, const Vec& xi) const;
    Vec Q(const Vec& xi) const;
    Vec grad(int k, const Vec& xi) const;
    Mat jacobian(const Vec& xi) const;  // l x d
    bool pure() const;                  // b = 0 and c = 0
};

QuadraticSystem make_system(std::vector<Mat> A, std::vector<Vec> b = {}, std::vector<double> c = {},
                            bool generator_only = false, std::string name = {});

// Named systems: parabola, complex_parabola, complex_parabola_rotated,
// reflection_inversion_d3, random_sym_d3_l3(seed).
QuadraticSystem catalog(const std::string& name);
std::vector<std::string> catalog_names();
QuadraticSystem random_symmetric(int d, int l, std::uint64_t seed);

nlohmann::json system_to_json(const QuadraticSystem& sys);
QuadraticSystem system_from_json(const nlohmann::json& j);
// Catalog name, or an inline JSON object.
QuadraticSystem resolve_system(const std::string& spec);

struct Frame {
    Vec base;
    bool conical = false;
    Vec center;  // (eta, Q(eta), 1) when conical, Gamma_Q(eta) otherwise
    std::vector<Vec> tangents;
    std::vector<Vec> normals;

    int ambient() const { return static_cast<int>(center.size()); }
    // Columns [center | t_1..t_d | n_1..n_l] when conical, [t | n] otherwise.
    Mat basis() const;
};

Frame frame_at(const QuadraticSystem& sys, const Vec& eta, bool conical);

struct TransversalityCertificate {
    double c_min = 0;
    Vec witness_nu;
    std::vector<int> witness_subset;
    std::vector<std::vector<int>> subset_per_sample;
    int resolution = 0;
    int refine_steps = 0;
    int samples = 0;
    double grid_min = 0;         // minimum over the sphere grid before refinement
    double grid_spacing = 0;     // typical nearest-neighbour distance of the grid
    double covering_radius = 0;  // bound used when extrapolating off the grid
    double lipschitz = 0;        // d * max over subsets of prod ||A_i||
    double observed_gradient = 0;
    double certified_floor = 0;  // max(0, grid_min - lipschitz * covering_radius)
};

std::vector<Vec> sphere_grid(int dim, int resolution);
double sphere_grid_spacing(int dim, int resolution);
double subset_det(const QuadraticSystem& sys, const std::vector<int>& subset, const Vec& nu);
// max over d-subsets of |det(A_i1 nu, ..., A_id nu)|, with the arg-max subset.
double best_subset_det(const QuadraticSystem& sys, const Vec& nu, std::vector<int>* arg = nullptr);
std::vector<std::vector<int>> index_subsets(int l, int d);

TransversalityCertificate certify_transversality(const QuadraticSystem& sys, int resolution,
                                                 int refine_steps = 30);

double tangent_wedge_volume(const QuadraticSystem& sys, const Vec& xi1, const Vec& xi2);

nlohmann::json certificate_to_json(const TransversalityCertificate& c, bool with_subsets = false);

}  // namespace qc
