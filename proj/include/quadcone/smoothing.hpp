#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "quadcone/field.hpp"
#include "quadcone/quadform.hpp"

namespace qc {

// Averages over gamma_i(s) = (s, <s, A_i s>), s in the unit ball of R^d,
// weighted by chi(s) = exp(1 - 1/(1 - |s|^2)) (peak 1, not normalised).
struct AverageSpec {
    int d = 0;
    int m = 0;
    std::vector<Mat> A;      // symmetric, invertible
    std::vector<Mat> A_inv;
    std::vector<double> condition;
    std::vector<Vec> eigval;  // A_i = V diag(eigval) V^T
    std::vector<Mat> eigvec;
    double rho = 0.25;        // admissible cone |xi_{d+1}| >= rho |xi'|
    double chi_mass = 0;      // integral of chi over the ball

    // The inverted forms as a quadratic system (for transversality checks).
    QuadraticSystem inverse_system() const;
    nlohmann::json to_json() const;
};

AverageSpec make_average_spec(std::vector<Mat> A, double rho = 0.25);
// A_1 = diag(1, -1), A_2 = [[0, 1], [1, 0]].
AverageSpec two_parameter_spec();

double chi_ball(const Vec& s);
double chi_time(double t);  // same profile on (1/2, 3/2)
double chi_mass(int d);

struct StationaryPoint {
    Vec s_star;
    double phase_value = 0;
    double gradient_norm = 0;
};

struct PhaseData {
    Vec xi;
    std::vector<StationaryPoint> forms;
    nlohmann::json to_json() const;
};

// Phase Phi_i(s, xi) = <s, xi'> + <s, A_i s> xi_{d+1} and its gradient.
double phase(const AverageSpec& spec, int i, const Vec& s, const Vec& xi);
Vec phase_gradient(const AverageSpec& spec, int i, const Vec& s, const Vec& xi);

StationaryPoint stationary_point(const AverageSpec& spec, int i, const Vec& xi);
PhaseData phase_data(const AverageSpec& spec, const Vec& xi);

// Gauss-Legendre rule on [-1, 1] (cached).
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_legendre(int n);

// Per-axis node count used when quadrature_n = 0.
int auto_quadrature_n(const AverageSpec& spec, int i, double t, const Vec& xi);

// int exp(-i t Phi_i(s, xi)) chi(s) ds by tensor Gauss-Legendre in the
// eigen-coordinates of A_i. quadrature_n = 0 picks the count automatically.
// The result at n is compared with 2n; a relative gap above tol throws
// QuadratureUnderresolved, as does an explicit n below 64 t^{1/2}.
cplx oscillatory_integral(const AverageSpec& spec, int i, double t, const Vec& xi, int quadrature_n = 0,
                          double tol = 1e-6);
// Single evaluation at a fixed n, no doubling test.
cplx oscillatory_integral_fixed(const AverageSpec& spec, int i, double t, const Vec& xi, int n);

// Leading stationary-phase term chi(s*) (2 pi / t)^{d/2} |det(2 xi_{d+1} A)|^{-1/2}
// exp(-i pi sgn / 4) exp(-i t Phi*).
cplx stationary_phase_leading(const AverageSpec& spec, int i, double t, const Vec& xi);

// prod_i I_i(t_i, xi).
cplx average_multiplier(const AverageSpec& spec, const Vec& t, const Vec& xi, int quadrature_n = 0);

// A_t f on the grid of f (period = extent per axis). f must vanish at the
// Nyquist bins. quadrature_n = 0 picks the count per mode.
GridField average_direct(const AverageSpec& spec, const GridField& f, const Vec& t, int quadrature_n = 0);

// Integer-mode field on the 2 pi periodic torus (SpectralField with spacing
// 1 / (2 pi)), for the FIO comparison.
SpectralField band_field(const AverageSpec& spec, int N, int modes, std::uint64_t seed, double cone = 1.0);

struct FioReport {
    int N = 0;
    int modes = 0;
    std::vector<double> t_nodes;   // per-axis nodes in (1/2, 3/2)
    std::vector<double> ratios;    // per t-grid point (row-major over t_1, t_2, ...)
    double ratio = 0;              // ||chi(t) A_t f||_4 / (N^{-md/2} ||chi(t) F f||_4)
    double max_pointwise = 0;
    double min_pointwise = 0;
    double lhs = 0;                // ||chi(t) A_t f||_4
    double f_norm = 0;             // ||f||_4
    nlohmann::json to_json() const;
};

FioReport fio_compare(const AverageSpec& spec, const SpectralField& f, int N, int t_nodes = 4,
                      int quadrature_n = 0);

// ||A_t f||_4 / ||f||_4 at a fixed t, for fields off the admissible cone.
double average_l4_ratio(const AverageSpec& spec, const SpectralField& f, const Vec& t, int quadrature_n = 0);

}  // namespace qc
