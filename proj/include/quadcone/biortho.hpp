#pragma once

#include <cstdint>

#include "json.hpp"
#include "quadcone/quadform.hpp"

namespace qc {

// xi1 + xi3 = xi2 + xi4 with xi4 derived from the other three.
struct Quadruple {
    Vec xi1, xi2, xi3, xi4;
    static Quadruple from_three(const Vec& xi1, const Vec& xi2, const Vec& xi3);
    // From xi1 and the differences u = xi1 - xi2, v = xi1 - xi4.
    static Quadruple from_differences(const Vec& xi1, const Vec& u, const Vec& v);
    Vec xi12() const { return xi1 - xi2; }
    Vec xi14() const { return xi1 - xi4; }
};

struct DefectPair {
    double direct = 0;    // q_m(xi1) + q_m(xi3) - q_m(xi2) - q_m(xi4)
    double bilinear = 0;  // <xi12, A_m xi14>
};

// Throws Error if the two evaluations differ by more than 1e-12 (relative to
// the size of the summands).
DefectPair dmvt_defect(const QuadraticSystem& sys, const Quadruple& quad, int m);

struct BiorthoOptions {
    double spacing = 0;  // 0 means sqrt(delta)
    double tolerance = 1;
    std::int64_t budget = 1000000;
    bool force = false;
    int certificate_resolution = 4096;
};

struct BiorthoReport {
    double delta = 0;
    double spacing = 0;
    double tolerance = 0;
    double worst_ratio = 0;
    Quadruple witness;
    std::int64_t count_admissible = 0;   // admissible ordered triples (xi1, xi2, xi3)
    std::int64_t classes_admissible = 0; // admissible realised (xi12, xi14) pairs
    std::int64_t candidates = 0;         // (xi12, xi14) pairs examined
    std::int64_t lattice_size = 0;
    double max_normalized_defect = 0;    // max over admissible nontrivial pairs of max_m |<u', A_m v'>|
    double certificate_floor = 0;
    nlohmann::json to_json() const;
};

// Exhaustive search over lattice quadruples in the closed unit ball. The
// defect depends only on (xi12, xi14), so those pairs are enumerated: for each
// xi12 the admissible xi14 lie in a parallelepiped cut out by d of the linear
// constraints, and each pair is kept if some lattice xi1 realises all four
// points inside the ball.
BiorthoReport certify_biorthogonality(const QuadraticSystem& sys, double delta, const BiorthoOptions& opt = {});

// Plain triple loop over (xi1, xi2, xi3); used as an oracle on small lattices.
BiorthoReport certify_biorthogonality_naive(const QuadraticSystem& sys, double delta, double tolerance,
                                            double spacing = 0);

// A quadruple with xi12 orthogonal to every A_m nu, xi14 along nu, both of the
// given length: admissible at every delta when nu is a degenerate direction.
Quadruple plant_degenerate_quadruple(const QuadraticSystem& sys, const Vec& nu, double length);

nlohmann::json quadruple_to_json(const Quadruple& q);

}  // namespace qc
