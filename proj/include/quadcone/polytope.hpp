#pragma once

#include "quadcone/types.hpp"

namespace qc {

// {x : A x <= b}.
struct HPolytope {
    Mat A;
    Vec b;
};

HPolytope box_halfspaces(const Vec& origin, const Mat& axes, const Vec& half);
HPolytope intersect(const HPolytope& p, const HPolytope& q);

// Vertices by enumeration of dim-subsets of constraints (deduplicated).
std::vector<Vec> enumerate_vertices(const HPolytope& p, double tol);

// Exact volume of a bounded polytope in dimension <= 4: pyramid decomposition
// over facets, recursing into each facet's hyperplane.
double polytope_volume(const HPolytope& p);

}  // namespace qc
