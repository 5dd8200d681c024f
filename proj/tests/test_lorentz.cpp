#include <cmath>
#include <random>

#include "doctest.h"
#include "quadcone/lorentz.hpp"
#include "quadcone/parallel.hpp"

using namespace qc;

namespace {
Vec v(std::initializer_list<double> x) {
    Vec r(static_cast<Eigen::Index>(x.size()));
    int i = 0;
    for (double e : x) r[i++] = e;
    return r;
}

Vec random_point(int D, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0, 1);
    Vec p(D);
    for (int i = 0; i < D; ++i) p[i] = g(rng);
    return p;
}
}  // namespace

TEST_CASE("identity at tau = 0, s = 1") {
    auto sys = catalog("complex_parabola");
    LorentzMap m(sys, Vec::Zero(2), 1.0);
    CHECK((m.matrix() - Mat::Identity(5, 5)).norm() < 1e-15);
    CHECK(m.jacobian_det() == 1.0);
}

TEST_CASE("parabola: explicit image of a point") {
    auto sys = catalog("parabola");  // q = xi^2
    LorentzMap m(sys, v({0.5}), 0.5);
    // (xi, zeta, h) = (0.75, 0.5625, 1): eta = 0.5, zeta' = 4*0.5625 - 2*0.5*1 - 0.5*4*0.5 = 0.25
    Vec img = m.apply(v({0.75, 0.5625, 1.0}));
    CHECK(img[0] == doctest::Approx(0.5));
    CHECK(img[1] == doctest::Approx(0.25));
    CHECK(img[2] == 1.0);
}

TEST_CASE("Jacobian determinant is s^-(d+2l)") {
    for (const char* name : {"parabola", "complex_parabola", "reflection_inversion_d3"}) {
        auto sys = catalog(name);
        for (double s : {1.0, 0.5, 0.125}) {
            Vec tau = Vec::Constant(sys.d, 0.2);
            LorentzMap m(sys, tau, s);
            const double expect = std::pow(s, -(sys.d + 2 * sys.l));
            CHECK(m.jacobian_det() == doctest::Approx(expect).epsilon(1e-14));
            CHECK(m.matrix().determinant() == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("property: linearity") {
    auto sys = catalog("random_sym_d3_l3(4)");
    LorentzMap m(sys, v({0.1, -0.2, 0.3}), 0.25);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        Vec p = random_point(7, rng), q = random_point(7, rng);
        Vec lhs = m.apply(2.0 * p - 3.0 * q);
        Vec rhs = 2.0 * m.apply(p) - 3.0 * m.apply(q);
        CHECK((lhs - rhs).norm() < 1e-11 * (1 + rhs.norm()));
    }
}

TEST_CASE("property: composition law") {
    auto sys = catalog("complex_parabola");
    std::mt19937_64 rng(11);
    LorentzMap a(sys, v({0.3, -0.1}), 0.5);
    LorentzMap pure_scale(sys, Vec::Zero(2), 0.25);
    LorentzMap b(sys, v({-0.4, 0.2}), 0.5);
    const auto ab = compose(a, pure_scale);
    CHECK(ab.s == 0.125);
    CHECK((ab.xi_tau - a.xi_tau).norm() == 0.0);
    const auto ac = compose(a, b);
    for (int t = 0; t < 100; ++t) {
        Vec p = random_point(5, rng);
        CHECK((pure_scale.apply(a.apply(p)) - ab.apply(p)).norm() < 1e-12 * (1 + p.norm()) * 64);
        CHECK((b.apply(a.apply(p)) - ac.apply(p)).norm() < 1e-12 * (1 + p.norm()) * 64);
    }
}

TEST_CASE("property: the cone is mapped to itself") {
    for (const char* name : {"parabola", "complex_parabola", "reflection_inversion_d3"}) {
        auto sys = catalog(name);
        LorentzMap m(sys, Vec::Constant(sys.d, 0.15), 0.25);
        CHECK(on_cone_error(m, 20000, 3) < 1e-12);
    }
}

TEST_CASE("normal basis is orthonormal and normal to the cone") {
    auto sys = catalog("complex_parabola");
    Vec xi = v({0.3, 0.4});
    const double h = 0.7;
    Mat N = cone_normal_basis(sys, xi, h);
    CHECK((N.transpose() * N - Mat::Identity(2, 2)).norm() < 1e-13);
    const double e = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vec dxi = Vec::Zero(2);
        double dh = 0;
        if (k < 2) dxi[k] = e; else dh = e;
        Vec t = (cone_point(sys, xi + dxi, h + dh) - cone_point(sys, xi - dxi, h - dh)) / (2 * e);
        CHECK((N.transpose() * t).norm() < 1e-8);
    }
}

TEST_CASE("distance to the cone recovers a normal offset") {
    auto sys = catalog("complex_parabola");
    Vec xi = v({0.2, -0.5});
    const double h = 0.8;
    Mat N = cone_normal_basis(sys, xi, h);
    for (double eps : {1e-2, 1e-4}) {
        Vec p = cone_point(sys, xi, h) + eps * N.col(0);
        auto cd = distance_to_cone(sys, p, xi + Vec::Constant(2, 0.01), h * 1.01);
        CHECK(cd.distance == doctest::Approx(eps).epsilon(eps * 10));
    }
}

TEST_CASE("neighbourhood rescaling factor is bounded") {
    auto sys = catalog("complex_parabola");
    for (double s : {0.5, 0.25}) {
        LorentzMap m(sys, v({0.3, 0.1}), s);
        auto rep = neighborhood_rescaling_check(m, 64, 2000, 5);
        CHECK(rep.min_factor >= 1.0 / 16);
        CHECK(rep.max_factor <= 16.0);
        CHECK(rep.max_on_cone_error < 1e-12);
        CHECK(rep.log_jacobian == doctest::Approx(-6 * std::log(s)));
    }
    LorentzMap id(sys, Vec::Zero(2), 1.0);
    auto rep = neighborhood_rescaling_check(id, 64, 500, 5);
    CHECK(rep.min_factor == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.max_factor == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("plank image is comparable to a plank at scale r s") {
    auto sys = catalog("parabola");
    for (double s : {0.5, 0.25}) {
        LorentzMap m(sys, v({0.2}), s);
        auto fit = plank_image_fit(m, v({0.2 + 0.5 * s}), 0.25, 64, 4);
        CHECK(fit.height_ratio == doctest::Approx(1.0));
        CHECK(fit.tangential_ratio < 2.0);
        CHECK(fit.tangential_ratio > 0.5);
        CHECK(fit.normal_ratio < 2.0);
        CHECK(fit.normal_ratio > 0.5);
    }
}

TEST_CASE("guards") {
    auto sys = catalog("parabola");
    CHECK_THROWS_AS(LorentzMap(sys, v({0.0}), 0.0), Error);
    CHECK_THROWS_AS(LorentzMap(sys, v({0.0, 0.0}), 0.5), DimensionMismatch);
    auto affine = make_system({Mat::Constant(1, 1, 2.0)}, {v({1.0})}, {0.0});
    CHECK_THROWS_AS(LorentzMap(affine, v({0.0}), 0.5), Error);
    LorentzMap m(sys, v({0.0}), 0.5);
    CHECK_THROWS_AS(m.apply(v({1.0, 2.0})), DimensionMismatch);
}
