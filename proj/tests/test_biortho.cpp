#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "quadcone/biortho.hpp"
#include "quadcone/parallel.hpp"

using namespace qc;

namespace {
Vec v(std::initializer_list<double> x) {
    Vec r(static_cast<Eigen::Index>(x.size()));
    int i = 0;
    for (double e : x) r[i++] = e;
    return r;
}

}  // namespace

TEST_CASE("trivial quadruple has zero defect") {
    auto sys = catalog("complex_parabola");
    auto q = Quadruple::from_three(v({0.3, 0.1}), v({0.3, 0.1}), v({-0.2, 0.4}));
    for (int m = 0; m < 2; ++m) {
        auto p = dmvt_defect(sys, q, m);
        CHECK(p.direct == doctest::Approx(0).epsilon(1e-14));
        CHECK(p.bilinear == 0.0);
    }
}

TEST_CASE("parabola defect by hand") {
    auto sys = catalog("parabola");
    Quadruple q{v({0.5}), v({0.3}), v({0.1}), v({0.3})};
    auto p = dmvt_defect(sys, q, 0);
    CHECK(p.direct == doctest::Approx(0.08).epsilon(1e-14));
    CHECK(p.bilinear == doctest::Approx(0.08).epsilon(1e-14));
}

TEST_CASE("property: double mean value identity on random quadruples") {
    auto rng = make_rng(1, 2);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (const auto& name : catalog_names()) {
        auto sys = catalog(name);
        for (int t = 0; t < 20000; ++t) {
            Vec a(sys.d), b(sys.d), c(sys.d);
            for (int i = 0; i < sys.d; ++i) {
                a[i] = u(rng);
                b[i] = u(rng);
                c[i] = u(rng);
            }
            auto q = Quadruple::from_three(a, b, c);
            CHECK((q.xi1 + q.xi3 - q.xi2 - q.xi4).norm() <= 1e-14);
            for (int m = 0; m < sys.l; ++m) CHECK_NOTHROW(dmvt_defect(sys, q, m));
        }
    }
}

TEST_CASE("affine parts cancel in the defect") {
    Mat A(2, 2);
    A << 1, 0.3, 0.3, -2;
    auto sys = make_system({A}, {v({0.7, -1.1})}, {3.0});
    auto q = Quadruple::from_three(v({0.1, 0.2}), v({-0.3, 0.5}), v({0.4, -0.1}));
    auto p = dmvt_defect(sys, q, 0);
    CHECK(std::abs(p.direct - p.bilinear) < 1e-13);
}

TEST_CASE("pruned enumeration agrees with the naive triple loop") {
    for (const char* name : {"parabola", "complex_parabola", "complex_parabola_rotated"}) {
        auto sys = catalog(name);
        for (double tol : {1.0, 2.0, 4.0}) {
            BiorthoOptions o;
            o.tolerance = tol;
            auto a = certify_biorthogonality(sys, 1.0 / 16, o);
            auto b = certify_biorthogonality_naive(sys, 1.0 / 16, tol);
            CHECK(a.count_admissible == b.count_admissible);
            CHECK(a.worst_ratio == doctest::Approx(b.worst_ratio).epsilon(1e-12));
            CHECK(a.lattice_size == b.lattice_size);
        }
    }
}

TEST_CASE("complex parabola matches the Gaussian-integer oracle") {
    auto sys = catalog("complex_parabola");
    for (double tol : {1.0, 2.0, 4.0}) {
        const double expect = oracle::gaussian_oracle(tol);
        const double bound = std::pow(2.0, -0.25) * std::sqrt(tol);
        CHECK(expect <= bound + 1e-12);
        for (int k : {6, 8}) {
            BiorthoOptions o;
            o.tolerance = tol;
            auto rep = certify_biorthogonality(sys, std::pow(2.0, -k), o);
            CHECK(rep.worst_ratio == doctest::Approx(expect).epsilon(1e-12));
            if (rep.worst_ratio > 0) {
                // witness is a genuine admissible quadruple
                for (int m = 0; m < sys.l; ++m)
                    CHECK(std::abs(dmvt_defect(sys, rep.witness, m).bilinear) <= tol * rep.delta * (1 + 1e-9));
                for (const Vec* x : {&rep.witness.xi1, &rep.witness.xi2, &rep.witness.xi3, &rep.witness.xi4})
                    CHECK(x->norm() <= 1 + 1e-12);
            }
        }
    }
}

TEST_CASE("property: worst ratio is monotone in the tolerance") {
    auto sys = catalog("complex_parabola");
    double prev = -1;
    for (double tol : {0.5, 1.0, 2.0, 3.0, 4.0, 8.0}) {
        BiorthoOptions o;
        o.tolerance = tol;
        auto rep = certify_biorthogonality(sys, 1.0 / 64, o);
        CHECK(rep.worst_ratio >= prev);
        prev = rep.worst_ratio;
    }
}

TEST_CASE("property: symmetry of the worst ratio under swaps") {
    auto sys = catalog("complex_parabola");
    BiorthoOptions o;
    o.tolerance = 4;
    auto rep = certify_biorthogonality(sys, 1.0 / 64, o);
    const auto& w = rep.witness;
    Quadruple s24{w.xi1, w.xi4, w.xi3, w.xi2};
    Quadruple s13{w.xi3, w.xi2, w.xi1, w.xi4};
    for (const auto& q : {s24, s13}) {
        CHECK(std::min(q.xi12().norm(), q.xi14().norm()) / std::sqrt(rep.delta) ==
              doctest::Approx(rep.worst_ratio));
        for (int m = 0; m < sys.l; ++m) CHECK(std::abs(dmvt_defect(sys, q, m).direct) <= 4 * rep.delta * (1 + 1e-9));
    }
}

TEST_CASE("property: scale stability for certified systems") {
    for (const char* name : {"parabola", "complex_parabola"}) {
        auto sys = catalog(name);
        BiorthoOptions o;
        o.tolerance = 2;
        double lo = 1e300, hi = 0;
        for (int k = 6; k <= 10; ++k) {
            auto rep = certify_biorthogonality(sys, std::pow(2.0, -k), o);
            lo = std::min(lo, rep.worst_ratio);
            hi = std::max(hi, rep.worst_ratio);
        }
        CHECK(hi <= 3 * std::sqrt(2.0));
        CHECK(hi - lo <= 1e-12);
    }
}

TEST_CASE("budget and transversality guards") {
    auto sys = catalog("complex_parabola");
    BiorthoOptions o;
    o.budget = 100;
    CHECK_THROWS_AS(certify_biorthogonality(sys, 1.0 / 256, o), TooLarge);
    auto bad = catalog("random_sym_d3_l3(7)");
    CHECK_THROWS_AS(certify_biorthogonality(bad, 1.0 / 16), NotTransversal);
    CHECK_THROWS_AS(certify_biorthogonality(sys, 0.5), Error);
}

TEST_CASE("degenerate system: planted quadruples stay admissible as delta shrinks") {
    auto sys = catalog("random_sym_d3_l3(7)");
    auto cert = certify_transversality(sys, 20000);
    REQUIRE(cert.c_min < 1e-6);
    double prev = 0;
    for (int k = 6; k <= 14; k += 2) {
        const double delta = std::pow(2.0, -k);
        auto q = plant_degenerate_quadruple(sys, cert.witness_nu, 0.5);
        for (int m = 0; m < sys.l; ++m) CHECK(std::abs(dmvt_defect(sys, q, m).bilinear) <= delta);
        const double ratio = std::min(q.xi12().norm(), q.xi14().norm()) / std::sqrt(delta);
        CHECK(ratio > prev);
        prev = ratio;
    }
    // the forced lattice search also finds ratios beyond the transversal bound
    BiorthoOptions o;
    o.force = true;
    o.tolerance = 2;
    auto rep = certify_biorthogonality(sys, 1.0 / 16, o);
    CHECK(rep.certificate_floor == 0.0);
    CHECK(rep.worst_ratio >= 0.0);
}

TEST_CASE("property: enumeration is deterministic across thread counts") {
    auto sys = catalog("complex_parabola");
    BiorthoOptions o;
    o.tolerance = 4;
    set_threads(1);
    auto a = certify_biorthogonality(sys, 1.0 / 256, o);
    set_threads(4);
    auto b = certify_biorthogonality(sys, 1.0 / 256, o);
    set_threads(1);
    CHECK(a.to_json().dump() == b.to_json().dump());
}
