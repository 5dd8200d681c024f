#include <cmath>
#include <random>

#include "doctest.h"
#include "quadcone/parallel.hpp"
#include "quadcone/quadform.hpp"

using namespace qc;

namespace {
Vec v(std::initializer_list<double> x) {
    Vec r(static_cast<Eigen::Index>(x.size()));
    int i = 0;
    for (double e : x) r[i++] = e;
    return r;
}
}  // namespace

TEST_CASE("parabola frame at the origin") {
    auto sys = catalog("parabola");
    auto f = frame_at(sys, v({0.0}), false);
    CHECK(f.tangents[0].isApprox(v({1, 0})));
    CHECK(f.normals[0].isApprox(v({0, 1})));
}

TEST_CASE("parabola frame at 0.5") {
    auto sys = catalog("parabola");
    auto f = frame_at(sys, v({0.5}), false);
    // q = xi^2, so dq(0.5) = 1
    CHECK(f.tangents[0].isApprox(v({1, 1})));
    CHECK(f.normals[0].isApprox(v({-1, 1})));
}

TEST_CASE("complex parabola tangents at (1,0)") {
    auto sys = catalog("complex_parabola");
    auto f = frame_at(sys, v({1, 0}), false);
    CHECK(f.tangents[0].isApprox(v({1, 0, 2, 0})));
    CHECK(f.tangents[1].isApprox(v({0, 1, 0, 2})));
}

TEST_CASE("conical frame embeds vectors and centre") {
    auto sys = catalog("complex_parabola");
    auto f = frame_at(sys, v({0.3, -0.2}), true);
    REQUIRE(f.ambient() == 5);
    CHECK(f.center[4] == 1.0);
    CHECK(f.center.segment(2, 2).isApprox(sys.Q(v({0.3, -0.2}))));
    for (const auto& t : f.tangents) CHECK(t[4] == 0.0);
}

TEST_CASE("frame dimension mismatch") {
    auto sys = catalog("complex_parabola");
    CHECK_THROWS_AS(frame_at(sys, v({0.1}), false), DimensionMismatch);
}

TEST_CASE("property: tangents are orthogonal to normals") {
    auto rng = make_rng(11, 0);
    std::uniform_real_distribution<double> u(-0.57, 0.57);
    for (const auto& name : catalog_names()) {
        auto sys = catalog(name);
        for (int trial = 0; trial < 200; ++trial) {
            Vec eta(sys.d);
            for (int i = 0; i < sys.d; ++i) eta[i] = u(rng);
            for (bool conical : {false, true}) {
                auto f = frame_at(sys, eta, conical);
                for (const auto& t : f.tangents)
                    for (const auto& n : f.normals) CHECK(std::abs(t.dot(n)) <= 1e-12);
                for (int i = 0; i < sys.d; ++i) CHECK(f.tangents[i].head(sys.d).isApprox(Vec::Unit(sys.d, i)));
                for (int j = 0; j < sys.l; ++j)
                    CHECK(f.normals[j].segment(sys.d, sys.l).isApprox(Vec::Unit(sys.l, j)));
            }
        }
    }
}

TEST_CASE("non-symmetric generator needs generator_only") {
    Mat R(2, 2);
    R << 0, 1, -1, 0;
    CHECK_THROWS_AS(make_system({Mat::Identity(2, 2), R}), DimensionMismatch);
    CHECK_NOTHROW(make_system({Mat::Identity(2, 2), R}, {}, {}, true));
}

TEST_CASE("rotated complex parabola certificate is 1") {
    auto cert = certify_transversality(catalog("complex_parabola_rotated"), 10000);
    CHECK(cert.c_min == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(cert.witness_nu.norm() - 1) < 1e-12);
}

TEST_CASE("d = l = 1 certificate") {
    Mat A(1, 1);
    A << 1;
    auto cert = certify_transversality(make_system({A}), 2);
    CHECK(cert.c_min == 1.0);
    CHECK(cert.certified_floor == 1.0);
}

TEST_CASE("certificate errors") {
    auto sys = catalog("complex_parabola");
    CHECK_THROWS_AS(certify_transversality(sys, 1), BadResolution);
    Mat A = Mat::Identity(2, 2);
    CHECK_THROWS_AS(certify_transversality(make_system({A}), 100), StructurallyDegenerate);
}

TEST_CASE("three random symmetric 3x3 forms have a vanishing determinant") {
    auto sys = catalog("random_sym_d3_l3(7)");
    auto coarse = certify_transversality(sys, 500);
    auto fine = certify_transversality(sys, 20000);
    CHECK(coarse.c_min <= 10 * coarse.grid_spacing);
    CHECK(fine.c_min <= 10 * fine.grid_spacing);
    CHECK(fine.grid_min <= coarse.grid_min + coarse.lipschitz * coarse.covering_radius);
    CHECK(fine.c_min < 1e-6);
}

TEST_CASE("reflection/inversion family has a positive floor") {
    auto sys = catalog("reflection_inversion_d3");
    CHECK(sys.l == 7);
    CHECK(index_subsets(7, 3).size() == 35);
    auto a = certify_transversality(sys, 10000);
    auto b = certify_transversality(sys, 40000);
    CHECK(a.c_min > 0.1);
    CHECK(b.c_min == doctest::Approx(a.c_min).epsilon(1e-3));
}

TEST_CASE("property: reported subset realises the reported determinant") {
    for (const auto& name : catalog_names()) {
        auto sys = catalog(name);
        if (sys.l < sys.d) continue;
        auto cert = certify_transversality(sys, 2000, 10);
        // independent recomputation by brute force over all d-subsets
        double best = 0;
        for (const auto& s : index_subsets(sys.l, sys.d)) {
            Mat M(sys.d, sys.d);
            for (int k = 0; k < sys.d; ++k) M.col(k) = sys.A[s[k]] * cert.witness_nu;
            best = std::max(best, std::abs(M.determinant()));
        }
        CHECK(std::abs(best - cert.c_min) <= 1e-12);
        CHECK(std::abs(subset_det(sys, cert.witness_subset, cert.witness_nu)) ==
              doctest::Approx(cert.c_min).epsilon(1e-12));
    }
}

TEST_CASE("wedge volume") {
    auto par = catalog("parabola");
    CHECK(tangent_wedge_volume(par, v({0.3}), v({0.3})) == doctest::Approx(0.0).epsilon(1e-12));
    for (double s : {0.05, 0.1, 0.5, 1.0}) {
        // Gram of (1,0),(1,2s): det = 4 s^2
        CHECK(tangent_wedge_volume(par, v({0.0}), v({s})) == doctest::Approx(2 * s).epsilon(1e-12));
    }
    auto cp = catalog("complex_parabola");
    for (double s : {0.05, 0.25, 1.0}) {
        const double w = tangent_wedge_volume(cp, v({0, 0}), v({s, 0}));
        Mat T(4, 4);
        T << 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 2 * s, 0, 0, 0, 0, 2 * s;
        CHECK(w == doctest::Approx(std::abs(T.determinant())).epsilon(1e-10));
        CHECK(w >= 1.0 * s * s);
    }
}

TEST_CASE("property: wedge volume lower bound for certified systems") {
    auto rng = make_rng(3, 1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (const char* name : {"parabola", "complex_parabola"}) {
        auto sys = catalog(name);
        double cprime = 1e300;
        for (int trial = 0; trial < 2000; ++trial) {
            Vec a(sys.d), dir(sys.d);
            for (int i = 0; i < sys.d; ++i) dir[i] = u(rng);
            dir.normalize();
            const double s = 0.05 + 0.95 * (u(rng) + 1) / 2;
            for (int i = 0; i < sys.d; ++i) a[i] = u(rng);
            a *= 0.45 / std::max(1.0, a.norm());
            Vec b = a + s * dir;
            if (b.norm() > 1) continue;
            cprime = std::min(cprime, tangent_wedge_volume(sys, a, b) / std::pow(s, sys.d));
        }
        CHECK(cprime > 0.1);
    }
}

TEST_CASE("json round trip") {
    for (const auto& name : catalog_names()) {
        auto sys = catalog(name);
        auto back = system_from_json(system_to_json(sys));
        REQUIRE(back.d == sys.d);
        REQUIRE(back.l == sys.l);
        for (int k = 0; k < sys.l; ++k) CHECK(back.A[k] == sys.A[k]);
        CHECK(back.generator_only == sys.generator_only);
    }
    auto nested = resolve_system(R"({"d":2,"l":1,"A":[[[1,0],[0,3]]]})");
    CHECK(nested.A[0](1, 1) == 3.0);
    CHECK_THROWS_AS(system_from_json(nlohmann::json::parse(R"({"d":1,"l":1,"A":[[1]],"bogus":1})")),
                    ConfigError);
}

TEST_CASE("affine parts enter q") {
    Mat A(1, 1);
    A << 2;
    auto sys = make_system({A}, {v({1.0})}, {0.5});
    CHECK(sys.q(0, v({2.0})) == doctest::Approx(0.5 * 8 + 2 + 0.5));
    CHECK_FALSE(sys.pure());
}
