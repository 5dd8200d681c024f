#include <cmath>
#include <random>

#include "doctest.h"
#include "quadcone/cover.hpp"
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

TEST_CASE("lattice on the closed unit ball") {
    auto L = make_lattice(1, 0.25);
    REQUIRE(L.points.size() == 9);
    CHECK(L.points.front()[0] == -1.0);
    CHECK(L.points.back()[0] == 1.0);
    auto L2 = make_lattice(2, 0.5);
    // (0,+-1),(+-1,0),(+-.5,+-.5),(+-.5,0),(0,+-.5),(0,0)
    CHECK(L2.points.size() == 13);
}

TEST_CASE("property: lattice covering radius and integer differences") {
    for (int d : {1, 2, 3}) {
        const double h = 0.2;
        auto L = make_lattice(d, h);
        auto rng = make_rng(5, d);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int t = 0; t < 500; ++t) {
            Vec x(d);
            do {
                for (int i = 0; i < d; ++i) x[i] = u(rng);
            } while (x.norm() > 1);
            // the nearest point of h Z^d may fall outside the ball near the
            // boundary; the bound is stated for interior points
            if (x.norm() > 1 - std::sqrt(d) * h) continue;
            CHECK((L.points[L.nearest(x)] - x).norm() <= std::sqrt(d) / 2 * h + 1e-12);
        }
        for (size_t i = 0; i < std::min<size_t>(L.points.size(), 30); ++i) {
            Vec q = (L.points[i] - L.points[0]) / h;
            for (int k = 0; k < d; ++k) CHECK(std::abs(q[k] - std::round(q[k])) < 1e-9);
        }
    }
}

TEST_CASE("parabola cap cover at r = 4") {
    auto sys = catalog("parabola");
    auto cover = build_cap_cover(sys, 4, false, 1);
    REQUIRE(cover.size() == 9);
    for (size_t i = 0; i < cover.size(); ++i) CHECK(cover[i].eta[0] == doctest::Approx(-1 + 0.25 * i));
}

TEST_CASE("cap membership of the base point and of a tangential offset") {
    auto sys = catalog("parabola");
    const double r = 4, D = 1;
    for (double e : {-0.5, 0.0, 0.75}) {
        auto cap = make_cap(sys, v({e}), r, D);
        auto f = frame_at(sys, v({e}), false);
        CHECK(cap.contains(f.center));
        CHECK_FALSE(cap.contains(f.center + 2 * D / r * f.tangents[0]));
    }
    auto sys2 = catalog("complex_parabola");
    auto cap2 = make_cap(sys2, v({0.25, -0.5}), 8, 4);
    CHECK(cap2.contains(frame_at(sys2, v({0.25, -0.5}), false).center));
}

TEST_CASE("property: box coordinates round trip") {
    auto rng = make_rng(9, 0);
    std::uniform_real_distribution<double> u(-1, 1);
    for (const char* name : {"parabola", "complex_parabola", "reflection_inversion_d3"}) {
        auto sys = catalog(name);
        for (int t = 0; t < 200; ++t) {
            Vec eta(sys.d);
            for (int i = 0; i < sys.d; ++i) eta[i] = 0.5 * u(rng);
            for (const Box& b : {make_cap(sys, eta, 8, 4), make_slab(sys, eta, 8, 4), make_plank(sys, eta, 0.25, 8, 4)}) {
                Vec c(b.dim());
                for (int k = 0; k < b.dim(); ++k) c[k] = u(rng) * b.half[k];
                const Vec p = b.point(c);
                CHECK((b.coords(p) - c).norm() <= 1e-12 * (1 + c.norm()) * 10);
                CHECK(b.contains(p));
            }
        }
    }
}

TEST_CASE("dilation is about the box centre") {
    auto sys = catalog("parabola");
    auto slab = make_slab(sys, v({0.0}), 8, 1);
    auto f = frame_at(sys, v({0.0}), true);
    CHECK(slab.contains(0.5 * f.center));
    CHECK_FALSE(slab.contains(0.4 * f.center));
    CHECK(slab.contains(0.4 * f.center, 2.0));
    CHECK_FALSE(slab.contains(0.0 * f.center, 2.0));
}

TEST_CASE("covering check on the parabola") {
    auto sys = catalog("parabola");
    auto cover = build_cap_cover(sys, 8, false, 4);
    auto rep = covering_check(cover, sys, 8, false, 100000, 1);
    CHECK(rep.covered == rep.samples);
    // caps of half-width 4/r on a 1/r lattice along a unit-speed curve
    CHECK(rep.max_multiplicity <= 9);
    auto thin = build_cap_cover(sys, 8, false, 0.01);
    CHECK_THROWS_AS(covering_check(thin, sys, 8, false, 1000, 1), UncoveredSample);
    try {
        covering_check(thin, sys, 8, false, 1000, 1);
    } catch (const UncoveredSample& e) {
        CHECK(e.witness.size() == 2);
    }
}

TEST_CASE("covering check on cones") {
    for (const char* name : {"parabola", "complex_parabola"}) {
        auto sys = catalog(name);
        auto cover = build_cap_cover(sys, 8, true, 4);
        auto rep = covering_check(cover, sys, 8, true, 20000, 2);
        CHECK(rep.covered == rep.samples);
        CHECK(rep.max_multiplicity >= 1);
    }
}

TEST_CASE("shell classification") {
    auto sys = catalog("parabola");
    const double r = 16;
    auto fams = build_plank_families(sys, r, 4);
    REQUIRE(fams.size() == 5);
    // lattice point, height 1
    auto f = frame_at(sys, v({0.5}), true);
    CHECK(shell_classify(f.center, fams).sigma == 1.0);
    // far from the cone
    Vec far = f.center;
    far[1] += 1.0;
    CHECK_THROWS_AS(shell_classify(far, fams), NotInCone);
    // on the cone at height 0.9 sigma0^2
    for (double s0 : {0.5, 0.25, 0.125}) {
        const double h = 0.9 * s0 * s0;
        auto g = frame_at(sys, v({0.25}), true);
        const double s = shell_classify(h * g.center, fams).sigma;
        CHECK(s <= 2 * s0);
        CHECK(s >= s0 / 2);
    }
}

TEST_CASE("property: shells partition the union of CP_1") {
    auto sys = catalog("parabola");
    const double r = 16;
    auto fams = build_plank_families(sys, r, 4);
    auto rng = make_rng(21, 0);
    std::uniform_real_distribution<double> u(-1, 1);
    int classified = 0;
    for (int t = 0; t < 3000; ++t) {
        const auto& top = fams.front();
        const Box& pl = top.planks[static_cast<size_t>((u(rng) + 1) / 2 * (top.planks.size() - 1))];
        Vec c(pl.dim());
        for (int k = 0; k < pl.dim(); ++k) c[k] = u(rng) * pl.half[k];
        c[0] *= std::pow(std::abs(u(rng)), 3);  // favour small heights
        const Vec w = pl.point(c);
        auto sm = shell_classify(w, fams);
        ++classified;
        int in_shell = 0;
        for (size_t k = 0; k < fams.size(); ++k) {
            const bool here = in_family(fams[k], w);
            const bool below = k + 1 < fams.size() && in_family(fams[k + 1], w);
            if (here && !below) {
                ++in_shell;
                CHECK(fams[k].sigma == sm.sigma);
            }
        }
        CHECK(in_shell >= 1);
        // uniqueness: the first shell met walking down is the one reported
    }
    CHECK(classified == 3000);
}

TEST_CASE("sorting") {
    auto sys = catalog("parabola");
    const double r = 32;
    auto fam = build_plank_family(sys, 0.25, r, 4);
    // omega = 0 sorts to the nearest lattice point
    const Vec xi = v({0.3125});
    const Vec eta = sort_into_plank(sys, Vec::Zero(3), xi, fam, r, 4);
    CHECK(eta[0] == doctest::Approx(fam.lattice.points[fam.lattice.nearest(xi)][0]));
    // difference of two slab points with equal heights sigma^2
    auto f = frame_at(sys, xi, true);
    const double s2 = 0.25 * 0.25;
    const Vec p1 = 0.7 * f.center + 0.05 * f.tangents[0];
    const Vec p2 = (0.7 - s2) * f.center + 0.02 * f.tangents[0];
    const Vec om = p1 - p2;
    const Vec e2 = sort_into_plank(sys, om, xi, fam, r, 4);
    CHECK(std::abs(e2[0] - xi[0]) <= 4 / (r * 0.25) + 1e-12);
    CHECK(make_plank(sys, e2, 0.25, r, 4).contains(om, 10));
}

TEST_CASE("overlap counting") {
    auto sys = catalog("parabola");
    const double r = 16;
    auto fam = build_plank_family(sys, 0.5, r, 4);
    auto f = frame_at(sys, fam.lattice.points[3], true);
    CHECK(count_plank_overlap(fam, 0.25 * f.center) >= 1);
}

TEST_CASE("overlap campaign: sorting always succeeds, counts are finite") {
    auto sys = catalog("parabola");
    for (double s : {1.0, 0.25, 0.0625}) {
        auto c = overlap_campaign(sys, 16, s, 4, 4, 10, 2000, 3);
        CHECK(c.sort_success == 2000);
        CHECK(c.max_count >= 1);
        CHECK(c.max_count <= 2 * 16 * s + 1);
    }
}

TEST_CASE("overlap campaign on the complex parabola cone") {
    auto sys = catalog("complex_parabola");
    auto c = overlap_campaign(sys, 16, 0.25, 4, 4, 10, 300, 4);
    CHECK(c.sort_success == 300);
}

TEST_CASE("property: overlap campaign is deterministic across thread counts") {
    auto sys = catalog("parabola");
    set_threads(1);
    auto a = overlap_campaign(sys, 32, 0.25, 4, 4, 10, 1000, 8);
    set_threads(3);
    auto b = overlap_campaign(sys, 32, 0.25, 4, 4, 10, 1000, 8);
    set_threads(1);
    CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("representation constant is finite and of order one") {
    auto sys = catalog("parabola");
    for (double s : {1.0, 0.25}) {
        const double C = measure_representation_constant(sys, 32, s, 4, 5000, 1);
        CHECK(C >= 1.0);
        CHECK(C < 10.0);
    }
}
