#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "quadcone/parallel.hpp"
#include "quadcone/sqfn.hpp"

using namespace qc;

namespace {
Vec v1(double x) {
    Vec r(1);
    r[0] = x;
    return r;
}

SpectralField translated(const SpectralField& f, const Vec& x0, double unimodular) {
    SpectralField g = f;
    for (size_t i = 0; i < g.size(); ++i)
        g.coeffs[i] *= std::polar(1.0, unimodular - 2 * M_PI * f.frequency(i).dot(x0));
    return g;
}
}  // namespace

TEST_CASE("cap set basics") {
    auto par = catalog("parabola");
    CHECK_THROWS_AS(make_caps(par, 0.0, false), BadResolution);
    CHECK_THROWS_AS(make_caps(par, 2.0, false), BadResolution);
    auto cs = make_caps(par, 1.0 / 64, false);
    CHECK(cs.spacing == doctest::Approx(0.25));
    for (size_t c = 0; c < cs.centers.size(); ++c) CHECK(cs.find(cs.index[c]) == int(c));
    CHECK(cs.find({1000}) == -1);
    LatticeOptions coarse;
    coarse.tangential = 2;
    CHECK_THROWS_AS(lattice_spacing(par, 1.0 / 64, false, coarse), ResolutionTooCoarse);
}

TEST_CASE("profiles") {
    CHECK(partition_profile(0.0) == 1.0);
    CHECK(partition_profile(0.5) == 1.0);
    CHECK(partition_profile(1.0) == 0.0);
    CHECK(partition_profile(-0.75) == doctest::Approx(partition_profile(0.75)));
    double prev = 1;
    for (double u = 0.5; u <= 1.0; u += 0.01) {
        CHECK(partition_profile(u) <= prev + 1e-15);
        prev = partition_profile(u);
    }
    CHECK(bump(0.0) == 1.0);
    CHECK(bump(1.0) == 0.0);
}

TEST_CASE("partition completeness and almost orthogonality") {
    for (bool conical : {false, true}) {
        auto par = catalog("parabola");
        auto cs = make_caps(par, 1.0 / 64, conical);
        auto f = synthesize_field(par, cs, 9, 0);
        auto proj = cap_project(f, cs);
        std::vector<cplx> sum(f.size(), 0.0);
        double l2parts = 0;
        for (const auto& p : proj) {
            double e = 0;
            for (size_t j = 0; j < p.terms.size(); ++j) {
                sum[p.terms[j]] += p.coeffs[j];
                e += std::norm(p.coeffs[j]);
            }
            l2parts += e;
        }
        double err = 0;
        for (size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(sum[i] - f.coeffs[i]));
        CHECK(err < 1e-10);
        const double l2 = f.l2_squared();
        CHECK(l2parts >= 0.5 * l2);
        CHECK(l2parts <= 2.0 * l2);
    }
}

TEST_CASE("single cap field has ratio one") {
    auto par = catalog("parabola");
    for (bool conical : {false, true}) {
        auto cs = make_caps(par, 1.0 / 64, conical);
        SynthesisOptions o;
        o.packets = 1;
        auto f = synthesize_field(par, cs, 4, 0, o);
        auto proj = cap_project(f, cs);
        CHECK(proj.size() == 1);
        CHECK(sq_ratio(f, proj) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("spectral and grid square-function ratios agree") {
    auto par = catalog("parabola");
    for (bool conical : {false, true}) {
        auto cs = make_caps(par, 1.0 / 16, conical);
        auto f = synthesize_field(par, cs, 3, 0);
        auto proj = cap_project(f, cs);
        CHECK(sq_ratio(f, proj) == doctest::Approx(sq_ratio_grid(f, proj)).epsilon(1e-9));
    }
}

TEST_CASE("synthesis is deterministic and thread independent") {
    auto par = catalog("parabola");
    auto cs = make_caps(par, 1.0 / 64, false);
    auto a = synthesize_field(par, cs, 17, 3);
    auto b = synthesize_field(par, cs, 17, 3);
    CHECK(a.keys == b.keys);
    CHECK(a.coeffs == b.coeffs);
    auto c = synthesize_field(par, cs, 17, 4);
    CHECK(c.coeffs != a.coeffs);
    set_threads(1);
    auto r1 = sq_ensemble(par, 1.0 / 64, false, 6, 5);
    set_threads(4);
    auto r4 = sq_ensemble(par, 1.0 / 64, false, 6, 5);
    set_threads(0);
    CHECK(r1.to_json().dump() == r4.to_json().dump());
}

TEST_CASE("ensemble ratios stay in range") {
    auto par = catalog("parabola");
    auto rep = sq_ensemble(par, 1.0 / 64, false, 8, 2);
    CHECK(rep.max_ratio >= rep.stress_ratio);
    CHECK(rep.min_ratio > 0.5);
    CHECK(rep.max_ratio < 3.0);
}

TEST_CASE("Kakeya and two-scale quantities are invariant under translation and phase") {
    auto par = catalog("parabola");
    const double r = 8;
    auto cs = make_caps(par, 1 / (r * r), true);
    auto f = synthesize_field(par, cs, 1, 2);
    Vec x0(3);
    x0 << 0.37, -1.2, 2.5;
    auto g = translated(f, x0, 0.9);
    auto kf = kakeya_check(f, cs, r), kg = kakeya_check(g, cs, r);
    CHECK_FALSE(kf.trivial);
    CHECK(kf.ratio == doctest::Approx(kg.ratio).epsilon(1e-10));
    CHECK(two_scale_ratio(f, cs, 4) == doctest::Approx(two_scale_ratio(g, cs, 4)).epsilon(1e-10));
    CHECK_THROWS(kakeya_check(f, cs, 16));
}

TEST_CASE("zero field is trivial") {
    auto par = catalog("parabola");
    auto cs = make_caps(par, 1.0 / 64, true);
    auto f = synthesize_field(par, cs, 1, 0);
    for (auto& c : f.coeffs) c = 0;
    auto k = kakeya_check(f, cs, 8);
    CHECK(k.trivial);
    CHECK(two_scale_ratio(f, cs, 4) == 0.0);
}

TEST_CASE("two-scale ratio at r = R and argument checks") {
    auto par = catalog("parabola");
    auto rep = measure_S(par, 16, 16, 3, 1);
    CHECK(rep.S_emp > 0);
    CHECK(std::isfinite(rep.S_emp));
    CHECK(rep.ratios.size() == 3);
    CHECK_THROWS(measure_S(par, 32, 16, 3, 1));
    CHECK_THROWS(measure_S(par, 4, 16, 0, 1));
}

TEST_CASE("tube geometry") {
    auto par = catalog("parabola");
    SUBCASE("identical tubes") {
        auto t = tube_intersection(par, 256, v1(0.1), v1(0.1), TubeMethod::Exact);
        CHECK(t.volume == doctest::Approx(t.single_volume).epsilon(1e-9));
        CHECK(t.single_volume == doctest::Approx(std::pow(256.0, 2.5)).epsilon(1e-12));
    }
    SUBCASE("doubling K multiplies the volume by 2^(l+1)") {
        const double s = 0.25;
        auto a = tube_intersection(par, 1024, v1(-s / 2), v1(s / 2), TubeMethod::Exact);
        auto b = tube_intersection(par, 2048, v1(-s / 2), v1(s / 2), TubeMethod::Exact);
        CHECK(b.volume / a.volume == doctest::Approx(4.0).epsilon(0.01));
    }
    SUBCASE("exact and Monte Carlo agree") {
        auto e = tube_intersection(par, 256, v1(-0.125), v1(0.125), TubeMethod::Exact);
        auto m = tube_intersection(par, 256, v1(-0.125), v1(0.125), TubeMethod::MonteCarlo, 1 << 20, 3);
        CHECK(std::abs(e.volume - m.volume) < 5 * m.std_error);
        auto m2 = tube_intersection(par, 256, v1(-0.125), v1(0.125), TubeMethod::MonteCarlo, 1 << 20, 3);
        CHECK(m.volume == m2.volume);
    }
    SUBCASE("errors") {
        auto cp = catalog("complex_parabola");
        Vec a = Vec::Zero(2), b = Vec::Zero(2);
        b[0] = 0.5;
        CHECK_THROWS_AS(tube_intersection(cp, 256, a, b, TubeMethod::Exact), MethodInfeasible);
        CHECK_THROWS(tube_intersection(par, 256, v1(0.0), v1(0.01), TubeMethod::Exact));
        CHECK_THROWS_AS(tube_intersection(par, 256, a, b, TubeMethod::Exact), DimensionMismatch);
    }
}

TEST_CASE("log-log slope") {
    CHECK(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS(loglog_slope({1}, {1}));
}
