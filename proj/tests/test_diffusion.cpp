#include <doctest.h>

#include <cmath>
#include <string>

#include "qbrown/diffusion.hpp"
#include "qbrown/error.hpp"
#include "test_support.hpp"

using namespace qbrown;
using qbrown::testing::log_uniform;
using qbrown::testing::rel_gap;

namespace {

SystemParams params(double gamma, double omega0, double T) {
    SystemParams p;
    p.gamma = gamma;
    p.omega0 = omega0;
    p.temperature = T;
    return p;
}

// Free-particle breakdown temperature: root of (x coth x - 1)/x^2 = 1/4, T = 1/x.
constexpr double kFreeTc = 0.416778279800482;

}  // namespace

TEST_CASE("high-T diffusion constants for gamma = omega0") {
    const double T = 100.0;
    const DiffusionConstants d = diffusion_constants(params(1.0, 1.0, T));
    CHECK(rel_gap(d.Dpp / (2.0 * T), 1.0 + 1.0 / (3.0 * T * T)) < 1e-3);
    CHECK(rel_gap(d.Dqq, 1.0 / (6.0 * T)) < 1e-3);
    CHECK(rel_gap(d.Dpq, 1.0 / (3.0 * T)) < 1e-3);
}

TEST_CASE("high_t_diffusion closed forms") {
    const SystemParams p = params(1.3, 0.4, 7.0);
    const DiffusionConstants h = high_t_diffusion(p);
    const double kT = 7.0, g = 1.3;
    CHECK(h.Dpp / (2.0 * kT * g) - 1.0 == doctest::Approx(g * g / (3.0 * kT * kT)).epsilon(1e-12));
    CHECK(h.Dqq == doctest::Approx(g / (6.0 * kT)).epsilon(1e-14));
    CHECK(h.Dpq == doctest::Approx(g * g / (3.0 * kT)).epsilon(1e-14));
    const DiffusionConstants other = high_t_diffusion(p.with_omega0(40.0));
    CHECK(other.Dpp == h.Dpp);
    CHECK(other.Dqq == h.Dqq);
    CHECK(other.Dpq == h.Dpq);
}

TEST_CASE("full constants approach the high-T forms at kT = 50 hbar gamma") {
    for (double w : {0.1, 1.0, 10.0}) {
        const SystemParams p = params(1.0, w, 50.0 * std::max(1.0, w));
        const DiffusionConstants d = diffusion_constants(p);
        const DiffusionConstants h = high_t_diffusion(p);
        CAPTURE(w);
        CHECK(rel_gap(d.Dpp, h.Dpp) < 0.01);
        CHECK(rel_gap(d.Dqq, h.Dqq) < 0.01);
        CHECK(rel_gap(d.Dpq, h.Dpq) < 0.01);
    }
}

TEST_CASE("free-particle diffusion limit") {
    const SystemParams p = params(1.0, 1e-8, 0.8);
    const DiffusionConstants d = diffusion_constants(p);
    const DiffusionConstants f = free_particle_diffusion(p);
    CHECK(rel_gap(d.Dpp, f.Dpp) < 1e-6);
    CHECK(rel_gap(d.Dqq, f.Dqq) < 1e-6);
    CHECK(rel_gap(d.Dpq, f.Dpq) < 1e-6);
}

TEST_CASE("constants are recomputable from the stored alpha pair") {
    for (int k = 0; k < 200; ++k) {
        const SystemParams p = params(log_uniform(0.1, 10.0), log_uniform(0.01, 10.0), log_uniform(0.1, 100.0));
        const DiffusionConstants d = diffusion_constants(p);
        const DiffusionConstants again = diffusion_from_alpha(p, d.source);
        REQUIRE(again.Dpp == d.Dpp);
        REQUIRE(again.Dqq == d.Dqq);
        REQUIRE(again.Dpq == d.Dpq);
        if (positivity_delta(d).positive) {
            CHECK(d.Dpp > 0.0);
            CHECK(d.Dqq >= 0.0);
        }
        // Dpp*Dqq - Dpq^2 = 4 (kT gamma)^2 alpha alpha'
        const double kT = p.temperature;
        const double lhs = d.Dpp * d.Dqq - d.Dpq * d.Dpq;
        const double rhs = 4.0 * kT * kT * p.gamma * p.gamma * d.source.alpha * d.source.alpha_prime;
        CHECK(rel_gap(lhs, rhs) < 1e-9);
    }
}

TEST_CASE("positivity functional") {
    SUBCASE("high-T constant hbar^2 gamma^2 / 12") {
        const PositivityReport r = positivity_delta(diffusion_constants(params(1.0, 1.0, 100.0)));
        CHECK(r.positive);
        CHECK(std::abs(r.delta * 12.0 - 1.0) < 0.02);
        const PositivityReport r3 = positivity_delta(diffusion_constants(params(1.0, 1.0, 1000.0)));
        CHECK(std::abs(r3.delta - 1.0 / 12.0) < 1e-3);
    }
    SUBCASE("without anomalous terms Delta is -hbar^2 gamma^2 / 4") {
        DiffusionConstants d = diffusion_constants(params(2.0, 1.0, 5.0));
        d.Dpq = 0.0;
        d.Dqq = 0.0;
        d.Dpp = 2.0 * 2.0 * 5.0;
        const PositivityReport r = positivity_delta(d);
        CHECK_FALSE(r.positive);
        CHECK(r.delta == doctest::Approx(-1.0).epsilon(1e-14));
    }
    SUBCASE("scale covariance under hbar -> s hbar, T -> s T") {
        SystemParams p = params(1.0, 0.6, 2.0);
        const double ref = positivity_delta(diffusion_constants(p)).delta;
        p.hbar = 3.0;
        p.temperature = 6.0;
        const double scaled = positivity_delta(diffusion_constants(p)).delta / 9.0;
        CHECK(rel_gap(ref, scaled) < 1e-12);
    }
}

TEST_CASE("breakdown temperature, small omega0") {
    const double tc = breakdown_temperature(1e-3);
    CHECK(tc == doctest::Approx(0.4).epsilon(0.125));
    CHECK(std::abs(tc - kFreeTc) < 1e-4);
    CHECK(positivity_delta(diffusion_constants(params(1.0, 1e-3, tc * 0.99))).delta < 0.0);
    CHECK(positivity_delta(diffusion_constants(params(1.0, 1e-3, tc * 1.01))).delta > 0.0);
}

TEST_CASE("breakdown temperature at omega0 = gamma matches a brute-force scan") {
    // Bracket from a 1e4-point sign scan done outside this code base.
    const double tc = breakdown_temperature(1.0);
    CHECK(tc >= 0.475847450487);
    CHECK(tc <= 0.476505378203);
}

TEST_CASE("exactly one sign change for representative ratios") {
    for (double r : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
        CAPTURE(r);
        CHECK_NOTHROW(breakdown_temperature(r));
    }
}

TEST_CASE("breakdown temperature errors") {
    CHECK_THROWS_AS(breakdown_temperature(1e-5), ConfigError);
    CHECK_THROWS_AS(breakdown_temperature(1e3), ConfigError);
    TcOptions narrow;
    narrow.t_lo = 10.0;
    narrow.t_hi = 100.0;
    try {
        breakdown_temperature(1.0, {}, narrow);
        FAIL("expected NoSignChange");
    } catch (const NoSignChange& e) {
        const std::string what = e.what();
        CHECK(what.find("kBT/hbar_gamma") != std::string::npos);
    }
}

TEST_CASE("tc_curve is deterministic and continuous") {
    const TcCurve a = tc_curve(1e-3, 1e2, 40, {}, {}, 1);
    const TcCurve b = tc_curve(1e-3, 1e2, 40, {}, {}, 4);
    REQUIRE(a.points.size() == 40);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        REQUIRE(a.points[i].omega0_over_gamma == b.points[i].omega0_over_gamma);
        REQUIRE(a.points[i].tc == b.points[i].tc);
    }
    CHECK(a.points.front().omega0_over_gamma == 1e-3);
    CHECK(a.points.back().omega0_over_gamma == 1e2);
    CHECK(a.points.front().tc == doctest::Approx(0.4).epsilon(0.125));

    TcOptions fine;
    fine.rel_tol = 1e-12;
    const TcCurve c = tc_curve(1e-3, 1e2, 40, {}, fine, 2);
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(rel_gap(a.points[i].tc, c.points[i].tc) < 1e-8);

    // Above omega0/gamma ~ 3 Tc grows like omega0, so adjacent points differ by
    // the abscissa step itself (5.96% on this grid). The 5% bound is checked
    // below that and the log-log slope is bounded everywhere.
    const TcCurve dense = tc_curve(1e-3, 1e2, 200, {}, {}, 4);
    double worst = 0.0, worst_slope = 0.0;
    for (std::size_t i = 1; i < dense.points.size(); ++i) {
        const TcPoint& lo = dense.points[i - 1];
        const TcPoint& hi = dense.points[i];
        if (hi.omega0_over_gamma <= 3.0) worst = std::max(worst, rel_gap(hi.tc, lo.tc));
        worst_slope = std::max(worst_slope, std::abs(std::log(hi.tc / lo.tc)) /
                                                std::log(hi.omega0_over_gamma / lo.omega0_over_gamma));
    }
    CHECK(worst < 0.05);
    CHECK(worst_slope < 1.0 + 1e-3);
    CHECK(dense.monotone_increasing);
}

TEST_CASE("tc_curve rejects bad ranges") {
    CHECK_THROWS_AS(tc_curve(1.0, 0.1, 10), ConfigError);
    CHECK_THROWS_AS(tc_curve(0.1, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(tc_curve(1e-5, 1.0, 3), ConfigError);
}
