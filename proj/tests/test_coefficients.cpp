#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "qbrown/coefficients.hpp"
#include "qbrown/error.hpp"
#include "qbrown/log.hpp"
#include "test_support.hpp"

using namespace qbrown;
using qbrown::testing::log_uniform;
using qbrown::testing::rel_gap;

namespace {

SystemParams params(double gamma, double omega0, double T, double cutoff = kInfiniteCutoff) {
    SystemParams p;
    p.gamma = gamma;
    p.omega0 = omega0;
    p.temperature = T;
    p.cutoff = cutoff;
    return p;
}

}  // namespace

TEST_CASE("alpha_prime_free reference value") {
    // (x coth x - 1)/4 at x = 1, from a 50-digit evaluation.
    CHECK(alpha_prime_free(params(1.0, 0.0, 1.0)) == doctest::Approx(0.078258821374832826).epsilon(1e-14));
    CHECK(alpha_prime_free(params(1.0, 0.0, 1.0)) == doctest::Approx(0.078259).epsilon(1e-5));
}

TEST_CASE("alpha_prime_free tends to hbar^2/(12 kB^2 T^2) at high T") {
    for (double T : {1e2, 1e3, 1e5}) {
        const double expect = 1.0 / (12.0 * T * T);
        CHECK(rel_gap(alpha_prime_free(params(1.0, 0.0, T)), expect) < 1.0 / (T * T));
    }
    CHECK_THROWS_AS(alpha_prime_free(params(1.0, 0.0, 0.0)), ConfigError);
}

TEST_CASE("alpha_pair reference value, underdamped, infinite cutoff") {
    // gamma=1, omega0=2, kT = hbar gamma, from a 40-digit complex evaluation.
    const AlphaPair a = alpha_pair(params(1.0, 2.0, 1.0));
    CHECK(a.cutoff_mode == CutoffMode::Infinite);
    CHECK(a.residual_imag < 1e-10);
    CHECK(a.alpha == doctest::Approx(0.97991337334597421).epsilon(1e-12));
    CHECK(a.alpha_prime == doctest::Approx(0.077730261384691020).epsilon(1e-12));
}

TEST_CASE("alpha_pair free-particle limit") {
    for (double T : {0.3, 1.0, 7.0}) {
        const SystemParams p = params(1.0, 1e-8, T);
        const AlphaPair a = alpha_pair(p);
        CAPTURE(T);
        CHECK(std::abs(a.alpha - 1.0) < 1e-6);
        CHECK(rel_gap(a.alpha_prime, alpha_prime_free(p)) < 1e-6);
    }
    const SystemParams exact = params(1.0, 0.0, 1.0);
    CHECK(alpha_pair(exact).alpha == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(alpha_pair(exact).alpha_prime == doctest::Approx(alpha_prime_free(exact)).epsilon(1e-14));
}

TEST_CASE("alpha_pair high-T alpha' ~ hbar^2/(12 kB^2 T^2)") {
    const AlphaPair a = alpha_pair(params(1.0, 1.0, 100.0));
    CHECK(rel_gap(a.alpha_prime, 1.0 / (12.0 * 1e4)) < 1e-3);
}

TEST_CASE("alpha_pair rejects T = 0") {
    CHECK_THROWS_AS(alpha_pair(params(1.0, 1.0, 0.0)), UnsupportedTemperature);
}

TEST_CASE("underdamped reality on random parameters") {
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double w = log_uniform(1e-2, 1e2);
        const double g = w * log_uniform(1e-3, 0.999);
        const double T = log_uniform(0.05, 50.0) * g;
        worst = std::max(worst, alpha_pair(params(g, w, T)).residual_imag);
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("continuity across critical damping") {
    for (double T : {0.5, 2.0, 20.0}) {
        const AlphaPair over = alpha_pair(params(1.0 + 1e-5, 1.0, T));
        const AlphaPair under = alpha_pair(params(1.0 - 1e-5, 1.0, T));
        const AlphaPair crit = alpha_pair(params(1.0, 1.0, T));
        CAPTURE(T);
        CHECK(rel_gap(over.alpha, under.alpha) < 1e-3);
        CHECK(rel_gap(over.alpha_prime, under.alpha_prime) < 1e-3);
        CHECK(rel_gap(crit.alpha, over.alpha) < 1e-3);
        CHECK(rel_gap(crit.alpha_prime, over.alpha_prime) < 1e-3);
    }
}

TEST_CASE("finite cutoff converges to the infinite-cutoff values") {
    for (const auto& [g, w, T] : std::vector<std::tuple<double, double, double>>{{1, 2, 1}, {2, 1, 0.5}, {0.3, 1, 3}}) {
        const AlphaPair inf = alpha_pair(params(g, w, T));
        const double base = std::max({g, w, T});
        double prev = 1e300;
        for (double factor : {100.0, 300.0, 1e3, 3e3, 1e4, 1e5}) {
            const AlphaPair fin = alpha_pair(params(g, w, T, factor * base));
            CHECK(fin.cutoff_mode == CutoffMode::Finite);
            const double gap = std::max(rel_gap(fin.alpha, inf.alpha), rel_gap(fin.alpha_prime, inf.alpha_prime));
            CAPTURE(factor);
            CHECK(gap < 0.01);
            CHECK(gap < prev);
            prev = gap;
        }
    }
}

TEST_CASE("high-T expansion: |alpha - 1| falls as T^-4") {
    const SystemParams p = params(1.0, 0.7, 1.0);
    const double t1 = 30.0, t2 = 300.0;
    const double d1 = std::abs(alpha_pair(p.with_temperature(t1)).alpha - 1.0);
    const double d2 = std::abs(alpha_pair(p.with_temperature(t2)).alpha - 1.0);
    const double slope = std::log(d2 / d1) / std::log(t2 / t1);
    CHECK(slope == doctest::Approx(-4.0).epsilon(0.025));
}

TEST_CASE("overdamped and underdamped coefficients are positive and quiet") {
    std::vector<std::string> warnings;
    log::ScopedSink sink([&](std::string_view m) { warnings.emplace_back(m); });
    for (double w : {0.01, 0.5, 1.0, 2.0, 20.0}) {
        for (double T : {0.5, 1.0, 10.0}) {
            const AlphaPair a = alpha_pair(params(1.0, w, T));
            CHECK(a.alpha > 0.0);
            CHECK(a.alpha_prime > 0.0);
        }
    }
    CHECK(warnings.empty());
}

TEST_CASE("invalid parameters are config errors") {
    CHECK_THROWS_AS(alpha_pair(params(-1.0, 1.0, 1.0)), ConfigError);
    CHECK_THROWS_AS(alpha_pair(params(1.0, -1.0, 1.0)), ConfigError);
}
