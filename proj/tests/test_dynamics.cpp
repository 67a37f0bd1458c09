#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "qbrown/dynamics.hpp"
#include "qbrown/error.hpp"
#include "test_support.hpp"

using namespace qbrown;
using qbrown::testing::log_uniform;
using qbrown::testing::rel_gap;
using qbrown::testing::uniform;

namespace {

SystemParams params(double gamma, double omega0, double T) {
    SystemParams p;
    p.gamma = gamma;
    p.omega0 = omega0;
    p.temperature = T;
    return p;
}

double state_gap(const MomentState& a, const MomentState& b) {
    // Relative to the larger of the diagonal moments so that qp near zero is not amplified.
    const double scale = std::max({std::abs(b.q2), std::abs(b.p2), std::abs(b.qp)});
    return std::max({std::abs(a.q2 - b.q2), std::abs(a.p2 - b.p2), std::abs(a.qp - b.qp)}) / scale;
}

MomentState random_state() {
    MomentState s;
    s.q2 = log_uniform(0.1, 5.0);
    s.p2 = log_uniform(0.1, 5.0);
    s.qp = uniform(-0.5, 0.5) * std::sqrt(s.q2 * s.p2);
    return s;
}

}  // namespace

TEST_CASE("moment_derivative vanishes at equilibrium") {
    for (double w : {0.3, 1.0, 3.0}) {
        const SystemParams p = params(1.0, w, 2.0);
        const DiffusionConstants d = diffusion_constants(p);
        const MomentState eq = equilibrium_moments(p, d);
        const MomentRates r = moment_derivative(eq, p, d);
        CHECK(std::abs(r.q2) < 1e-10 * eq.q2);
        CHECK(std::abs(r.p2) < 1e-10 * eq.p2 * p.gamma);
        CHECK(std::abs(r.qp) < 1e-10 * std::max(eq.p2, eq.q2));
    }
}

TEST_CASE("moment_derivative: free particle with qp = 0 grows q2 at 2 Dqq") {
    const SystemParams p = params(1.0, 0.0, 1.5);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentRates r = moment_derivative({1.0, 1.0, 0.0, 0.0}, p, d);
    CHECK(r.q2 == 2.0 * d.Dqq);
}

TEST_CASE("equipartition at high temperature and weak damping") {
    const SystemParams p = params(0.01, 1.0, 100.0);
    const MomentState eq = equilibrium_moments(p, diffusion_constants(p));
    CHECK(rel_gap(eq.p2 / 2.0, 50.0) < 0.01);
    CHECK(rel_gap(eq.q2 / 2.0, 50.0) < 0.01);
}

TEST_CASE("equilibrium requires a confining potential") {
    const SystemParams p = params(1.0, 0.0, 1.0);
    CHECK_THROWS_AS(equilibrium_moments(p, diffusion_constants(p)), NoEquilibrium);
}

TEST_CASE("evolve_numeric: step-size contract") {
    const SystemParams p = params(1.0, 2.0, 1.0);
    const DiffusionConstants d = diffusion_constants(p);
    CHECK_THROWS_AS(evolve_numeric({1, 1, 0, 0}, p, d, 1.0, 0.006), StepSizeError);
    CHECK_NOTHROW(evolve_numeric({1, 1, 0, 0}, p, d, 1.0, 0.005));
    CHECK_THROWS_AS(evolve_numeric({1, 1, 0, 0}, p, d, 0.0, 0.005), ConfigError);
    const MomentTrajectory traj = evolve_numeric({1, 1, 0, 0.5}, p, d, 1.0, 0.003, 10);
    CHECK(traj.samples.front().t == 0.5);
    CHECK(traj.samples.back().t == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("evolve_numeric: equilibrium is a fixed point over 100 damping times") {
    const SystemParams p = params(1.0, 0.5, 1.0);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState eq = equilibrium_moments(p, d);
    const MomentTrajectory traj = evolve_numeric(eq, p, d, 100.0, 0.01, 1000);
    for (const auto& s : traj.samples) REQUIRE(state_gap(s, eq) < 1e-8);
}

TEST_CASE("evolve_numeric: fourth-order convergence") {
    const SystemParams p = params(1.0, 2.0, 1.0);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState s0{2.0, 0.3, 0.4, 0.0};
    const MomentState exact = analytic_solution(s0, p, d, 2.0);
    const double e1 = state_gap(evolve_numeric(s0, p, d, 2.0, 0.005).samples.back(), exact);
    const double e2 = state_gap(evolve_numeric(s0, p, d, 2.0, 0.0025).samples.back(), exact);
    CHECK(e1 / e2 >= 14.0);
    CHECK(e1 / e2 <= 18.0);
}

TEST_CASE("evolve_numeric matches a centred finite difference of the derivative") {
    const SystemParams p = params(0.7, 1.3, 0.9);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState s0 = random_state();
    const double h = 1e-3;
    const MomentTrajectory traj = evolve_numeric(s0, p, d, 2.0 * h, h / 4.0);
    const MomentState& mid = traj.samples[4];
    const MomentState& end = traj.samples.back();
    REQUIRE(mid.t == doctest::Approx(h));
    const MomentRates r = moment_derivative(mid, p, d);
    CHECK(std::abs((end.q2 - s0.q2) / (2.0 * h) - r.q2) < 1e-5);
    CHECK(std::abs((end.p2 - s0.p2) / (2.0 * h) - r.p2) < 1e-5);
    CHECK(std::abs((end.qp - s0.qp) / (2.0 * h) - r.qp) < 1e-5);
}

TEST_CASE("analytic solution reproduces its initial condition") {
    for (double w : {0.2, 1.0, 1.0 + 1e-5, 4.0}) {
        const SystemParams p = params(1.0, w, 1.2);
        const DiffusionConstants d = diffusion_constants(p);
        const MomentState s0{1.5, 0.7, -0.2, 0.0};
        CAPTURE(w);
        // At exact criticality the nudged mode matrix has rcond ~ 1e-7.
        CHECK(state_gap(analytic_solution(s0, p, d, 0.0), s0) < (is_critical(p) ? 1e-9 : 1e-10));
    }
}

TEST_CASE("analytic solution relaxes to equilibrium") {
    const SystemParams p = params(1.0, 0.5, 1.0);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState eq = equilibrium_moments(p, d);
    // Slowest rate is 2(gamma - Omega).
    const double slow = 2.0 * (1.0 - std::sqrt(1.0 - 0.25));
    CHECK(state_gap(analytic_solution({3.0, 0.2, 0.1, 0.0}, p, d, 20.0 / slow), eq) < 1e-6);
}

TEST_CASE("analytic and numeric agree across regimes") {
    for (double ratio : {0.1, 1.0 - 1e-5, 1.0 + 1e-5, 2.0}) {
        for (double T : {0.5, 1.0, 10.0}) {
            const SystemParams p = params(1.0, 1.0 / ratio, T);
            const DiffusionConstants d = diffusion_constants(p);
            const MomentState s0{1.0, 2.0, 0.3, 0.0};
            const double dt = 0.002 / std::max(p.gamma, p.omega0);
            const MomentTrajectory traj = evolve_numeric(s0, p, d, 10.0, dt, 50);
            double worst = 0.0;
            for (const auto& s : traj.samples) worst = std::max(worst, state_gap(s, analytic_solution(s0, p, d, s.t)));
            CAPTURE(ratio);
            CAPTURE(T);
            CHECK(worst < 1e-6);
        }
    }
}

TEST_CASE("critical damping goes through the nudge average") {
    const SystemParams p = params(1.0, 1.0, 1.0);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState s0{1.0, 2.0, 0.3, 0.0};
    const MomentTrajectory traj = evolve_numeric(s0, p, d, 5.0, 0.002, 100);
    for (const auto& s : traj.samples) CHECK(state_gap(s, analytic_solution(s0, p, d, s.t)) < 1e-6);
}

TEST_CASE("C2 closed form equals the linear solve") {
    double worst = 0.0;
    int evaluated = 0;
    for (int k = 0; k < 1000; ++k) {
        const double g = log_uniform(0.1, 10.0);
        double w = log_uniform(0.01, 10.0);
        if (std::abs(g - w) < 0.05 * g) w *= 1.2;
        const SystemParams p = params(g, w, log_uniform(0.5, 50.0));
        const DiffusionConstants d = diffusion_constants(p);
        const AnalyticCoefficients c = analytic_coefficients(random_state(), p, d);
        REQUIRE(std::isfinite(c.c2_crosscheck));
        worst = std::max(worst, c.c2_crosscheck);
        ++evaluated;
    }
    CHECK(evaluated == 1000);
    CHECK(worst < 1e-8);
}

TEST_CASE("underdamped analytic solutions are real") {
    const SystemParams p = params(0.05, 3.0, 2.0);
    const DiffusionConstants d = diffusion_constants(p);
    for (double t : {0.0, 0.7, 5.0, 40.0}) CHECK_NOTHROW(analytic_solution({1.0, 1.0, 0.0, 0.0}, p, d, t));
}

TEST_CASE("unique fixed point from random initial states") {
    const SystemParams p = params(1.0, 1.5, 1.0);
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState eq = equilibrium_moments(p, d);
    for (int k = 0; k < 20; ++k) {
        const MomentTrajectory traj = evolve_numeric(random_state(), p, d, 30.0, 0.005, 100000);
        CHECK(state_gap(traj.samples.back(), eq) < 1e-6);
    }
}

TEST_CASE("free particle long-time limit") {
    SUBCASE("momentum asymptote") {
        const SystemParams base = params(1.0, 0.0, 1.0);
        CHECK(free_particle_p2(base) == doctest::Approx(1.313035).epsilon(1e-6));
        const MomentState s = free_particle_longtime({0.5, 0.5, 0.0, 0.0}, base, 60.0);
        CHECK(rel_gap(s.p2, free_particle_p2(base)) < 1e-3);
    }
    SUBCASE("classical momentum limit") {
        const SystemParams hot = params(1.0, 0.0, 1e3);
        CHECK(rel_gap(free_particle_p2(hot), 1e3) < 1e-6);
    }
    SUBCASE("diffusive position growth") {
        const SystemParams base = params(1.0, 0.0, 2.0);
        const MomentState s0{0.5, 0.5, 0.0, 0.0};
        // Least-squares line over t in [50, 100].
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        const int n = 51;
        for (int i = 0; i < n; ++i) {
            const double t = 50.0 + i;
            const double q2 = free_particle_longtime(s0, base, t).q2;
            sx += t;
            sy += q2;
            sxx += t * t;
            sxy += t * q2;
            syy += q2 * q2;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
        CHECK(rel_gap(slope, free_particle_q2_slope(base)) < 0.01);
        CHECK(r * r > 0.9999);
    }
}

TEST_CASE("trajectory CSV layout") {
    MomentTrajectory traj;
    traj.samples.push_back({1.0, 0.5, -0.25, 0.0});
    traj.samples.push_back({0.1, 2.0, 1.0 / 3.0, 0.5});
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    CHECK(os.str() ==
          "t,q2,p2,qp\n"
          "0,1,0.5,-0.25\n"
          "0.5,0.10000000000000001,2,0.33333333333333331\n");
}
