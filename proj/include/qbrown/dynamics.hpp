// dynamics.hpp: Second-moment dynamics of the damped oscillator
//
// The three moments <q^2>, <p^2>, <qp+pq> obey a closed linear ODE driven by
// the diffusion constants. Solutions decay through the modes
// exp(-2 gamma t), exp(-2(gamma - Omega) t), exp(-2(gamma + Omega) t).

#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qbrown/core.hpp"
#include "qbrown/diffusion.hpp"

namespace qbrown {

struct MomentState {
    double q2{0.0};  // <q^2>
    double p2{0.0};  // <p^2>
    double qp{0.0};  // <qp + pq>
    double t{0.0};

    // q2*p2 - (qp/2)^2; the uncertainty relation requires >= hbar^2/4.
    double uncertainty() const noexcept { return q2 * p2 - 0.25 * qp * qp; }
};

struct MomentRates {
    double q2{0.0};
    double p2{0.0};
    double qp{0.0};
};

struct MomentTrajectory {
    std::vector<MomentState> samples;
};

MomentRates moment_derivative(const MomentState& s, const SystemParams& p, const DiffusionConstants& d);

// Classical RK4 with a fixed step. The step is shrunk so that an integer
// number of steps lands on t_end; every `stride`-th state is kept, plus the
// final one. Throws StepSizeError unless dt <= 0.01 / max(gamma, omega0).
MomentTrajectory evolve_numeric(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d,
                                double t_end, double dt, std::size_t stride = 1);

// Fixed point of the moment equations. Throws NoEquilibrium for omega0 = 0.
MomentState equilibrium_moments(const SystemParams& p, const DiffusionConstants& d);

struct AnalyticCoefficients {
    cplx C1;
    cplx C2;
    cplx C3;
    cplx Omega;
    MomentState equilibrium;
    // |C2(linear solve) - C2(closed form)| / |C2(closed form)|; NaN when not evaluated.
    double c2_crosscheck{0.0};
};

// Integration constants matching s0 at t = s0.t. Critical damping (and
// Omega = 0) goes through the nudge policy in analytic_solution instead.
AnalyticCoefficients analytic_coefficients(const MomentState& s0, const SystemParams& p,
                                           const DiffusionConstants& d);

// Closed-form C2 for initial data at t = 0.
cplx c2_closed_form(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d);

// Moments at absolute time t given s0 at s0.t. Outputs are real parts; the
// imaginary residue is checked against 1e-9 (relative) and reported through
// SingularSystem if exceeded.
MomentState analytic_solution(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d, double t);

// omega0 -> 0 limit of analytic_solution, evaluated at omega0 = h and 2h
// (h = 1e-6 gamma) and Richardson-extrapolated in omega0^2. Only M, gamma,
// T, hbar, kB are read from `base`.
MomentState free_particle_longtime(const MomentState& s0, const SystemParams& base, double t);

// Long-time free-particle <p^2> = M hbar gamma coth(hbar gamma / kB T).
double free_particle_p2(const SystemParams& base);

// Asymptotic free-particle diffusion slope d<q^2>/dt = kB T / (M gamma).
double free_particle_q2_slope(const SystemParams& base);

// Trajectory CSV: header "t,q2,p2,qp", 17 significant digits.
void write_trajectory_csv(std::ostream& os, const MomentTrajectory& traj);

}  // namespace qbrown
