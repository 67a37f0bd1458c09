#include "qbrown/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "qbrown/csv.hpp"
#include "qbrown/error.hpp"

namespace qbrown {

MomentRates moment_derivative(const MomentState& s, const SystemParams& p, const DiffusionConstants& d) {
    const double M = p.mass;
    const double w2 = p.omega0 * p.omega0;
    return {
        s.qp / M + 2.0 * d.Dqq,
        -M * w2 * s.qp - 4.0 * p.gamma * s.p2 + 2.0 * d.Dpp,
        2.0 * s.p2 / M - 2.0 * M * w2 * s.q2 - 2.0 * p.gamma * s.qp - 4.0 * d.Dpq,
    };
}

namespace {

MomentState advance(const MomentState& s, const MomentRates& k, double h) {
    return {s.q2 + h * k.q2, s.p2 + h * k.p2, s.qp + h * k.qp, s.t + h};
}

MomentState rk4_step(const MomentState& s, const SystemParams& p, const DiffusionConstants& d, double h) {
    const MomentRates k1 = moment_derivative(s, p, d);
    const MomentRates k2 = moment_derivative(advance(s, k1, 0.5 * h), p, d);
    const MomentRates k3 = moment_derivative(advance(s, k2, 0.5 * h), p, d);
    const MomentRates k4 = moment_derivative(advance(s, k3, h), p, d);
    MomentState out;
    out.q2 = s.q2 + h / 6.0 * (k1.q2 + 2.0 * k2.q2 + 2.0 * k3.q2 + k4.q2);
    out.p2 = s.p2 + h / 6.0 * (k1.p2 + 2.0 * k2.p2 + 2.0 * k3.p2 + k4.p2);
    out.qp = s.qp + h / 6.0 * (k1.qp + 2.0 * k2.qp + 2.0 * k3.qp + k4.qp);
    return out;
}

}  // namespace

MomentTrajectory evolve_numeric(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d,
                                double t_end, double dt, std::size_t stride) {
    if (!(t_end > 0.0)) throw ConfigError(fmt::format("evolve_numeric: t_end must be > 0 (got {})", t_end));
    if (stride == 0) throw ConfigError("evolve_numeric: stride must be >= 1");
    const double limit = 0.01 / std::max(p.gamma, p.omega0);
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
        throw StepSizeError(fmt::format("evolve_numeric: dt = {} violates 0 < dt <= 0.01/max(gamma, omega0) = {}", dt,
                                        limit));
    }
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
    const double h = t_end / static_cast<double>(steps);

    MomentTrajectory traj;
    traj.samples.reserve(steps / stride + 2);
    MomentState s = s0;
    traj.samples.push_back(s);
    for (std::size_t i = 1; i <= steps; ++i) {
        s = rk4_step(s, p, d, h);
        s.t = s0.t + h * static_cast<double>(i);
        if (i % stride == 0 || i == steps) traj.samples.push_back(s);
    }
    return traj;
}

MomentState equilibrium_moments(const SystemParams& p, const DiffusionConstants& d) {
    if (!(p.omega0 > 0.0)) {
        throw NoEquilibrium(
            "equilibrium_moments: no equilibrium <q^2> for the free particle (omega0 = 0); "
            "use free_particle_longtime");
    }
    const double M = p.mass;
    const double g = p.gamma;
    const double w2 = p.omega0 * p.omega0;
    MomentState s;
    s.p2 = (d.Dpp + M * M * w2 * d.Dqq) / (2.0 * g);
    s.q2 = (d.Dpp - 4.0 * M * g * d.Dpq + M * M * (4.0 * g * g + w2) * d.Dqq) / (2.0 * M * M * g * w2);
    s.qp = -2.0 * M * d.Dqq;
    return s;
}

namespace {

struct Modes {
    cplx Omega;
    cplx rate[3];            // decay rates of C1, C2, C3
    cplx shape[3][3];        // shape[i] = (q2, p2, qp) coefficient of C_i
};

Modes modes_for(const SystemParams& p) {
    const double M = p.mass;
    const double g = p.gamma;
    const double w2 = p.omega0 * p.omega0;
    const EigenPair e = eigenvalues(p);
    const cplx Om = e.Omega;
    const cplx g_minus = -e.lambda1;  // gamma - Omega, cancellation-free
    const cplx g_plus = -e.lambda2;   // gamma + Omega
    Modes m;
    m.Omega = Om;
    m.rate[0] = 2.0 * g;
    m.rate[1] = 2.0 * g_minus;
    m.rate[2] = 2.0 * g_plus;
    m.shape[0][0] = -1.0 / (2.0 * M * g);
    m.shape[0][1] = -M * w2 / (2.0 * g);
    m.shape[0][2] = 1.0;
    m.shape[1][0] = -g_plus / (2.0 * M * w2);
    m.shape[1][1] = -0.5 * M * g_minus;
    m.shape[1][2] = 1.0;
    // (gamma - Omega)/omega0^2 = 1/(gamma + Omega)
    m.shape[2][0] = -1.0 / (2.0 * M * g_plus);
    m.shape[2][1] = -0.5 * M * g_plus;
    m.shape[2][2] = 1.0;
    return m;
}

AnalyticCoefficients solve_coefficients(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d,
                                        const Modes& m) {
    AnalyticCoefficients c;
    c.Omega = m.Omega;
    c.equilibrium = equilibrium_moments(p, d);

    Eigen::Matrix3cd A;
    Eigen::Vector3cd rhs;
    const double init[3] = {s0.q2, s0.p2, s0.qp};
    const double eq[3] = {c.equilibrium.q2, c.equilibrium.p2, c.equilibrium.qp};
    for (int row = 0; row < 3; ++row) {
        double scale = 0.0;
        for (int col = 0; col < 3; ++col) scale = std::max(scale, std::abs(m.shape[col][row]));
        for (int col = 0; col < 3; ++col) A(row, col) = m.shape[col][row] / scale;
        rhs(row) = (init[row] - eq[row]) / scale;
    }
    const Eigen::PartialPivLU<Eigen::Matrix3cd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-13)) {
        throw SingularSystem(fmt::format("analytic_coefficients: mode matrix is singular (rcond={:.3e}) at {}", rcond,
                                         p.describe()));
    }
    const Eigen::Vector3cd C = lu.solve(rhs);
    c.C1 = C(0);
    c.C2 = C(1);
    c.C3 = C(2);

    c.c2_crosscheck = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(m.Omega) > 1e-3 * p.gamma) {
        const cplx closed = c2_closed_form(s0, p, d);
        const double scale = std::abs(closed);
        c.c2_crosscheck = scale > 0.0 ? std::abs(c.C2 - closed) / scale : std::abs(c.C2);
    }
    return c;
}

MomentState evaluate(const AnalyticCoefficients& c, const Modes& m, double tau, double t_abs, double& imag_residue) {
    cplx out[3] = {c.equilibrium.q2, c.equilibrium.p2, c.equilibrium.qp};
    const cplx C[3] = {c.C1, c.C2, c.C3};
    double magnitude[3] = {std::abs(c.equilibrium.q2), std::abs(c.equilibrium.p2), std::abs(c.equilibrium.qp)};
    for (int i = 0; i < 3; ++i) {
        const cplx amp = C[i] * std::exp(-m.rate[i] * tau);
        for (int k = 0; k < 3; ++k) {
            const cplx term = amp * m.shape[i][k];
            out[k] += term;
            magnitude[k] = std::max(magnitude[k], std::abs(term));
        }
    }
    imag_residue = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (magnitude[k] > 0.0) imag_residue = std::max(imag_residue, std::abs(out[k].imag()) / magnitude[k]);
    }
    return {out[0].real(), out[1].real(), out[2].real(), t_abs};
}

MomentState analytic_direct(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d, double t) {
    const Modes m = modes_for(p);
    const AnalyticCoefficients c = solve_coefficients(s0, p, d, m);
    double residue = 0.0;
    const MomentState s = evaluate(c, m, t - s0.t, t, residue);
    if (residue > 1e-9) {
        throw SingularSystem(fmt::format("analytic_solution: imaginary residue {:.3e} exceeds 1e-9 at {}", residue,
                                         p.describe()));
    }
    return s;
}

}  // namespace

cplx c2_closed_form(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d) {
    const double M = p.mass;
    const double g = p.gamma;
    const double w2 = p.omega0 * p.omega0;
    const cplx Om = eigenvalues(p).Omega;
    const cplx Om2 = Om * Om;
    const cplx Om3 = Om2 * Om;
    const cplx drive = d.Dpp * Om +
                       (2.0 * M * M * g * g * g - 2.0 * M * M * g * w2 + 2.0 * M * M * g * g * Om - M * M * Om * w2) *
                           d.Dqq -
                       2.0 * M * d.Dpq * (Om2 + g * Om);
    const cplx initial = s0.p2 * (Om2 - g * Om) - s0.q2 * M * M * w2 * (Om2 + g * Om) - s0.qp * M * w2 * Om;
    return (drive + initial) / (2.0 * M * Om3);
}

AnalyticCoefficients analytic_coefficients(const MomentState& s0, const SystemParams& p,
                                           const DiffusionConstants& d) {
    if (!(p.gamma > 0.0)) throw ConfigError("analytic_coefficients: gamma must be > 0");
    return solve_coefficients(s0, p, d, modes_for(p));
}

MomentState analytic_solution(const MomentState& s0, const SystemParams& p, const DiffusionConstants& d, double t) {
    if (!(p.gamma > 0.0)) throw ConfigError("analytic_solution: gamma must be > 0");
    if (is_critical(p) || eigenvalues(p).Omega == cplx(0.0, 0.0)) {
        const auto [above, below] = critical_nudge(p);
        const MomentState a = analytic_direct(s0, above, d, t);
        const MomentState b = analytic_direct(s0, below, d, t);
        return {0.5 * (a.q2 + b.q2), 0.5 * (a.p2 + b.p2), 0.5 * (a.qp + b.qp), t};
    }
    return analytic_direct(s0, p, d, t);
}

MomentState free_particle_longtime(const MomentState& s0, const SystemParams& base, double t) {
    if (!(base.gamma > 0.0) || !(base.temperature > 0.0)) {
        throw ConfigError("free_particle_longtime: requires gamma > 0 and T > 0");
    }
    auto at = [&](double w) {
        const SystemParams p = base.with_omega0(w);
        return analytic_solution(s0, p, diffusion_constants(p), t);
    };
    const double h = 1e-6 * base.gamma;
    const MomentState fine = at(h);
    const MomentState coarse = at(2.0 * h);
    // Error is O(omega0^2): f(0) = (4 f(h) - f(2h)) / 3.
    auto extrapolate = [](double f, double c) { return (4.0 * f - c) / 3.0; };
    return {extrapolate(fine.q2, coarse.q2), extrapolate(fine.p2, coarse.p2), extrapolate(fine.qp, coarse.qp), t};
}

double free_particle_p2(const SystemParams& base) {
    const double x = base.hbar * base.gamma / (base.kB * base.temperature);
    // M hbar gamma coth(x) = M kB T * x coth(x)
    return base.mass * base.kB * base.temperature * xcothx(x);
}

double free_particle_q2_slope(const SystemParams& base) {
    return base.kB * base.temperature / (base.mass * base.gamma);
}

void write_trajectory_csv(std::ostream& os, const MomentTrajectory& traj) {
    csv::Writer w(os);
    w.header({"t", "q2", "p2", "qp"});
    for (const auto& s : traj.samples) w.row({s.t, s.q2, s.p2, s.qp});
}

}  // namespace qbrown
