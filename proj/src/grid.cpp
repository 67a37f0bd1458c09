#include "qbrown/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "qbrown/csv.hpp"
#include "qbrown/error.hpp"
#include "qbrown/log.hpp"

namespace qbrown {

namespace {

constexpr cplx kI{0.0, 1.0};

void check_shape(const DensityGrid& g, const char* who) {
    if (g.N < 5 || g.values.size() != g.N * g.N || !(g.L > 0.0)) {
        throw ConfigError(fmt::format("{}: malformed grid (N={}, L={}, {} values)", who, g.N, g.L, g.values.size()));
    }
}

double peak(const DensityGrid& g) {
    double m = 0.0;
    for (const auto& v : g.values) m = std::max(m, std::abs(v));
    return m;
}

// Right-hand side of the master equation on a zero-padded copy of rho.
// Two ghost layers on every side hold zeros, so the 5-point stencils can run
// unguarded over the interior.
class MasterEquation {
public:
    MasterEquation(std::size_t n, double L, const SystemParams& p, const DiffusionConstants& d)
        : n_(n), pitch_(n + 4), dx_(2.0 * L / static_cast<double>(n - 1)), x_(n) {
        for (std::size_t i = 0; i < n; ++i) x_[i] = -L + static_cast<double>(i) * dx_;
        kinetic_ = kI * p.hbar / (2.0 * p.mass);
        potential_ = -kI * p.mass * p.omega0 * p.omega0 / (2.0 * p.hbar);
        friction_ = p.gamma;
        anomalous_ = 2.0 * kI * d.Dpq / p.hbar;
        position_diffusion_ = d.Dqq;
        decoherence_ = d.Dpp / (p.hbar * p.hbar);
    }

    std::size_t padded_size() const { return pitch_ * pitch_; }
    std::size_t index(std::size_t i, std::size_t j) const { return (i + 2) * pitch_ + (j + 2); }

    void load(const std::vector<cplx>& rho, std::vector<cplx>& padded) const {
        for (std::size_t i = 0; i < n_; ++i) std::copy_n(&rho[i * n_], n_, &padded[index(i, 0)]);
    }
    void store(const std::vector<cplx>& padded, std::vector<cplx>& rho) const {
        for (std::size_t i = 0; i < n_; ++i) std::copy_n(&padded[index(i, 0)], n_, &rho[i * n_]);
    }

    void rhs(const std::vector<cplx>& in, std::vector<cplx>& out) const {
        const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(pitch_);
        const std::ptrdiff_t D = P + 1;  // (i+1, j+1): along x + y
        const double inv12 = 1.0 / (12.0 * dx_);
        const double inv12sq = 1.0 / (12.0 * dx_ * dx_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double x = x_[i];
            for (std::size_t j = 0; j < n_; ++j) {
                const double y = x_[j];
                const double s = x - y;
                const cplx* c = &in[index(i, j)];
                const cplx c0 = c[0];
                const cplx dxx = (-c[-2 * P] + 16.0 * c[-P] - 30.0 * c0 + 16.0 * c[P] - c[2 * P]) * inv12sq;
                const cplx dyy = (-c[-2] + 16.0 * c[-1] - 30.0 * c0 + 16.0 * c[1] - c[2]) * inv12sq;
                const cplx dx = (c[-2 * P] - 8.0 * c[-P] + 8.0 * c[P] - c[2 * P]) * inv12;
                const cplx dy = (c[-2] - 8.0 * c[-1] + 8.0 * c[1] - c[2]) * inv12;
                const cplx dr = (c[-2 * D] - 8.0 * c[-D] + 8.0 * c[D] - c[2 * D]) * inv12;
                const cplx drr = (-c[-2 * D] + 16.0 * c[-D] - 30.0 * c0 + 16.0 * c[D] - c[2 * D]) * inv12sq;
                out[index(i, j)] = kinetic_ * (dxx - dyy) + potential_ * ((x - y) * (x + y)) * c0 -
                                   friction_ * s * (dx - dy) + anomalous_ * s * dr + position_diffusion_ * drr -
                                   decoherence_ * s * s * c0;
            }
        }
    }

private:
    std::size_t n_;
    std::size_t pitch_;
    double dx_;
    std::vector<double> x_;
    cplx kinetic_;
    cplx potential_;
    double friction_;
    cplx anomalous_;
    double position_diffusion_;
    double decoherence_;
};

// Classical RK4 on the padded representation; buffers are reused across steps.
class Stepper {
public:
    Stepper(std::size_t n, double L, const SystemParams& p, const DiffusionConstants& d)
        : eq_(n, L, p, d), y_(eq_.padded_size()), stage_(eq_.padded_size()), k_(eq_.padded_size()),
          acc_(eq_.padded_size()) {}

    void advance(DensityGrid& g, double h) {
        eq_.load(g.values, y_);
        const std::size_t n = y_.size();
        // k1
        eq_.rhs(y_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] = k_[i];
            stage_[i] = y_[i] + 0.5 * h * k_[i];
        }
        // k2
        eq_.rhs(stage_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += 2.0 * k_[i];
            stage_[i] = y_[i] + 0.5 * h * k_[i];
        }
        // k3
        eq_.rhs(stage_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += 2.0 * k_[i];
            stage_[i] = y_[i] + h * k_[i];
        }
        // k4
        eq_.rhs(stage_, k_);
        for (std::size_t i = 0; i < n; ++i) y_[i] += h / 6.0 * (acc_[i] + k_[i]);
        eq_.store(y_, g.values);
        g.t += h;
    }

private:
    MasterEquation eq_;
    std::vector<cplx> y_;
    std::vector<cplx> stage_;
    std::vector<cplx> k_;
    std::vector<cplx> acc_;
};

}  // namespace

DensityGrid gaussian_state(const MomentState& m, std::size_t N, double L, double hbar) {
    if (N < 5) throw ConfigError(fmt::format("gaussian_state: N must be >= 5 (got {})", N));
    if (!(m.q2 > 0.0) || !(m.p2 > 0.0)) {
        throw ConfigError(fmt::format("gaussian_state: need q2 > 0 and p2 > 0 (got {}, {})", m.q2, m.p2));
    }
    const double u = m.uncertainty();
    const double bound = 0.25 * hbar * hbar;
    if (u < bound * (1.0 - 1e-12)) {
        throw UncertaintyViolation(
            fmt::format("gaussian_state: q2*p2 - (qp/2)^2 = {:.6e} < hbar^2/4 = {:.6e}", u, bound));
    }
    if (L < 8.0 * std::sqrt(m.q2)) {
        throw GridTooSmall(fmt::format("gaussian_state: half-width L = {} < 8 sqrt(q2) = {}", L, 8.0 * std::sqrt(m.q2)));
    }

    DensityGrid g;
    g.N = N;
    g.L = L;
    g.values.resize(N * N);
    const double p2c = m.p2 - 0.25 * m.qp * m.qp / m.q2;
    for (std::size_t i = 0; i < N; ++i) {
        const double x = g.coord(i);
        for (std::size_t j = 0; j < N; ++j) {
            const double y = g.coord(j);
            const double sum = x + y;
            const double diff = x - y;
            const double re = -sum * sum / (8.0 * m.q2) - p2c * diff * diff / (2.0 * hbar * hbar);
            const double phase = m.qp * (x * x - y * y) / (4.0 * hbar * m.q2);
            g.at(i, j) = std::exp(cplx(re, phase));
        }
    }
    const double tr = trace(g);
    for (auto& v : g.values) v /= tr;
    return g;
}

double max_stable_dt(const DensityGrid& g, const SystemParams& p, const DiffusionConstants& d) {
    const double dx = g.dx();
    double bound = std::min(p.mass * dx * dx / p.hbar, 1.0 / p.gamma);
    if (d.Dpp > 0.0) bound = std::min(bound, p.hbar * p.hbar / (d.Dpp * g.L * g.L));
    return 0.25 * bound;
}

DensityGrid step(const DensityGrid& g, const SystemParams& p, const DiffusionConstants& d, double dt) {
    check_shape(g, "step");
    const double limit = max_stable_dt(g, p, d);
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
        throw StabilityViolation(fmt::format("step: dt = {} exceeds the stability bound {}", dt, limit));
    }
    DensityGrid out = g;
    Stepper(g.N, g.L, p, d).advance(out, dt);
    if (edge_ratio(out) > 1e-10) {
        log::warn(fmt::format("step: boundary |rho| reaches {:.3e} of the peak at t={}", edge_ratio(out), out.t));
    }
    return out;
}

MomentState moments_from_grid(const DensityGrid& g, double hbar) {
    check_shape(g, "moments_from_grid");
    const std::size_t N = g.N;
    const double dx = g.dx();
    const double h = 2.0 * dx;  // s = x - y advances by 2 dx per anti-diagonal step
    auto f = [&](std::size_t i, std::ptrdiff_t k) -> cplx {
        const std::ptrdiff_t a = static_cast<std::ptrdiff_t>(i) + k;
        const std::ptrdiff_t b = static_cast<std::ptrdiff_t>(i) - k;
        if (a < 0 || b < 0 || a >= static_cast<std::ptrdiff_t>(N) || b >= static_cast<std::ptrdiff_t>(N)) return 0.0;
        return g.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    };

    double tr = 0.0, q2 = 0.0, p2 = 0.0, qp = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double x = g.coord(i);
        const cplx c0 = g.at(i, i);
        if (!std::isfinite(c0.real()) || !std::isfinite(c0.imag())) {
            throw NanDetected(fmt::format("moments_from_grid: non-finite rho at diagonal index {} (t={})", i, g.t));
        }
        const cplx ds = (f(i, -2) - 8.0 * f(i, -1) + 8.0 * f(i, 1) - f(i, 2)) / (12.0 * h);
        const cplx dss = (-f(i, -2) + 16.0 * f(i, -1) - 30.0 * c0 + 16.0 * f(i, 1) - f(i, 2)) / (12.0 * h * h);
        tr += c0.real();
        q2 += x * x * c0.real();
        p2 += -hbar * hbar * dss.real();
        qp += 2.0 * hbar * x * ds.imag();
    }
    if (!std::isfinite(q2) || !std::isfinite(p2) || !std::isfinite(qp) || !(tr > 0.0)) {
        throw NanDetected(fmt::format("moments_from_grid: non-finite moments at t={}", g.t));
    }
    return {q2 / tr, p2 / tr, qp / tr, g.t};
}

double trace(const DensityGrid& g) {
    double tr = 0.0;
    for (std::size_t i = 0; i < g.N; ++i) tr += g.at(i, i).real();
    return tr * g.dx();
}

double purity(const DensityGrid& g) {
    double s = 0.0;
    for (const auto& v : g.values) s += std::norm(v);
    return s * g.dx() * g.dx();
}

double hermiticity_residual(const DensityGrid& g) {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.N; ++i) {
        for (std::size_t j = i; j < g.N; ++j) {
            worst = std::max(worst, std::abs(g.at(i, j) - std::conj(g.at(j, i))));
        }
    }
    const double top = peak(g);
    return top > 0.0 ? worst / top : worst;
}

double min_diagonal(const DensityGrid& g) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.N; ++i) lowest = std::min(lowest, g.at(i, i).real());
    const double top = peak(g);
    return top > 0.0 ? lowest / top : lowest;
}

double edge_ratio(const DensityGrid& g) {
    double edge = 0.0;
    const std::size_t last = g.N - 1;
    for (std::size_t k = 0; k < g.N; ++k) {
        edge = std::max({edge, std::abs(g.at(0, k)), std::abs(g.at(last, k)), std::abs(g.at(k, 0)),
                         std::abs(g.at(k, last))});
    }
    const double top = peak(g);
    return top > 0.0 ? edge / top : edge;
}

GridRun evolve_grid(DensityGrid g, const SystemParams& p, const DiffusionConstants& d, double t_end, double dt,
                    std::size_t sample_every) {
    check_shape(g, "evolve_grid");
    if (!(t_end > g.t)) throw ConfigError("evolve_grid: t_end must exceed the grid time");
    if (sample_every == 0) throw ConfigError("evolve_grid: sample_every must be >= 1");
    const double limit = max_stable_dt(g, p, d);
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
        throw StabilityViolation(fmt::format("evolve_grid: dt = {} exceeds the stability bound {}", dt, limit));
    }

    GridRun run;
    const double trace0 = trace(g);
    auto sample = [&](const DensityGrid& state) {
        GridSample s{state.t, moments_from_grid(state, p.hbar), trace(state), hermiticity_residual(state)};
        run.max_trace_drift = std::max(run.max_trace_drift, std::abs(s.trace - trace0));
        run.max_hermiticity = std::max(run.max_hermiticity, s.hermiticity);
        if (edge_ratio(state) > 1e-10) {
            if (run.boundary_warnings == 0) {
                log::warn(fmt::format("evolve_grid: boundary |rho| reaches {:.3e} of the peak at t={}",
                                      edge_ratio(state), state.t));
            }
            ++run.boundary_warnings;
        }
        run.samples.push_back(s);
    };

    const double span = t_end - g.t;
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt * (1.0 - 1e-12)));
    const double h = span / static_cast<double>(steps);
    const double t0 = g.t;
    Stepper stepper(g.N, g.L, p, d);
    sample(g);
    for (std::size_t i = 1; i <= steps; ++i) {
        stepper.advance(g, h);
        g.t = t0 + h * static_cast<double>(i);
        if (i % sample_every == 0 || i == steps) sample(g);
    }
    run.final_state = std::move(g);
    return run;
}

void write_snapshot_csv(std::ostream& os, const DensityGrid& g, const SystemParams& p) {
    csv::Writer w(os);
    w.comment(fmt::format("N={}, L={}, t={}, {}", g.N, csv::number(g.L), csv::number(g.t), p.describe()));
    w.header({"x", "y", "re", "im"});
    for (std::size_t i = 0; i < g.N; ++i) {
        for (std::size_t j = 0; j < g.N; ++j) {
            w.row({g.coord(i), g.coord(j), g.at(i, j).real(), g.at(i, j).imag()});
        }
    }
}

}  // namespace qbrown
