// grid.hpp: Position-space density matrix on an N x N grid
//
// rho(x_i, y_j) with x_i = -L + i*dx, dx = 2L/(N-1), stored row-major in i.
// The master equation is stepped explicitly (4th-order centred differences,
// classical RK4 in time) with rho clamped to zero outside the box. Used as an
// end-to-end check that the moment equations follow from the PDE.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qbrown/core.hpp"
#include "qbrown/diffusion.hpp"
#include "qbrown/dynamics.hpp"

namespace qbrown {

struct DensityGrid {
    std::size_t N{0};
    double L{0.0};
    double t{0.0};
    std::vector<cplx> values;  // values[i*N + j] = rho(x_i, y_j)

    double dx() const noexcept { return 2.0 * L / static_cast<double>(N - 1); }
    double coord(std::size_t i) const noexcept { return -L + static_cast<double>(i) * dx(); }
    cplx& at(std::size_t i, std::size_t j) noexcept { return values[i * N + j]; }
    const cplx& at(std::size_t i, std::size_t j) const noexcept { return values[i * N + j]; }
};

// Centred Gaussian with the given second moments, normalised to unit trace:
//   rho = exp[-(x+y)^2/(8 q2) - p2c (x-y)^2/(2 hbar^2) + i qp (x^2-y^2)/(4 hbar q2)],
//   p2c = p2 - (qp/2)^2/q2.
// Throws UncertaintyViolation if q2*p2 - (qp/2)^2 < hbar^2/4 and
// GridTooSmall if L < 8 sqrt(q2).
DensityGrid gaussian_state(const MomentState& m, std::size_t N, double L, double hbar = 1.0);

// Largest dt accepted by step():
// 0.25 * min(M dx^2 / hbar, 1/gamma, hbar^2 / (Dpp L^2)).
double max_stable_dt(const DensityGrid& g, const SystemParams& p, const DiffusionConstants& d);

// One RK4 step of the master equation. Throws StabilityViolation if dt
// exceeds max_stable_dt.
DensityGrid step(const DensityGrid& g, const SystemParams& p, const DiffusionConstants& d, double dt);

// Expectation values, normalised by the trace. <q^2> from the diagonal;
// <p^2> and <qp+pq> from 4th-order derivatives along the anti-diagonal
// (x - y) direction through each diagonal point.
// Throws NanDetected on non-finite input.
MomentState moments_from_grid(const DensityGrid& g, double hbar = 1.0);

double trace(const DensityGrid& g);                  // sum_i Re rho(x_i, x_i) dx
double purity(const DensityGrid& g);                 // sum_ij |rho_ij|^2 dx^2
double hermiticity_residual(const DensityGrid& g);   // max |rho_ij - conj(rho_ji)| / max |rho|
double min_diagonal(const DensityGrid& g);           // min_i Re rho(x_i, x_i) / max |rho|
double edge_ratio(const DensityGrid& g);             // max |rho| on the boundary / max |rho|

struct GridSample {
    double t;
    MomentState grid;
    double trace;
    double hermiticity;
};

struct GridRun {
    DensityGrid final_state;
    std::vector<GridSample> samples;
    double max_trace_drift{0.0};
    double max_hermiticity{0.0};
    std::size_t boundary_warnings{0};
};

// Steps to t_end (last step shortened), sampling every `sample_every` steps.
GridRun evolve_grid(DensityGrid g, const SystemParams& p, const DiffusionConstants& d, double t_end, double dt,
                    std::size_t sample_every);

// "x,y,re,im" rows after a "# N=..., L=..., t=..., <params>" sidecar line.
void write_snapshot_csv(std::ostream& os, const DensityGrid& g, const SystemParams& p);

}  // namespace qbrown
