// diffusion.hpp: Diffusion constants, positivity functional, breakdown temperature

#pragma once

#include <cstddef>
#include <vector>

#include "qbrown/coefficients.hpp"
#include "qbrown/core.hpp"

namespace qbrown {

struct DiffusionConstants {
    double Dpp{0.0};  // momentum^2 / time
    double Dqq{0.0};  // length^2 / time
    double Dpq{0.0};  // action / time
    AlphaPair source;
    SystemParams params;
};

// Dpq = 4 kB T gamma^2 alpha', Dqq = 2 kB T gamma alpha' / M,
// Dpp = 2 kB T M gamma (alpha + 4 gamma^2 alpha').
DiffusionConstants diffusion_from_alpha(const SystemParams& p, const AlphaPair& a);

DiffusionConstants diffusion_constants(const SystemParams& p);

// Closed high-temperature forms; independent of omega0. Stored source is
// alpha = 1, alpha' = hbar^2 / (12 kB^2 T^2), which reproduces them exactly.
DiffusionConstants high_t_diffusion(const SystemParams& p);

// Constants of the free Brownian particle (alpha = 1, alpha' = alpha'_0).
DiffusionConstants free_particle_diffusion(const SystemParams& p);

struct PositivityReport {
    double delta{0.0};  // Dpp*Dqq - Dpq^2 - hbar^2 gamma^2 / 4
    bool positive{false};
    double temperature{0.0};
    SystemParams params;
};

PositivityReport positivity_delta(const DiffusionConstants& d);

struct TcScanRow {
    double temperature;  // kB T / (hbar gamma)
    double delta_scaled;  // Delta / (hbar gamma)^2
};

struct TcOptions {
    double t_lo{1e-3};  // bracket in kB T / (hbar gamma)
    double t_hi{1e3};
    std::size_t scan_points{200};
    double rel_tol{1e-10};
};

// kB T_c / (hbar gamma) for the given omega0/gamma in [1e-4, 1e2].
// `base` supplies M, gamma, hbar, kB and the cutoff; its omega0 and T are ignored.
// Throws NoSignChange (with the scan table) unless Delta changes sign exactly once.
double breakdown_temperature(double omega0_over_gamma, const SystemParams& base = {}, const TcOptions& opt = {});

struct TcPoint {
    double omega0_over_gamma;
    double tc;  // kB T_c / (hbar gamma)
};

struct TcCurve {
    std::vector<TcPoint> points;  // ascending abscissa
    bool monotone_increasing{false};
};

// Log-spaced curve over [lo, hi]. Points are evaluated on up to `threads`
// workers; output order depends only on the abscissa.
TcCurve tc_curve(double lo, double hi, std::size_t n_points, const SystemParams& base = {},
                 const TcOptions& opt = {}, unsigned threads = 1);

}  // namespace qbrown
