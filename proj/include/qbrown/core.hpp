// core.hpp: Physical parameters, damping eigenvalues, and the z*coth(z) kernel
//
// Conventions: the classical motion is q'' + 2*gamma*q' + omega0^2*q = 0, so
// gamma is half the momentum relaxation rate. Default units are
// hbar = kB = M = gamma = 1; temperatures are then kB*T/(hbar*gamma).

#pragma once

#include <complex>
#include <limits>
#include <string>
#include <utility>

namespace qbrown {

using cplx = std::complex<double>;

inline constexpr double kInfiniteCutoff = std::numeric_limits<double>::infinity();

// |gamma - omega0| / gamma below this counts as critical damping.
inline constexpr double kCriticalTolerance = 1e-9;
// Relative shift omega0 -> omega0 * (1 +- kCriticalNudge) used to step around
// the degenerate point; results are averaged over both sides.
inline constexpr double kCriticalNudge = 1e-7;

struct SystemParams {
    double mass{1.0};
    double omega0{1.0};
    double gamma{1.0};
    double temperature{1.0};
    double cutoff{kInfiniteCutoff};  // Drude cutoff omega_c; infinity removes it
    double hbar{1.0};
    double kB{1.0};

    // Throws ConfigError naming the offending field.
    void validate() const;

    bool infinite_cutoff() const noexcept { return cutoff == kInfiniteCutoff; }

    // chi = hbar*omega_c / (2 kB T). Infinite when the cutoff is.
    double chi() const noexcept { return hbar * cutoff / (2.0 * kB * temperature); }

    // hbar / (2 kB T): multiplies a frequency to give the coth argument.
    double thermal_scale() const noexcept { return hbar / (2.0 * kB * temperature); }

    SystemParams with_omega0(double w) const noexcept {
        SystemParams p = *this;
        p.omega0 = w;
        return p;
    }
    SystemParams with_temperature(double t) const noexcept {
        SystemParams p = *this;
        p.temperature = t;
        return p;
    }

    std::string describe() const;
};

enum class Regime { Overdamped, Underdamped, Critical };

const char* to_string(Regime r) noexcept;

struct EigenPair {
    cplx lambda1;  // -gamma + Omega
    cplx lambda2;  // -gamma - Omega
    cplx Omega;    // principal sqrt(gamma^2 - omega0^2)
    Regime regime{Regime::Overdamped};
};

EigenPair eigenvalues(const SystemParams& p);

bool is_critical(const SystemParams& p) noexcept;

// The two nudged parameter sets (omega0 above and below critical).
std::pair<SystemParams, SystemParams> critical_nudge(const SystemParams& p) noexcept;

// z*coth(z). Exactly even; the value at z = 0 is 1.
// Throws DomainError within 1e-12 of a pole i*k*pi, k != 0.
cplx xcothx(cplx z);
double xcothx(double x);

// (z*coth(z) - 1) / z^2 without cancellation at small |z|. Tends to 1/3.
cplx xcothx_m1_over_z2(cplx z);

namespace detail {
// Individual branches, exposed for cross-checking.
cplx xcothx_series(cplx z);
cplx xcothx_exponential(cplx z);
}  // namespace detail

}  // namespace qbrown
