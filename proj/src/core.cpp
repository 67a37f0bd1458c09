#include "qbrown/core.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qbrown/error.hpp"

namespace qbrown {

void SystemParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(fmt::format("{} must be finite and > 0 (got {})", name, v));
        }
    };
    positive(mass, "mass M");
    positive(gamma, "gamma");
    positive(hbar, "hbar");
    positive(kB, "kB");
    if (!(omega0 >= 0.0) || !std::isfinite(omega0)) {
        throw ConfigError(fmt::format("omega0 must be finite and >= 0 (got {})", omega0));
    }
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw ConfigError(fmt::format("temperature T must be finite and >= 0 (got {})", temperature));
    }
    if (!(cutoff > 0.0)) {
        throw ConfigError(fmt::format("cutoff omega_c must be > 0 or infinite (got {})", cutoff));
    }
}

std::string SystemParams::describe() const {
    return fmt::format("M={:.17g} omega0={:.17g} gamma={:.17g} T={:.17g} omega_c={} hbar={:.17g} kB={:.17g}",
                       mass, omega0, gamma, temperature,
                       infinite_cutoff() ? std::string("inf") : fmt::format("{:.17g}", cutoff), hbar, kB);
}

const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::Overdamped: return "overdamped";
        case Regime::Underdamped: return "underdamped";
        case Regime::Critical: return "critical";
    }
    return "unknown";
}

bool is_critical(const SystemParams& p) noexcept {
    return std::abs(p.gamma - p.omega0) / p.gamma < kCriticalTolerance;
}

std::pair<SystemParams, SystemParams> critical_nudge(const SystemParams& p) noexcept {
    return {p.with_omega0(p.omega0 * (1.0 + kCriticalNudge)), p.with_omega0(p.omega0 * (1.0 - kCriticalNudge))};
}

EigenPair eigenvalues(const SystemParams& p) {
    const double g = p.gamma;
    const double w = p.omega0;
    EigenPair e;
    e.Omega = std::sqrt(cplx((g - w) * (g + w), 0.0));
    // gamma - Omega = omega0^2 / (gamma + Omega): avoids cancellation for omega0 << gamma.
    // Re(Omega) >= 0, so gamma + Omega never vanishes.
    e.lambda1 = -(w * w) / (g + e.Omega);
    e.lambda2 = -g - e.Omega;
    if (is_critical(p)) {
        e.regime = Regime::Critical;
    } else if (g > w) {
        e.regime = Regime::Overdamped;
    } else {
        e.regime = Regime::Underdamped;
        e.lambda1 = std::conj(e.lambda2);
    }
    return e;
}

namespace {

// Taylor coefficients of z*coth(z) = sum_n a_n z^(2n), a_n = 4^n B_2n / (2n)!.
constexpr std::array<double, 9> kCothSeries = {
    1.0,
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -1382.0 / 638512875.0,
    4.0 / 18243225.0,
    -3617.0 / 162820783125.0,
};

constexpr double kSeriesRadius = 1e-2;
// (z coth z - 1)/z^2 uses the series further out; 8 terms reach 1e-24 at |z| = 0.1.
constexpr double kRatioSeriesRadius = 0.1;

// e^w - 1 for complex w, accurate for small |w|.
cplx expm1(cplx w) {
    const double a = w.real();
    const double b = w.imag();
    const double s = std::sin(0.5 * b);
    return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

void check_pole(cplx z) {
    const double k = std::round(z.imag() / std::numbers::pi);
    if (k != 0.0 && std::abs(z - cplx(0.0, k * std::numbers::pi)) < 1e-12) {
        throw DomainError(fmt::format("xcothx: argument ({:.17g}, {:.17g}) is within 1e-12 of the pole i*{}*pi",
                                      z.real(), z.imag(), k));
    }
}

}  // namespace

namespace detail {

cplx xcothx_series(cplx z) {
    const cplx z2 = z * z;
    cplx acc = kCothSeries.back();
    for (auto it = kCothSeries.rbegin() + 1; it != kCothSeries.rend(); ++it) {
        acc = acc * z2 + *it;
    }
    return acc;
}

cplx xcothx_exponential(cplx z) {
    if (z.real() < 0.0) z = -z;
    if (z.real() == 0.0 && z.imag() < 0.0) z = -z;
    // coth z = (1 + e^{-2z}) / (1 - e^{-2z}) with Re z >= 0.
    const cplx em1 = expm1(-2.0 * z);  // e^{-2z} - 1
    return z * (2.0 + em1) / (-em1);
}

}  // namespace detail

cplx xcothx(cplx z) {
    if (std::abs(z) < kSeriesRadius) return detail::xcothx_series(z);
    check_pole(z);
    return detail::xcothx_exponential(z);
}

double xcothx(double x) { return xcothx(cplx(x, 0.0)).real(); }

cplx xcothx_m1_over_z2(cplx z) {
    if (std::abs(z) < kRatioSeriesRadius) {
        const cplx z2 = z * z;
        cplx acc = kCothSeries.back();
        for (auto it = kCothSeries.rbegin() + 1; it != kCothSeries.rend() - 1; ++it) {
            acc = acc * z2 + *it;
        }
        return acc;
    }
    return (xcothx(z) - 1.0) / (z * z);
}

}  // namespace qbrown
