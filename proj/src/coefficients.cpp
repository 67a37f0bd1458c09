#include "qbrown/coefficients.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qbrown/error.hpp"
#include "qbrown/log.hpp"

namespace qbrown {
namespace {

// One bracket of the alpha formulas divided by lambda^2:
//   [ z coth z / (1 + lambda^2/omega_c^2) - 1 ] / lambda^2,   z = lambda * hbar/(2 kB T)
// rewritten as (s^2 h(z) - 1/omega_c^2) / (1 + lambda^2/omega_c^2) with
// h(z) = (z coth z - 1)/z^2, which stays finite as lambda -> 0.
cplx bracket_over_lambda2(cplx lambda, const SystemParams& p) {
    const double s = p.thermal_scale();
    const cplx h = xcothx_m1_over_z2(lambda * s);
    if (p.infinite_cutoff()) return s * s * h;
    const double inv_wc2 = 1.0 / (p.cutoff * p.cutoff);
    return (s * s * h - inv_wc2) / (1.0 + lambda * lambda * inv_wc2);
}

double relative_imag(cplx v) {
    const double mag = std::abs(v);
    return mag > 0.0 ? std::abs(v.imag()) / mag : 0.0;
}

AlphaPair alpha_pair_direct(const SystemParams& p) {
    const EigenPair e = eigenvalues(p);
    const cplx l1 = e.lambda1;
    const cplx l2 = e.lambda2;
    // sqrt(lambda1*lambda2) resolved to +omega0; the kernel is even so the sign is immaterial.
    const cplx root(p.omega0, 0.0);

    const cplx b1 = bracket_over_lambda2(l1, p);
    const cplx b0 = bracket_over_lambda2(root, p);
    const cplx b2 = bracket_over_lambda2(l2, p);

    const cplx diff = l2 - l1;
    const cplx pref = (l1 * l2) / diff;
    const cplx alpha = 1.0 + pref * pref * (b1 - 2.0 * b0 + b2);
    const cplx alpha_prime = (l1 * l1 * b1 - 2.0 * root * root * b0 + l2 * l2 * b2) / (diff * diff);

    AlphaPair out;
    out.alpha = alpha.real();
    out.alpha_prime = alpha_prime.real();
    out.cutoff_mode = p.infinite_cutoff() ? CutoffMode::Infinite : CutoffMode::Finite;
    out.residual_imag = std::max(relative_imag(alpha), relative_imag(alpha_prime));
    return out;
}

}  // namespace

AlphaPair alpha_pair(const SystemParams& p) {
    p.validate();
    if (p.temperature == 0.0) {
        throw UnsupportedTemperature("alpha_pair: T = 0 is not supported (coth arguments diverge)");
    }
    AlphaPair out;
    if (is_critical(p)) {
        const auto [above, below] = critical_nudge(p);
        const AlphaPair a = alpha_pair_direct(above);
        const AlphaPair b = alpha_pair_direct(below);
        out.alpha = 0.5 * (a.alpha + b.alpha);
        out.alpha_prime = 0.5 * (a.alpha_prime + b.alpha_prime);
        out.cutoff_mode = a.cutoff_mode;
        out.residual_imag = std::max(a.residual_imag, b.residual_imag);
    } else {
        out = alpha_pair_direct(p);
    }
    if (!std::isfinite(out.alpha) || !std::isfinite(out.alpha_prime)) {
        throw NumericalError(fmt::format("alpha_pair: non-finite result for {}", p.describe()));
    }
    if (out.alpha_prime < 0.0 || out.alpha <= 0.0) {
        log::warn(fmt::format("alpha_pair: sign monitor tripped (alpha={:.6g}, alpha'={:.6g}) at {}",
                              out.alpha, out.alpha_prime, p.describe()));
    }
    return out;
}

double alpha_prime_free(const SystemParams& p) {
    if (!(p.gamma > 0.0) || !(p.temperature > 0.0)) {
        throw ConfigError("alpha_prime_free: requires gamma > 0 and T > 0");
    }
    const double x = p.hbar * p.gamma / (p.kB * p.temperature);
    // (x coth x - 1)/(4 gamma^2) = x^2 h(x) / (4 gamma^2)
    return x * x * xcothx_m1_over_z2(cplx(x, 0.0)).real() / (4.0 * p.gamma * p.gamma);
}

}  // namespace qbrown
