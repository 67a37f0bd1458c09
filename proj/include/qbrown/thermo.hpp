// thermo.hpp: Imaginary-time (Matsubara) equilibrium reference
//
// Equilibrium <q^2> and <p^2> of an oscillator with Drude-regularised Ohmic
// memory friction, hat_gamma(nu) = 2 gamma omega_c / (nu + omega_c):
//
//   <q^2> = (kB T / M)   sum_n 1 / (omega0^2 + nu_n^2 + |nu_n| hat_gamma(|nu_n|))
//   <p^2> = M kB T       sum_n (omega0^2 + |nu_n| hat_gamma) / (omega0^2 + nu_n^2 + |nu_n| hat_gamma)
//
// with nu_n = 2 pi n kB T / hbar. Used as an independent check of the
// master-equation equilibrium; it shares no code with the coefficients path.

#pragma once

#include <cstddef>
#include <optional>

#include "qbrown/core.hpp"

namespace qbrown {

enum class TailMode { None, IntegralTail };

struct MatsubaraConfig {
    std::size_t n_max{1'000'000};
    TailMode tail_mode{TailMode::IntegralTail};
    // Defaults to 1e3 * max(gamma, omega0). Must be finite.
    std::optional<double> drude_cutoff;

    double cutoff_for(const SystemParams& p) const;
    void validate() const;
};

struct MatsubaraResult {
    double value{0.0};
    double value_half{0.0};     // same sum truncated at n_max (the value uses 2 n_max)
    bool converged{false};      // |value - value_half| <= 1e-8 |value|
    double drude_cutoff{0.0};
    // <p^2> only: value recomputed at 2*omega_c, relative difference, and the >1% flag.
    std::optional<double> doubled_cutoff_value;
    double cutoff_sensitivity{0.0};
    bool cutoff_warning{false};
};

MatsubaraResult matsubara_q2(const SystemParams& p, const MatsubaraConfig& c = {});
MatsubaraResult matsubara_p2(const SystemParams& p, const MatsubaraConfig& c = {});

}  // namespace qbrown
