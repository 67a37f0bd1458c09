// coefficients.hpp: Dissipation coefficients alpha and alpha'
//
// alpha is dimensionless; alpha' carries time^2. Both come from three
// z*coth(z) brackets evaluated at z = hbar*lambda/(2 kB T) for
// lambda in {lambda1, sqrt(lambda1*lambda2) = omega0, lambda2}.

#pragma once

#include "qbrown/core.hpp"

namespace qbrown {

enum class CutoffMode { Finite, Infinite };

struct AlphaPair {
    double alpha{1.0};
    double alpha_prime{0.0};
    CutoffMode cutoff_mode{CutoffMode::Infinite};
    // max(|Im alpha|/|alpha|, |Im alpha'|/|alpha'|) before the real parts were taken.
    double residual_imag{0.0};
};

// Requires T > 0 (UnsupportedTemperature otherwise). Critical damping is
// evaluated as the average of the two nudged neighbours.
AlphaPair alpha_pair(const SystemParams& p);

// Free-particle coefficient [x coth x - 1] / (4 gamma^2), x = hbar*gamma/(kB T).
// Only gamma, T, hbar and kB are read from p.
double alpha_prime_free(const SystemParams& p);

}  // namespace qbrown
