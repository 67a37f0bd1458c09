#include "qbrown/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "qbrown/error.hpp"
#include "qbrown/log.hpp"

namespace qbrown {

double MatsubaraConfig::cutoff_for(const SystemParams& p) const {
    return drude_cutoff.value_or(1e3 * std::max(p.gamma, p.omega0));
}

void MatsubaraConfig::validate() const {
    if (n_max < 1000) throw ConfigError(fmt::format("MatsubaraConfig: n_max must be >= 1000 (got {})", n_max));
    if (drude_cutoff && !(std::isfinite(*drude_cutoff) && *drude_cutoff > 0.0)) {
        throw ConfigError("MatsubaraConfig: drude_cutoff must be finite and > 0");
    }
}

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
        else comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_{0.0};
    double comp_{0.0};
};

enum class Moment { Q2, P2 };

struct Summand {
    double w2;
    double nu_step;  // 2 pi kB T / hbar
    double gamma;
    double cutoff;
    Moment moment;

    // Term for a (possibly non-integer) index n >= 0.
    double operator()(double n) const {
        const double nu = nu_step * n;
        const double friction = nu * 2.0 * gamma * cutoff / (nu + cutoff);
        const double denom = w2 + nu * nu + friction;
        if (moment == Moment::Q2) return 1.0 / denom;
        if (denom == 0.0) return 1.0;  // n = 0 for the free particle
        return (w2 + friction) / denom;
    }
};

// Integral of f over [N + 1/2, inf) via n = 1/u; the integrand f(1/u)/u^2 is
// smooth on [0, 1/(N+1/2)] because both summands fall off as 1/n^2.
double integral_tail(const Summand& f, double N) {
    const double upper = 1.0 / (N + 0.5);
    auto g = [&](double u) { return f(1.0 / u) / (u * u); };
    return boost::math::quadrature::gauss<double, 30>::integrate(g, 0.0, upper);
}

struct FoldedSums {
    double at_n;
    double at_2n;
};

// n = 0 term plus twice the n >= 1 terms, truncated at N and 2N.
FoldedSums folded_sum(const Summand& f, std::size_t N, TailMode tail) {
    CompensatedSum s;
    double at_n = 0.0;
    for (std::size_t n = 2 * N; n >= 1; --n) {
        // Summed from the small end; the partial sum at N is recovered below.
        s.add(f(static_cast<double>(n)));
        if (n == N + 1) at_n = s.value();
    }
    const double upper_half = at_n;          // terms N+1 .. 2N
    const double full = s.value();           // terms 1 .. 2N
    double sum_n = f(0.0) + 2.0 * (full - upper_half);
    double sum_2n = f(0.0) + 2.0 * full;
    if (tail == TailMode::IntegralTail) {
        sum_n += 2.0 * integral_tail(f, static_cast<double>(N));
        sum_2n += 2.0 * integral_tail(f, static_cast<double>(2 * N));
    }
    return {sum_n, sum_2n};
}

MatsubaraResult evaluate(const SystemParams& p, const MatsubaraConfig& c, Moment moment, double cutoff) {
    const double kT = p.kB * p.temperature;
    const Summand f{p.omega0 * p.omega0, 2.0 * std::numbers::pi * kT / p.hbar, p.gamma, cutoff, moment};
    const FoldedSums sums = folded_sum(f, c.n_max, c.tail_mode);
    const double prefactor = moment == Moment::Q2 ? kT / p.mass : p.mass * kT;
    MatsubaraResult r;
    r.value = prefactor * sums.at_2n;
    r.value_half = prefactor * sums.at_n;
    r.converged = std::abs(r.value - r.value_half) <= 1e-8 * std::abs(r.value);
    r.drude_cutoff = cutoff;
    return r;
}

void check_inputs(const SystemParams& p, const MatsubaraConfig& c, const char* who) {
    p.validate();
    c.validate();
    if (!(p.temperature > 0.0)) throw UnsupportedTemperature(fmt::format("{}: T must be > 0", who));
}

}  // namespace

MatsubaraResult matsubara_q2(const SystemParams& p, const MatsubaraConfig& c) {
    check_inputs(p, c, "matsubara_q2");
    if (!(p.omega0 > 0.0)) throw NoEquilibrium("matsubara_q2: <q^2> diverges for omega0 = 0");
    MatsubaraResult r = evaluate(p, c, Moment::Q2, c.cutoff_for(p));
    if (!r.converged) {
        log::warn(fmt::format("matsubara_q2: partial sums at n_max and 2 n_max differ by {:.3e} (relative)",
                              std::abs(r.value - r.value_half) / std::abs(r.value)));
    }
    return r;
}

MatsubaraResult matsubara_p2(const SystemParams& p, const MatsubaraConfig& c) {
    check_inputs(p, c, "matsubara_p2");
    const double cutoff = c.cutoff_for(p);
    MatsubaraResult r = evaluate(p, c, Moment::P2, cutoff);
    const MatsubaraResult doubled = evaluate(p, c, Moment::P2, 2.0 * cutoff);
    r.doubled_cutoff_value = doubled.value;
    r.cutoff_sensitivity = std::abs(doubled.value - r.value) / std::abs(r.value);
    r.cutoff_warning = r.cutoff_sensitivity > 0.01;
    if (!r.converged) {
        log::warn(fmt::format("matsubara_p2: partial sums at n_max and 2 n_max differ by {:.3e} (relative)",
                              std::abs(r.value - r.value_half) / std::abs(r.value)));
    }
    return r;
}

}  // namespace qbrown
