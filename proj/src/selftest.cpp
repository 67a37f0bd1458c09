#include "qbrown/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "qbrown/coefficients.hpp"
#include "qbrown/core.hpp"
#include "qbrown/diffusion.hpp"
#include "qbrown/dynamics.hpp"
#include "qbrown/grid.hpp"
#include "qbrown/log.hpp"
#include "qbrown/thermo.hpp"

namespace qbrown::selftest {
namespace {

double rel_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// Additive recurrence on the golden ratio: a deterministic, well-spread
// sequence in [0, 1) so the suite needs no random numbers.
class Lattice {
public:
    explicit Lattice(double offset = 0.0) : x_(offset) {}
    double next() {
        x_ += 0.6180339887498949;
        x_ -= std::floor(x_);
        return x_;
    }
    double log_range(double lo, double hi) { return lo * std::exp(next() * std::log(hi / lo)); }

private:
    double x_;
};

SystemParams params(double gamma, double omega0, double T) {
    SystemParams p;
    p.gamma = gamma;
    p.omega0 = omega0;
    p.temperature = T;
    return p;
}

CheckResult verdict(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

CheckResult eigen_identities() {
    Lattice a(0.1), b(0.7);
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
        const SystemParams p = params(a.log_range(1e-3, 1e3), b.log_range(1e-3, 1e3), 1.0);
        const EigenPair e = eigenvalues(p);
        const double w2 = p.omega0 * p.omega0;
        worst = std::max(worst, std::abs(e.lambda1 * e.lambda2 - w2) / w2);
        worst = std::max(worst, std::abs(e.lambda1 + e.lambda2 + 2.0 * p.gamma) / (2.0 * p.gamma));
    }
    return verdict("eigenvalue product and sum", worst < 1e-12, fmt::format("max rel err {:.2e}", worst));
}

CheckResult xcothx_branches() {
    Lattice r(0.3), phi(0.9);
    double worst = 0.0;
    bool even = true;
    for (int k = 0; k < 1000; ++k) {
        const cplx z = std::polar(r.log_range(5e-3, 5e-2), 2.0 * std::numbers::pi * phi.next());
        const cplx s = detail::xcothx_series(z);
        worst = std::max(worst, std::abs(s - detail::xcothx_exponential(z)) / std::abs(s));
        const cplx w = z * 400.0;
        even = even && xcothx(w) == xcothx(-w);
    }
    return verdict("xcothx branch overlap and evenness", worst < 1e-13 && even,
                   fmt::format("max rel gap {:.2e}, even={}", worst, even));
}

CheckResult xcothx_partial_fractions() {
    constexpr long N = 100'000;
    const double pi = std::numbers::pi;
    double worst = 0.0;
    for (double x : {0.1, 1.0, 10.0}) {
        double sum = 0.0;
        for (long n = N; n >= 1; --n) sum += 2.0 * x * x / (x * x + double(n) * double(n) * pi * pi);
        sum += 2.0 * x / pi * (0.5 * pi - std::atan(pi * (N + 0.5) / x));
        worst = std::max(worst, rel_gap(sum, xcothx(x) - 1.0));
    }
    return verdict("xcothx partial-fraction series", worst < 1e-6, fmt::format("max rel gap {:.2e}", worst));
}

CheckResult free_particle_coefficients() {
    const SystemParams p = params(1.0, 1e-8, 1.0);
    const AlphaPair a = alpha_pair(p);
    const double ga = std::abs(a.alpha - 1.0);
    const double gp = rel_gap(a.alpha_prime, alpha_prime_free(p));
    return verdict("alpha -> 1, alpha' -> alpha'_0 as omega0 -> 0", ga < 1e-6 && gp < 1e-6,
                   fmt::format("|alpha-1|={:.2e}, alpha' gap={:.2e}", ga, gp));
}

CheckResult underdamped_reality() {
    Lattice a(0.2), b(0.5), c(0.8);
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
        const double w = a.log_range(1e-2, 1e2);
        worst = std::max(worst, alpha_pair(params(w * b.log_range(1e-3, 0.99), w, c.log_range(0.05, 50.0))).residual_imag);
    }
    return verdict("underdamped coefficients are real", worst < 1e-10, fmt::format("max residual {:.2e}", worst));
}

CheckResult high_t_delta() {
    double worst = 0.0;
    for (double ratio : {0.5, 1.0, 2.0}) {
        const double delta = positivity_delta(diffusion_constants(params(1.0, 1.0 / ratio, 100.0))).delta;
        worst = std::max(worst, std::abs(12.0 * delta - 1.0));
    }
    return verdict("Delta -> hbar^2 gamma^2 / 12 at high T", worst < 0.02, fmt::format("max rel gap {:.2e}", worst));
}

CheckResult breakdown_small_omega() {
    const double tc = breakdown_temperature(1e-3);
    const bool ok = std::abs(tc - 0.4) <= 0.05 && std::abs(tc - 0.416778279800482) < 1e-4;
    return verdict("breakdown temperature at omega0/gamma = 1e-3", ok, fmt::format("kB Tc / hbar gamma = {:.6f}", tc));
}

CheckResult equilibrium_fixed_point() {
    double worst = 0.0;
    for (double w : {0.3, 1.0, 3.0}) {
        const SystemParams p = params(1.0, w, 2.0);
        const DiffusionConstants d = diffusion_constants(p);
        const MomentState eq = equilibrium_moments(p, d);
        const MomentRates r = moment_derivative(eq, p, d);
        const double scale = std::max(eq.q2, eq.p2);
        worst = std::max({worst, std::abs(r.q2) / scale, std::abs(r.p2) / scale, std::abs(r.qp) / scale});
    }
    return verdict("equilibrium is a fixed point", worst < 1e-10, fmt::format("max rate {:.2e}", worst));
}

CheckResult analytic_vs_numeric() {
    double worst = 0.0;
    for (double ratio : {0.1, 1.0 + 1e-5, 2.0}) {
        const SystemParams p = params(1.0, 1.0 / ratio, 1.0);
        const DiffusionConstants d = diffusion_constants(p);
        const MomentState s0{1.0, 2.0, 0.3, 0.0};
        const double dt = 0.002 / std::max(p.gamma, p.omega0);
        const MomentTrajectory traj = evolve_numeric(s0, p, d, 5.0, dt, 100);
        for (const auto& s : traj.samples) {
            const MomentState a = analytic_solution(s0, p, d, s.t);
            const double scale = std::max({std::abs(a.q2), std::abs(a.p2), std::abs(a.qp)});
            worst = std::max(
                worst, std::max({std::abs(a.q2 - s.q2), std::abs(a.p2 - s.p2), std::abs(a.qp - s.qp)}) / scale);
        }
    }
    return verdict("analytic and numeric moments agree", worst < 1e-6, fmt::format("max rel gap {:.2e}", worst));
}

CheckResult c2_closed_form_check() {
    Lattice a(0.05), b(0.45), c(0.65), q(0.15), k(0.35), x(0.55);
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        const double g = a.log_range(0.1, 10.0);
        double w = b.log_range(0.01, 10.0);
        if (std::abs(g - w) < 0.05 * g) w *= 1.2;
        const SystemParams p = params(g, w, c.log_range(0.5, 50.0));
        MomentState s0;
        s0.q2 = q.log_range(0.1, 5.0);
        s0.p2 = k.log_range(0.1, 5.0);
        s0.qp = (x.next() - 0.5) * std::sqrt(s0.q2 * s0.p2);
        worst = std::max(worst, analytic_coefficients(s0, p, diffusion_constants(p)).c2_crosscheck);
    }
    return verdict("C2 closed form matches the linear solve", worst < 1e-8, fmt::format("max rel gap {:.2e}", worst));
}

CheckResult matsubara_equipartition() {
    MatsubaraConfig c;
    c.n_max = 100'000;
    const SystemParams p = params(0.01, 1.0, 100.0);
    const double q = matsubara_q2(p, c).value;
    const double k = matsubara_p2(p, c).value;
    const bool ok = rel_gap(q, 100.0) < 0.01 && rel_gap(k, 100.0) < 0.01;
    return verdict("Matsubara sums reach equipartition", ok, fmt::format("<q^2>={:.6g}, <p^2>={:.6g}", q, k));
}

CheckResult grid_round_trip() {
    const MomentState m{0.3, 2.0, 0.4, 0.0};
    const MomentState back = moments_from_grid(gaussian_state(m, 128, 4.5));
    const double worst = std::max({rel_gap(back.q2, m.q2), rel_gap(back.p2, m.p2), rel_gap(back.qp, m.qp)});
    return verdict("grid moments round-trip", worst < 1e-3, fmt::format("max rel gap {:.2e}", worst));
}

CheckResult grid_step_invariants() {
    const SystemParams p = params(1.0, 2.0, 2.0);
    const DiffusionConstants d = diffusion_constants(p);
    const DensityGrid g = gaussian_state(equilibrium_moments(p, d), 64, 6.0);
    const GridRun run = evolve_grid(g, p, d, 0.1, max_stable_dt(g, p, d), 10);
    const bool ok = run.max_trace_drift < 1e-6 && run.max_hermiticity < 1e-9;
    return verdict("grid step preserves trace and hermiticity", ok,
                   fmt::format("trace drift {:.2e}, hermiticity {:.2e}", run.max_trace_drift, run.max_hermiticity));
}

}  // namespace

std::vector<Check> invariant_checks() {
    return {
        {"eigen", eigen_identities},
        {"xcothx-branches", xcothx_branches},
        {"xcothx-series", xcothx_partial_fractions},
        {"free-particle-coefficients", free_particle_coefficients},
        {"underdamped-reality", underdamped_reality},
        {"high-t-delta", high_t_delta},
        {"breakdown", breakdown_small_omega},
        {"fixed-point", equilibrium_fixed_point},
        {"analytic-numeric", analytic_vs_numeric},
        {"c2-closed-form", c2_closed_form_check},
        {"matsubara", matsubara_equipartition},
        {"grid-round-trip", grid_round_trip},
        {"grid-step", grid_step_invariants},
    };
}

int run_all(std::ostream& os) {
    int failures = 0;
    // Lattice cases below Tc trip the coefficient sign monitor; count instead of printing.
    std::size_t warnings = 0;
    log::ScopedSink sink([&](std::string_view) { ++warnings; });
    for (const Check& c : invariant_checks()) {
        CheckResult r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {c.name, false, fmt::format("threw: {}", e.what())};
        }
        if (!r.passed) ++failures;
        os << (r.passed ? "PASS " : "FAIL ") << c.name << ": " << r.name << " (" << r.detail << ")\n";
    }
    os << fmt::format("{} checks, {} failed, {} library warnings\n", invariant_checks().size(), failures, warnings);
    return failures;
}

}  // namespace qbrown::selftest
