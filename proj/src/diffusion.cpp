#include "qbrown/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <string>

#include <fmt/format.h>

#include "qbrown/error.hpp"

namespace qbrown {

DiffusionConstants diffusion_from_alpha(const SystemParams& p, const AlphaPair& a) {
    const double kT = p.kB * p.temperature;
    const double g = p.gamma;
    DiffusionConstants d;
    d.Dpq = 4.0 * kT * g * g * a.alpha_prime;
    d.Dqq = 2.0 * kT * g * a.alpha_prime / p.mass;
    d.Dpp = 2.0 * kT * p.mass * g * (a.alpha + 4.0 * g * g * a.alpha_prime);
    d.source = a;
    d.params = p;
    return d;
}

DiffusionConstants diffusion_constants(const SystemParams& p) { return diffusion_from_alpha(p, alpha_pair(p)); }

DiffusionConstants high_t_diffusion(const SystemParams& p) {
    p.validate();
    if (p.temperature == 0.0) throw UnsupportedTemperature("high_t_diffusion: T must be > 0");
    const double kT = p.kB * p.temperature;
    AlphaPair a;
    a.alpha = 1.0;
    a.alpha_prime = p.hbar * p.hbar / (12.0 * kT * kT);
    a.cutoff_mode = CutoffMode::Infinite;
    return diffusion_from_alpha(p, a);
}

DiffusionConstants free_particle_diffusion(const SystemParams& p) {
    AlphaPair a;
    a.alpha = 1.0;
    a.alpha_prime = alpha_prime_free(p);
    a.cutoff_mode = CutoffMode::Infinite;
    return diffusion_from_alpha(p, a);
}

PositivityReport positivity_delta(const DiffusionConstants& d) {
    const SystemParams& p = d.params;
    const double scale = p.hbar * p.gamma;  // Delta is reported in units of (hbar gamma)^2
    const double pp = d.Dpp / scale;
    const double qq = d.Dqq / scale;
    const double pq = d.Dpq / scale;
    PositivityReport r;
    r.delta = (pp * qq - pq * pq - 0.25) * scale * scale;
    r.positive = r.delta > 0.0;
    r.temperature = p.temperature;
    r.params = p;
    return r;
}

namespace {

double scaled_delta(const SystemParams& base, double ratio, double t_scaled) {
    SystemParams p = base;
    p.omega0 = ratio * base.gamma;
    p.temperature = t_scaled * base.hbar * base.gamma / base.kB;
    const double hg = base.hbar * base.gamma;
    return positivity_delta(diffusion_constants(p)).delta / (hg * hg);
}

std::string scan_table(const std::vector<TcScanRow>& rows) {
    std::string out = "kBT/hbar_gamma,Delta/(hbar_gamma)^2\n";
    for (const auto& r : rows) out += fmt::format("{:.6e},{:.6e}\n", r.temperature, r.delta_scaled);
    return out;
}

}  // namespace

double breakdown_temperature(double ratio, const SystemParams& base, const TcOptions& opt) {
    if (!(ratio >= 1e-4 && ratio <= 1e2)) {
        throw ConfigError(fmt::format("breakdown_temperature: omega0/gamma = {} outside [1e-4, 1e2]", ratio));
    }
    if (opt.scan_points < 2 || !(opt.t_lo > 0.0) || !(opt.t_hi > opt.t_lo)) {
        throw ConfigError("breakdown_temperature: invalid scan bracket");
    }
    base.with_omega0(ratio * base.gamma).validate();

    const double log_lo = std::log(opt.t_lo);
    const double log_hi = std::log(opt.t_hi);
    const std::size_t n = opt.scan_points;
    std::vector<TcScanRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = i == 0 ? opt.t_lo : (i + 1 == n) ? opt.t_hi : std::exp(log_lo + (log_hi - log_lo) * double(i) / double(n - 1));
        rows[i] = {t, scaled_delta(base, ratio, t)};
    }

    std::vector<std::size_t> crossings;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if ((rows[i].delta_scaled > 0.0) != (rows[i + 1].delta_scaled > 0.0)) crossings.push_back(i);
    }
    if (crossings.size() != 1) {
        throw NoSignChange(fmt::format("breakdown_temperature: expected one sign change of Delta for omega0/gamma={} "
                                       "in [{}, {}], found {}\n{}",
                                       ratio, opt.t_lo, opt.t_hi, crossings.size(), scan_table(rows)));
    }

    // Bisection in log T.
    double a = std::log(rows[crossings[0]].temperature);
    double b = std::log(rows[crossings[0] + 1].temperature);
    const bool positive_at_a = rows[crossings[0]].delta_scaled > 0.0;
    while (std::expm1(b - a) > opt.rel_tol) {
        const double mid = 0.5 * (a + b);
        const bool positive_mid = scaled_delta(base, ratio, std::exp(mid)) > 0.0;
        if (positive_mid == positive_at_a) a = mid;
        else b = mid;
    }
    return std::exp(0.5 * (a + b));
}

TcCurve tc_curve(double lo, double hi, std::size_t n_points, const SystemParams& base, const TcOptions& opt,
                 unsigned threads) {
    if (n_points < 2 || !(lo > 0.0) || !(hi > lo)) {
        throw ConfigError(fmt::format("tc_curve: need 0 < lo < hi and at least 2 points (got {}:{} x{})", lo, hi,
                                      n_points));
    }
    TcCurve curve;
    curve.points.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = i == 0                ? lo
                         : (i + 1 == n_points) ? hi
                             : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * double(i) / double(n_points - 1));
        curve.points[i].omega0_over_gamma = x;
    }

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_points)));
    std::vector<std::exception_ptr> errors(n_points);
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n_points; i += workers) {
            try {
                curve.points[i].tc = breakdown_temperature(curve.points[i].omega0_over_gamma, base, opt);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::future<void>> jobs;
        for (unsigned w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, work, w));
        for (auto& j : jobs) j.get();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    curve.monotone_increasing = std::is_sorted(curve.points.begin(), curve.points.end(),
                                               [](const TcPoint& a, const TcPoint& b) { return a.tc < b.tc; });
    return curve;
}

}  // namespace qbrown
