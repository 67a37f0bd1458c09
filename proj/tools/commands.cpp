#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "qbrown/coefficients.hpp"
#include "qbrown/csv.hpp"
#include "qbrown/diffusion.hpp"
#include "qbrown/dynamics.hpp"
#include "qbrown/error.hpp"
#include "qbrown/grid.hpp"
#include "qbrown/selftest.hpp"
#include "qbrown/thermo.hpp"

namespace qbrown::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::map<std::string, std::vector<std::string>>& column_table() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"coeffs", {"M", "omega0", "gamma", "T", "omega_c", "hbar", "kB", "alpha", "alpha_prime", "residual_imag",
                    "regime"}},
        {"diffusion", {"M", "omega0", "gamma", "T", "omega_c", "hbar", "kB", "Dpp", "Dqq", "Dpq", "delta",
                       "positive"}},
        {"tc-curve", {"omega0_over_gamma", "kBTc_over_hbar_gamma"}},
        {"equilibrium", {"T", "q2", "p2", "qp", "kinetic", "potential", "q2_oracle", "p2_oracle", "q2_gap", "p2_gap",
                         "p2_cutoff_sensitivity", "above_tc"}},
        {"moments", {"t", "q2", "p2", "qp", "q2_numeric", "p2_numeric", "qp_numeric"}},
        {"free-particle", {"M", "gamma", "T", "hbar", "kB", "p2_longtime", "p2_predicted", "p2_gap", "q2_slope_fitted",
                           "q2_slope_predicted", "slope_gap", "alpha_prime0"}},
        {"grid-validate", {"t", "q2_grid", "p2_grid", "qp_grid", "q2_analytic", "p2_analytic", "qp_analytic",
                           "moment_gap", "trace", "hermiticity"}},
        {"selftest", {}},
    };
    return table;
}


std::vector<double> sweep_values(const Sweep& s, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            v[i] = s.lo;
        } else if (i + 1 == n) {
            v[i] = s.hi;
        } else {
            const double f = double(i) / double(n - 1);
            v[i] = s.log ? std::exp(std::log(s.lo) + f * (std::log(s.hi) - std::log(s.lo))) : s.lo + f * (s.hi - s.lo);
        }
    }
    return v;
}

void set_param(SystemParams& p, const std::string& var, double v) {
    if (var == "M") p.mass = v;
    else if (var == "omega0") p.omega0 = v;
    else if (var == "gamma") p.gamma = v;
    else if (var == "T") p.temperature = v;
    else if (var == "omega-c") p.cutoff = v;
    else if (var == "hbar") p.hbar = v;
    else if (var == "kB") p.kB = v;
    else throw ConfigError(fmt::format("--sweep: unknown variable '{}'", var));
}

// Parameter sets for every row: the sweep applied to the base parameters.
std::vector<SystemParams> rows_for(const RunConfig& c, std::size_t default_points,
                                   const std::vector<std::string>& allowed) {
    if (!c.sweep) {
        c.params.validate();
        return {c.params};
    }
    const Sweep& s = *c.sweep;
    if (std::find(allowed.begin(), allowed.end(), s.variable) == allowed.end()) {
        throw ConfigError(fmt::format("--sweep: variable '{}' is not supported by this command", s.variable));
    }
    const std::size_t n = c.points ? c.points : default_points;
    std::vector<SystemParams> rows;
    for (double v : sweep_values(s, n)) {
        SystemParams p = c.params;
        set_param(p, s.variable, v);
        p.validate();
        rows.push_back(p);
    }
    return rows;
}

// f(i) for i in [0, n) on up to `threads` workers; results in index order,
// the first failure (by index) is rethrown.
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F f) -> std::vector<decltype(f(std::size_t{0}))> {
    using R = decltype(f(std::size_t{0}));
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += workers) {
            try {
                out[i] = f(i);
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
    return out;
}

std::string sweep_text(const RunConfig& c, std::size_t default_points) {
    if (!c.sweep) return "none";
    const Sweep& s = *c.sweep;
    return fmt::format("{}={}:{}:{} x{}", s.variable, csv::number(s.lo), csv::number(s.hi), s.log ? "log" : "lin",
                       c.points ? c.points : default_points);
}

void preamble(csv::Writer& w, const std::string& command, const RunConfig& c, const std::string& extra) {
    const SystemParams& p = c.params;
    w.comment(fmt::format("qbrown {}", command));
    w.comment(fmt::format("units: hbar={} kB={} M={}; T is a temperature (kB*T is an energy); frequencies are "
                          "angular; dimensionless defaults hbar=kB=M=gamma=1",
                          csv::number(p.hbar), csv::number(p.kB), csv::number(p.mass)));
    w.comment(fmt::format("damping convention: q'' + 2 gamma q' + omega0^2 q = 0"));
    w.comment(fmt::format("base: {}", p.describe()));
    if (!extra.empty()) w.comment(extra);
}

void emit(const RunConfig& c, const std::string& body, const std::vector<std::string>& header) {
    if (c.out.empty()) {
        std::cout << body;
        std::cout.flush();
    } else {
        std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError(fmt::format("--out: cannot open '{}' for writing", c.out));
        f << body;
        if (!f) throw ConfigError(fmt::format("--out: write to '{}' failed", c.out));
    }
    if (!c.plot.empty()) {
        if (c.out.empty()) throw ConfigError("--plot: requires --out so the script has a data file to read");
        std::ofstream g(c.plot, std::ios::binary | std::ios::trunc);
        if (!g) throw ConfigError(fmt::format("--plot: cannot open '{}' for writing", c.plot));
        g << "set datafile separator ','\n"
          << "set key autotitle columnhead\n"
          << fmt::format("plot for [i=2:{}] '{}' using 1:i with linespoints\n", header.size(), c.out);
    }
}

double gap_to(double value, double reference) {
    return reference != 0.0 ? std::abs(value - reference) / std::abs(reference) : std::abs(value);
}

}  // namespace

double parse_number(const std::string& flag, const std::string& text) {
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty()) {
        throw ConfigError(fmt::format("{}: expected a number, got '{}'", flag, text));
    }
    return v;
}

const std::vector<std::string>& columns(const std::string& command) { return column_table().at(command); }

Sweep parse_range(const std::string& flag, const std::string& text, const std::string& variable) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > 3) {
        throw ConfigError(fmt::format("{}: expected lo:hi[:log|:lin], got '{}'", flag, text));
    }
    Sweep s;
    s.variable = variable;
    s.lo = parse_number(flag, parts[0]);
    s.hi = parse_number(flag, parts[1]);
    if (parts.size() == 3) {
        if (parts[2] == "log") s.log = true;
        else if (parts[2] != "lin") throw ConfigError(fmt::format("{}: spacing must be 'log' or 'lin', got '{}'", flag, parts[2]));
    }
    if (!std::isfinite(s.lo) || !std::isfinite(s.hi) || s.hi < s.lo) {
        throw ConfigError(fmt::format("{}: need finite lo <= hi, got '{}'", flag, text));
    }
    if (s.log && !(s.lo > 0.0)) throw ConfigError(fmt::format("{}: log spacing needs lo > 0, got '{}'", flag, text));
    return s;
}

Sweep parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError(fmt::format("--sweep: expected var=lo:hi[:log], got '{}'", text));
    }
    const std::string var = text.substr(0, eq);
    SystemParams probe;
    set_param(probe, var, 1.0);  // rejects unknown names
    return parse_range("--sweep", text.substr(eq + 1), var);
}

unsigned thread_budget() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QBROWN_THREADS")) {
        const std::string text(env);
        unsigned cap = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
        if (ec != std::errc() || ptr != text.data() + text.size() || cap == 0) {
            throw ConfigError(fmt::format("QBROWN_THREADS: expected a positive integer, got '{}'", text));
        }
        n = std::min(n, cap);
    }
    return n;
}

int run_coeffs(const RunConfig& c) {
    const auto rows = rows_for(c, 50, {"M", "omega0", "gamma", "T", "omega-c", "hbar", "kB"});
    const auto results = parallel_map(rows.size(), c.threads, [&](std::size_t i) { return alpha_pair(rows[i]); });
    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "coeffs", c, fmt::format("sweep: {}", sweep_text(c, 50)));
    w.header(columns("coeffs"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SystemParams& p = rows[i];
        const AlphaPair& a = results[i];
        w.raw_row({csv::number(p.mass), csv::number(p.omega0), csv::number(p.gamma), csv::number(p.temperature),
                   csv::number(p.cutoff), csv::number(p.hbar), csv::number(p.kB), csv::number(a.alpha),
                   csv::number(a.alpha_prime), csv::number(a.residual_imag), to_string(eigenvalues(p).regime)});
    }
    emit(c, os.str(), columns("coeffs"));
    return 0;
}

int run_diffusion(const RunConfig& c) {
    const auto rows = rows_for(c, 50, {"M", "omega0", "gamma", "T", "omega-c", "hbar", "kB"});
    const auto results =
        parallel_map(rows.size(), c.threads, [&](std::size_t i) { return diffusion_constants(rows[i]); });
    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "diffusion", c,
             fmt::format("sweep: {}; delta = Dpp*Dqq - Dpq^2 - hbar^2 gamma^2/4", sweep_text(c, 50)));
    w.header(columns("diffusion"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SystemParams& p = rows[i];
        const DiffusionConstants& d = results[i];
        const PositivityReport r = positivity_delta(d);
        w.row({p.mass, p.omega0, p.gamma, p.temperature, p.cutoff, p.hbar, p.kB, d.Dpp, d.Dqq, d.Dpq, r.delta,
               r.positive ? 1.0 : 0.0});
    }
    emit(c, os.str(), columns("diffusion"));
    return 0;
}

int run_tc_curve(const RunConfig& c) {
    if (c.sweep) throw ConfigError("--sweep: tc-curve sweeps --omega0-over-gamma only");
    const Sweep range = parse_range("--omega0-over-gamma", c.omega0_over_gamma, "omega0_over_gamma");
    if (!(range.lo > 0.0)) throw ConfigError("--omega0-over-gamma: lo must be > 0");
    const std::size_t n = c.points ? c.points : 200;
    SystemParams base = c.params;
    base.validate();
    TcCurve curve;
    if (n == 1 || range.lo == range.hi) {
        curve.points = {{range.lo, breakdown_temperature(range.lo, base)}};
        curve.monotone_increasing = true;
    } else {
        curve = tc_curve(range.lo, range.hi, n, base, {}, c.threads);
    }
    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "tc-curve", c,
             fmt::format("abscissa log-spaced over {} x{}; only M, gamma, hbar, kB and omega_c are read from base; "
                         "monotone_increasing={}",
                         c.omega0_over_gamma, curve.points.size(), curve.monotone_increasing ? "true" : "false"));
    w.header(columns("tc-curve"));
    for (const auto& pt : curve.points) w.row({pt.omega0_over_gamma, pt.tc});
    emit(c, os.str(), columns("tc-curve"));
    return 0;
}

int run_equilibrium(const RunConfig& c) {
    RunConfig cfg = c;
    if (c.gamma_over_omega0) cfg.params.gamma = *c.gamma_over_omega0 * c.params.omega0;
    if (cfg.sweep && cfg.sweep->variable != "T") throw ConfigError("--sweep: equilibrium sweeps T only");
    const auto rows = rows_for(cfg, 50, {"T"});
    if (!(cfg.params.omega0 > 0.0)) {
        throw ConfigError("--omega0: equilibrium needs omega0 > 0 (use free-particle for omega0 = 0)");
    }
    MatsubaraConfig mc;
    mc.drude_cutoff = c.oracle_cutoff;
    mc.validate();

    const SystemParams& base = rows.front();
    double tc = kNaN;
    std::string tc_note;
    try {
        tc = breakdown_temperature(base.omega0 / base.gamma, base) * base.hbar * base.gamma / base.kB;
        tc_note = fmt::format("Tc={}", csv::number(tc));
    } catch (const NumericalError& e) {
        tc_note = "Tc=nan (no single sign change of Delta)";
    } catch (const ConfigError& e) {
        tc_note = "Tc=nan (omega0/gamma outside [1e-4, 1e2])";
    }

    struct Row {
        MomentState eq;
        MatsubaraResult q2;
        MatsubaraResult p2;
    };
    const auto results = parallel_map(rows.size(), c.threads, [&](std::size_t i) {
        const SystemParams& p = rows[i];
        return Row{equilibrium_moments(p, diffusion_constants(p)), matsubara_q2(p, mc), matsubara_p2(p, mc)};
    });

    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "equilibrium", cfg,
             fmt::format("sweep: {}; gamma/omega0={}; {}; oracle: Drude-regularised Matsubara sums, omega_c={}; "
                         "gaps relative to the oracle",
                         sweep_text(cfg, 50), csv::number(base.gamma / base.omega0), tc_note,
                         csv::number(mc.cutoff_for(base))));
    w.header(columns("equilibrium"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SystemParams& p = rows[i];
        const Row& r = results[i];
        const double kinetic = r.eq.p2 / (2.0 * p.mass);
        const double potential = 0.5 * p.mass * p.omega0 * p.omega0 * r.eq.q2;
        w.row({p.temperature, r.eq.q2, r.eq.p2, r.eq.qp, kinetic, potential, r.q2.value, r.p2.value,
               gap_to(r.eq.q2, r.q2.value), gap_to(r.eq.p2, r.p2.value), r.p2.cutoff_sensitivity,
               std::isnan(tc) ? kNaN : (p.temperature > tc ? 1.0 : 0.0)});
    }
    emit(c, os.str(), columns("equilibrium"));
    return 0;
}

int run_moments(const RunConfig& c) {
    if (c.sweep) throw ConfigError("--sweep: moments does not sweep; use --points for the time grid");
    if (c.method != "both" && c.method != "analytic" && c.method != "numeric") {
        throw ConfigError(fmt::format("--method: expected analytic, numeric or both, got '{}'", c.method));
    }
    const SystemParams& p = c.params;
    p.validate();
    const std::size_t n = c.points ? c.points : 101;
    if (n < 2) throw ConfigError("--points: moments needs at least 2 samples");
    const double t_end = c.t_end.value_or(10.0 / p.gamma);
    if (!(t_end > 0.0)) throw ConfigError("--t-end: must be > 0");
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState s0{c.q2, c.p2, c.qp, 0.0};

    const double interval = t_end / double(n - 1);
    const double dt = c.dt.value_or(0.002 / std::max(p.gamma, p.omega0));
    const auto sub = static_cast<std::size_t>(std::ceil(interval / dt * (1.0 - 1e-12)));
    const double h = interval / double(sub);
    if (c.dt && !(h <= *c.dt)) throw ConfigError("--dt: must be > 0");

    std::vector<MomentState> numeric;
    if (c.method != "analytic") {
        if (c.dt && *c.dt > 0.01 / std::max(p.gamma, p.omega0)) {
            // Let the integrator produce its own diagnostic.
            evolve_numeric(s0, p, d, t_end, *c.dt);
        }
        numeric = evolve_numeric(s0, p, d, t_end, h, sub).samples;
        if (numeric.size() != n) throw NumericalError("moments: integrator produced an unexpected sample count");
    }

    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "moments", c,
             fmt::format("initial q2={} p2={} qp={}; t_end={}; rk4 step={}; method={}", csv::number(c.q2),
                         csv::number(c.p2), csv::number(c.qp), csv::number(t_end), csv::number(h), c.method));
    const auto& all = columns("moments");
    const std::vector<std::string> four(all.begin(), all.begin() + 4);
    w.header(c.method == "both" ? all : four);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = i + 1 == n ? t_end : interval * double(i);
        if (c.method == "numeric") {
            w.row({t, numeric[i].q2, numeric[i].p2, numeric[i].qp});
            continue;
        }
        const MomentState a = analytic_solution(s0, p, d, t);
        if (c.method == "analytic") w.row({t, a.q2, a.p2, a.qp});
        else w.row({t, a.q2, a.p2, a.qp, numeric[i].q2, numeric[i].p2, numeric[i].qp});
    }
    emit(c, os.str(), c.method == "both" ? all : four);
    return 0;
}

int run_free_particle(const RunConfig& c) {
    const auto rows = rows_for(c, 50, {"M", "gamma", "T", "hbar", "kB"});
    const MomentState s0{c.q2, c.p2, c.qp, 0.0};
    struct Row {
        double p2_long, p2_pred, slope_fit, slope_pred, a0;
    };
    const auto results = parallel_map(rows.size(), c.threads, [&](std::size_t i) {
        const SystemParams& p = rows[i];
        const double g = p.gamma;
        // Late-time window t in [50/gamma, 100/gamma], 51 samples.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int m = 51;
        for (int k = 0; k < m; ++k) {
            const double t = (50.0 + k) / g;
            const double q2 = free_particle_longtime(s0, p, t).q2;
            sx += t;
            sy += q2;
            sxx += t * t;
            sxy += t * q2;
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        return Row{free_particle_longtime(s0, p, 100.0 / g).p2, free_particle_p2(p), slope, free_particle_q2_slope(p),
                   alpha_prime_free(p)};
    });

    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "free-particle", c,
             fmt::format("sweep: {}; omega0 -> 0 by Richardson extrapolation from omega0 = 1e-6 gamma and 2e-6 gamma; "
                         "initial q2={} p2={} qp={}; p2 at t=100/gamma; slope fitted on t in [50/gamma, 100/gamma]",
                         sweep_text(c, 50), csv::number(c.q2), csv::number(c.p2), csv::number(c.qp)));
    w.header(columns("free-particle"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SystemParams& p = rows[i];
        const Row& r = results[i];
        w.row({p.mass, p.gamma, p.temperature, p.hbar, p.kB, r.p2_long, r.p2_pred, gap_to(r.p2_long, r.p2_pred),
               r.slope_fit, r.slope_pred, gap_to(r.slope_fit, r.slope_pred), r.a0});
    }
    emit(c, os.str(), columns("free-particle"));
    return 0;
}

int run_grid_validate(const RunConfig& c) {
    if (c.sweep) throw ConfigError("--sweep: grid-validate does not sweep");
    const SystemParams& p = c.params;
    p.validate();
    const DiffusionConstants d = diffusion_constants(p);
    const MomentState s0{c.q2, c.p2, c.qp, 0.0};
    const DensityGrid g = gaussian_state(s0, c.grid_n, c.grid_l, p.hbar);
    const double t_end = c.t_end.value_or(3.0 / p.gamma);
    const double dt = c.dt.value_or(max_stable_dt(g, p, d));
    if (c.sample_every == 0) throw ConfigError("--sample-every: must be >= 1");
    const GridRun run = evolve_grid(g, p, d, t_end, dt, c.sample_every);

    std::ostringstream os;
    csv::Writer w(os);
    preamble(w, "grid-validate", c,
             fmt::format("initial q2={} p2={} qp={}; N={} L={} t_end={} dt={}; moment_gap is max of relative q2, p2 "
                         "gaps and |qp gap|/sqrt(q2 p2)",
                         csv::number(c.q2), csv::number(c.p2), csv::number(c.qp), c.grid_n, csv::number(c.grid_l),
                         csv::number(t_end), csv::number(dt)));
    w.header(columns("grid-validate"));
    double worst = 0.0;
    for (const auto& s : run.samples) {
        const MomentState a = analytic_solution(s0, p, d, s.t);
        const double scale = std::sqrt(a.q2 * a.p2);
        const double gap = std::max({gap_to(s.grid.q2, a.q2), gap_to(s.grid.p2, a.p2), std::abs(s.grid.qp - a.qp) / scale});
        worst = std::max(worst, gap);
        w.row({s.t, s.grid.q2, s.grid.p2, s.grid.qp, a.q2, a.p2, a.qp, gap, s.trace, s.hermiticity});
    }
    emit(c, os.str(), columns("grid-validate"));
    if (!c.snapshot.empty()) {
        std::ofstream f(c.snapshot, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError(fmt::format("--snapshot: cannot open '{}' for writing", c.snapshot));
        write_snapshot_csv(f, run.final_state, p);
    }

    const bool ok = worst < 0.01 && run.max_trace_drift < 1e-6 && run.max_hermiticity < 1e-9;
    std::cerr << fmt::format("grid-validate: {} (max moment gap {:.3e}, trace drift {:.3e}, hermiticity {:.3e})\n",
                             ok ? "PASS" : "FAIL", worst, run.max_trace_drift, run.max_hermiticity);
    if (!ok) throw NumericalError("grid-validate: grid moments do not track the analytic solution within tolerance");
    return 0;
}

int run_selftest(const RunConfig&) { return selftest::run_all(std::cout) == 0 ? 0 : 2; }

}  // namespace qbrown::cli
