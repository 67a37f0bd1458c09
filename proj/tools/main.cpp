#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "qbrown/error.hpp"
#include "qbrown/log.hpp"

using namespace qbrown::cli;

namespace {

std::string column_footer(const std::string& command) {
    std::string text = "CSV columns:";
    for (const auto& c : columns(command)) text += " " + c;
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum Brownian motion: diffusion coefficients, moments and validation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "qbrown 1.0.0");

    RunConfig cfg;
    std::string t_text, omega_c_text, sweep_text;

    app.add_option("--M", cfg.params.mass, "particle mass")->capture_default_str();
    app.add_option("--omega0", cfg.params.omega0, "oscillator frequency")->capture_default_str();
    app.add_option("--gamma", cfg.params.gamma, "damping rate (q'' + 2 gamma q' + omega0^2 q = 0)")
        ->capture_default_str();
    app.add_option("--T", t_text, "temperature, or lo:hi[:log] as shorthand for --sweep T=lo:hi[:log]");
    app.add_option("--omega-c", omega_c_text, "Drude cutoff of the bath (number or inf)");
    app.add_option("--hbar", cfg.params.hbar, "Planck constant")->capture_default_str();
    app.add_option("--kB", cfg.params.kB, "Boltzmann constant")->capture_default_str();
    app.add_option("--points", cfg.points, "rows in the sweep or samples in time (0: command default)");
    app.add_option("--out", cfg.out, "CSV output file (default stdout)");
    app.add_option("--sweep", sweep_text, "var=lo:hi[:log|:lin], var one of M omega0 gamma T omega-c hbar kB");
    app.add_option("--plot", cfg.plot, "write a gnuplot script reading --out");

    auto sub = [&](const std::string& name, const std::string& desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->fallthrough();
        if (!columns(name).empty()) s->footer(column_footer(name));
        return s;
    };

    CLI::App* coeffs = sub("coeffs", "bath coefficients alpha and alpha'");
    CLI::App* diffusion = sub("diffusion", "diffusion constants and the positivity functional Delta");

    CLI::App* tc = sub("tc-curve", "breakdown temperature kB Tc / hbar gamma against omega0/gamma");
    tc->add_option("--omega0-over-gamma", cfg.omega0_over_gamma, "log-spaced range lo:hi")->capture_default_str();

    CLI::App* eq = sub("equilibrium", "stationary moments against the Matsubara oracle");
    eq->add_option("--gamma-over-omega0", cfg.gamma_over_omega0, "sets gamma = ratio * omega0");
    eq->add_option("--oracle-cutoff", cfg.oracle_cutoff, "Drude cutoff used by the oracle (default 1000 max(gamma, omega0))");

    CLI::App* moments = sub("moments", "second moments in time, analytic and RK4");
    CLI::App* free = sub("free-particle", "omega0 -> 0 long-time limit against closed forms");
    CLI::App* grid = sub("grid-validate", "density-matrix grid evolution against the analytic moments");
    for (CLI::App* s : {moments, free, grid}) {
        s->add_option("--q2", cfg.q2, "initial <q^2>")->capture_default_str();
        s->add_option("--p2", cfg.p2, "initial <p^2>")->capture_default_str();
        s->add_option("--qp", cfg.qp, "initial <qp + pq>")->capture_default_str();
    }
    for (CLI::App* s : {moments, grid}) {
        s->add_option("--t-end", cfg.t_end, "final time (moments: 10/gamma, grid-validate: 3/gamma)");
        s->add_option("--dt", cfg.dt, "time step (default: moments 0.002/max(gamma, omega0), grid the stability bound)");
    }
    moments->add_option("--method", cfg.method, "analytic, numeric or both")->capture_default_str();
    moments->footer(column_footer("moments") + "\n(with --method analytic or numeric: t q2 p2 qp)");
    grid->add_option("--N", cfg.grid_n, "grid points per axis")->capture_default_str();
    grid->add_option("--L", cfg.grid_l, "half-width of the grid")->capture_default_str();
    grid->add_option("--sample-every", cfg.sample_every, "steps between samples")->capture_default_str();
    grid->add_option("--snapshot", cfg.snapshot, "write the final density matrix to this CSV");

    CLI::App* selftest = sub("selftest", "run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    // Sweeps across Tc can trip the sign monitor at many points; show a few.
    std::size_t warnings = 0;
    qbrown::log::ScopedSink sink([&](std::string_view m) {
        if (++warnings <= 5) std::cerr << "qbrown: warning: " << m << "\n";
    });
    struct Summary {
        std::size_t& n;
        ~Summary() {
            if (n > 5) std::cerr << "qbrown: " << n << " warnings in total\n";
        }
    } summary{warnings};

    try {
        cfg.threads = thread_budget();
        if (!omega_c_text.empty()) cfg.params.cutoff = parse_number("--omega-c", omega_c_text);
        if (!sweep_text.empty()) cfg.sweep = parse_sweep(sweep_text);
        if (!t_text.empty()) {
            if (t_text.find(':') != std::string::npos) {
                if (cfg.sweep) throw qbrown::ConfigError("--T: a range cannot be combined with --sweep");
                cfg.sweep = parse_range("--T", t_text, "T");
            } else {
                cfg.params.temperature = parse_number("--T", t_text);
            }
        }

        if (*coeffs) return run_coeffs(cfg);
        if (*diffusion) return run_diffusion(cfg);
        if (*tc) return run_tc_curve(cfg);
        if (*eq) return run_equilibrium(cfg);
        if (*moments) return run_moments(cfg);
        if (*free) return run_free_particle(cfg);
        if (*grid) return run_grid_validate(cfg);
        if (*selftest) return run_selftest(cfg);
    } catch (const qbrown::ConfigError& e) {
        std::cerr << "qbrown: error: " << e.what() << "\n";
        return 1;
    } catch (const qbrown::NumericalError& e) {
        std::cerr << "qbrown: numerical error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
