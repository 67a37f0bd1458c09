#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qbrown/core.hpp"

namespace qbrown::cli {

struct Sweep {
    std::string variable;  // one of M, omega0, gamma, T, omega-c, hbar, kB
    double lo{0.0};
    double hi{0.0};
    bool log{false};
};

struct RunConfig {
    SystemParams params;
    std::optional<Sweep> sweep;
    std::size_t points{0};  // 0 means the command's default
    std::string out;        // empty means stdout
    std::string plot;       // optional gnuplot sidecar
    unsigned threads{1};

    // tc-curve
    std::string omega0_over_gamma{"1e-3:1e2"};
    // equilibrium
    std::optional<double> gamma_over_omega0;
    std::optional<double> oracle_cutoff;
    // moments, free-particle, grid-validate
    double q2{0.5};
    double p2{0.5};
    double qp{0.0};
    std::optional<double> t_end;
    std::optional<double> dt;
    std::string method{"both"};
    // grid-validate
    std::size_t grid_n{256};
    double grid_l{8.0};
    std::size_t sample_every{32};
    std::string snapshot;
};

// Column names per command; the same lists feed the CSV headers and --help.
const std::vector<std::string>& columns(const std::string& command);

int run_coeffs(const RunConfig& c);
int run_diffusion(const RunConfig& c);
int run_tc_curve(const RunConfig& c);
int run_equilibrium(const RunConfig& c);
int run_moments(const RunConfig& c);
int run_free_particle(const RunConfig& c);
int run_grid_validate(const RunConfig& c);
int run_selftest(const RunConfig& c);

// A finite number or "inf". Throws ConfigError naming `flag`.
double parse_number(const std::string& flag, const std::string& text);
// "lo:hi" or "lo:hi:log" / "lo:hi:lin". Throws ConfigError naming `flag`.
Sweep parse_range(const std::string& flag, const std::string& text, const std::string& variable);
// "var=lo:hi[:log]".
Sweep parse_sweep(const std::string& text);

// Threads to use: hardware concurrency, capped by QBROWN_THREADS if set.
unsigned thread_budget();

}  // namespace qbrown::cli
