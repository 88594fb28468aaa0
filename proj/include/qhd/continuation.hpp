#pragma once

#include <string>
#include <vector>

#include "qhd/grid.hpp"
#include "qhd/nls.hpp"

// The delta -> 0 harness: one regularized run per ladder rung from shared
// initial data, Cauchy distances between consecutive rungs at matched interior
// times, and the energy-equality diagnostics of the limit functional.

namespace qhd {

double l2_distance(const ComplexField& a, const ComplexField& b);
double h1_distance(const ComplexField& a, const ComplexField& b, SpectralWorkspace& ws);

struct ContinuationReport {
    std::vector<double> ladder;                 // strictly decreasing, > 0
    std::vector<bool> failed;                   // rung aborted (excluded from pairs)
    std::vector<std::string> failure_reason;

    std::vector<double> comparison_times;       // shared interior times
    // Consecutive-pair distances (entry i compares rung i and i+1), reported
    // as L2-in-time proxies sqrt(T * mean_t dist(t)^2).
    std::vector<double> pair_l2;
    std::vector<double> pair_h1;
    std::vector<double> pair_sqrt_rho_l2;
    std::vector<double> pair_lambda_l2;
    std::vector<double> pair_grad_sqrt_rho_l2;

    // Per-rung traces on the full snapshot cadence.
    std::vector<std::vector<double>> snapshot_times;
    std::vector<std::vector<EnergyBreakdown>> energy_traces;   // E_delta bookkeeping
    std::vector<std::vector<double>> limit_internal_traces;    // int rho log rho
    std::vector<std::vector<double>> min_rho_traces;
    std::vector<std::vector<double>> max_rho_traces;
    std::vector<double> energy_drift;         // max_t |E_delta(t) - E_delta(0)|
    std::vector<double> internal_gap;         // max_t |int f_delta - int rho log rho|
    std::vector<double> mass_trace_spread;    // max_t |mass(t) - mass(0)| / mass(0)
    std::vector<double> kinetic_time_integral;  // int_0^T int |grad psi|^2
    std::vector<double> quadratic_residual_max; // max over snapshots
    std::vector<double> entropy_min;            // min over snapshots of min_x rho log rho

    double t_final = 0.0;
    double hbar = 1.0;
};

// One evolve per rung (parallel over rungs, capped by `workers`; 0 = machine
// parallelism or the QHD_WORKERS environment variable).
ContinuationReport delta_sweep(const ComplexField& psi0, const std::vector<double>& ladder,
                               const SolverConfig& config, double hbar, int workers = 0);

// max over snapshot times of |E(t) - E(0)| / (1 + |E(0)|) for the delta = 0
// energy functional evaluated along the smallest-delta trajectory.
double energy_equality_check(const ContinuationReport& report);

struct SlopeFit {
    double slope = 0.0;
    bool monotone = false;  // consecutive differences strictly decreasing
};
// Decay of consecutive differences of the kinetic time-integral against delta.
SlopeFit kinetic_convergence_check(const ContinuationReport& report);

int worker_count_from_env(int requested);

}  // namespace qhd
