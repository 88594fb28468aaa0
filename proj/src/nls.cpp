#include "qhd/nls.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qhd/madelung.hpp"

namespace qhd {

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (!(t_final > 0.0) || !std::isfinite(t_final))
        throw std::invalid_argument("SolverConfig: t_final must be > 0");
    if (dt > t_final * (1.0 + 1e-12)) throw std::invalid_argument("SolverConfig: dt must be <= t_final");
    if (snapshot_stride < 1) throw std::invalid_argument("SolverConfig: snapshot_stride must be >= 1");
    const double steps = t_final / dt;
    if (steps > 1e9) throw std::invalid_argument("SolverConfig: too many steps");
    if (std::abs(steps - std::llround(steps)) > 1e-9 * steps)
        throw std::invalid_argument("SolverConfig: t_final must be an integer multiple of dt");
}

long SolverConfig::num_steps() const {
    validate();
    return std::llround(t_final / dt);
}

BlowUpError::BlowUpError(long step_, std::vector<std::pair<long, double>> history_)
    : std::runtime_error("solution blew up at step " + std::to_string(step_)),
      step(step_),
      max_norm_history(std::move(history_)) {}

SplitStepSolver::SplitStepSolver(const TorusGrid& grid, ThermoParams params)
    : grid_(grid), params_(params), ws_(grid) {
    params_.validate();
}

WaveState SplitStepSolver::kinetic_halfstep(const WaveState& state, double dt) {
    ws_.forward(state.psi, coeff_);
    const std::vector<double>& k2 = ws_.k_squared();
    const double c = -params_.hbar * dt / 4.0;
    for (std::size_t i = 0; i < coeff_.size(); ++i)
        coeff_[i] *= std::polar(1.0, c * k2[i]);
    WaveState out;
    ws_.backward(coeff_, out.psi);
    out.time = state.time;  // strang_step owns the time bookkeeping
    out.params = state.params;
    return out;
}

WaveState SplitStepSolver::nonlinear_step(const WaveState& state, double dt) {
    if (!(state.params.delta > 0.0))
        throw std::invalid_argument("nonlinear_step: requires delta > 0");
    WaveState out = state;
    const double delta = state.params.delta;
    const double hb = params_.hbar;
    for (Complex& z : out.psi.values)
        z *= std::polar(1.0, -dt * (std::log(std::norm(z) + delta) + 1.0) / hb);
    return out;
}

void SplitStepSolver::apply_dealias(ComplexField& psi) {
    if (dealias_mask_.empty()) {
        dealias_mask_.assign(grid_.dim, std::vector<double>(grid_.n, 0.0));
        for (int j = 0; j < grid_.dim; ++j)
            for (int i = 0; i < grid_.n; ++i)
                dealias_mask_[j][i] = 3 * std::abs(grid_.mode_of(i)) <= grid_.n ? 1.0 : 0.0;
    }
    psi = ws_.apply_axis_multipliers(psi, dealias_mask_);
}

WaveState SplitStepSolver::strang_step(const WaveState& state, double dt) {
    WaveState s = kinetic_halfstep(state, dt);
    s = nonlinear_step(s, dt);
    s = kinetic_halfstep(s, dt);
    s.time = state.time + dt;
    return s;
}

WaveState SplitStepSolver::evolve(WaveState state, const SolverConfig& config,
                                  const SnapshotSink& sink) {
    config.validate();
    if (!(state.params.delta > 0.0)) throw std::invalid_argument("evolve: requires delta > 0");
    const long n = config.num_steps();
    std::vector<std::pair<long, double>> history;
    auto max_abs = [](const ComplexField& u) {
        double m = 0.0;
        for (const Complex& z : u.values) m = std::max(m, std::abs(z));
        return m;
    };
    auto guard = [&](long step, const ComplexField& u) {
        const double m = max_abs(u);
        history.emplace_back(step, m);
        if (!(m <= kBlowUpLimit)) throw BlowUpError(step, history);
    };
    guard(0, state.psi);
    if (sink) sink(state, energy(state));
    for (long step = 1; step <= n; ++step) {
        state = strang_step(state, config.dt);
        if (config.dealias) apply_dealias(state.psi);
        guard(step, state.psi);
        if (sink && (step % config.snapshot_stride == 0 || step == n))
            sink(state, energy(state));
    }
    return state;
}

EnergyBreakdown SplitStepSolver::energy(const WaveState& state) {
    return energy(state, state.params.delta);
}

EnergyBreakdown SplitStepSolver::energy(const WaveState& state, double delta_eval) {
    if (delta_eval < 0.0) throw std::invalid_argument("energy: delta must be >= 0");
    EnergyBreakdown e;
    const double hb = params_.hbar;
    const double vol = grid_.cell_volume();

    double kin = 0.0;
    const std::vector<ComplexField> g = ws_.gradient(state.psi);
    for (const ComplexField& gj : g)
        for (const Complex& z : gj.values) kin += std::norm(z);
    e.kinetic = 0.5 * hb * hb * kin * vol;

    double mass = 0.0, internal = 0.0;
    for (const Complex& z : state.psi.values) {
        const double rho = std::norm(z);
        mass += rho;
        internal += f_delta(rho, delta_eval);
    }
    e.mass = mass * vol;
    e.internal = internal * vol;
    e.total = e.kinetic + e.internal;

    const HydroState hydro = observables(state, ws_);
    double hg = 0.0, hl = 0.0;
    for (int j = 0; j < grid_.dim; ++j)
        for (std::size_t i = 0; i < hydro.rho.values.size(); ++i) {
            hg += hydro.grad_sqrt_rho.comps[j][i] * hydro.grad_sqrt_rho.comps[j][i];
            hl += hydro.momentum.comps[j][i] * hydro.momentum.comps[j][i];
        }
    e.hydro_grad = 0.5 * hb * hb * hg * vol;
    e.hydro_lambda = 0.5 * hl * vol;
    return e;
}

double time_reversal_check(const ComplexField& psi0, ThermoParams params,
                           const SolverConfig& config) {
    SplitStepSolver solver(psi0.grid, params);
    WaveState s{psi0, 0.0, params};
    s = solver.evolve(std::move(s), config);
    for (Complex& z : s.psi.values) z = std::conj(z);
    s.time = 0.0;
    s = solver.evolve(std::move(s), config);
    for (Complex& z : s.psi.values) z = std::conj(z);
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < psi0.values.size(); ++i) {
        diff2 += std::norm(s.psi.values[i] - psi0.values[i]);
        ref2 += std::norm(psi0.values[i]);
    }
    return std::sqrt(diff2 / ref2);
}

}  // namespace qhd
