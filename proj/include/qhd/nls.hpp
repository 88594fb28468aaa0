#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qhd/grid.hpp"
#include "qhd/thermo.hpp"

// Strang split-step integrator for the regularized logarithmic Schrodinger
// equation  i hbar d_t psi + (hbar^2/2) Lap psi = (log(|psi|^2+delta)+1) psi
// on the torus. Both substeps are exact flows: the kinetic half step is a
// Fourier multiplier, the nonlinear step a pointwise phase rotation (the
// modulus is invariant, so no sub-iteration is needed).

namespace qhd {

struct WaveState {
    ComplexField psi;
    double time = 0.0;
    ThermoParams params;
};

struct SolverConfig {
    double dt = 0.0;
    double t_final = 0.0;
    int snapshot_stride = 1;
    bool dealias = false;

    void validate() const;
    // Number of steps; t_final must be an integer multiple of dt (1e-9 rel).
    long num_steps() const;
};

struct EnergyBreakdown {
    double kinetic = 0.0;       // hbar^2/2 int |grad psi|^2
    double internal = 0.0;      // int f_delta(|psi|^2)
    double total = 0.0;         // kinetic + internal
    double mass = 0.0;          // int |psi|^2
    double hydro_grad = 0.0;    // hbar^2/2 int |grad sqrt(rho)|^2
    double hydro_lambda = 0.0;  // 1/2 int |Lambda|^2
};

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(long step_, std::vector<std::pair<long, double>> history_);
    long step;
    std::vector<std::pair<long, double>> max_norm_history;
};

class SplitStepSolver {
public:
    SplitStepSolver(const TorusGrid& grid, ThermoParams params);

    const ThermoParams& params() const { return params_; }
    SpectralWorkspace& workspace() { return ws_; }

    // psi-hat *= exp(-i hbar |k|^2 dt/4): half of the free flow over dt.
    WaveState kinetic_halfstep(const WaveState& state, double dt);
    // psi *= exp(-i dt (log(|psi|^2+delta)+1)/hbar); requires delta > 0.
    WaveState nonlinear_step(const WaveState& state, double dt);
    // kinetic_half . nonlinear . kinetic_half; advances time by dt.
    WaveState strang_step(const WaveState& state, double dt);

    using SnapshotSink = std::function<void(const WaveState&, const EnergyBreakdown&)>;
    // Steps until t_final, emitting a snapshot at step 0, every
    // snapshot_stride steps and at the final step. Aborts with BlowUpError if
    // max|psi| exceeds 1e6 or a non-finite value appears.
    WaveState evolve(WaveState state, const SolverConfig& config,
                     const SnapshotSink& sink = SnapshotSink());

    // Energy split at the state's own delta; hydro terms via polar decomposition.
    EnergyBreakdown energy(const WaveState& state);
    // Same with an explicit delta (0 evaluates the limit functional).
    EnergyBreakdown energy(const WaveState& state, double delta_eval);

private:
    TorusGrid grid_;
    ThermoParams params_;
    SpectralWorkspace ws_;
    std::vector<Complex> coeff_;
    std::vector<std::vector<double>> dealias_mask_;

    void apply_dealias(ComplexField& psi);
};

// Evolves psi0 to t_final, conjugates, evolves to t_final again, conjugates;
// returns the relative L2 distance to psi0. The continuum map is an exact
// involution; so is the discrete one up to rounding, because the Strang step
// with exact substeps satisfies conj . S_dt . conj = S_dt^{-1}.
double time_reversal_check(const ComplexField& psi0, ThermoParams params,
                           const SolverConfig& config);

inline constexpr double kBlowUpLimit = 1e6;

}  // namespace qhd
