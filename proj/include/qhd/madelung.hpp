#pragma once

#include <vector>

#include "qhd/grid.hpp"
#include "qhd/nls.hpp"

// Hydrodynamic observables via polar decomposition psi = sqrt(rho) phi.
// grad sqrt(rho) and Lambda are assembled from the same conj(phi) grad(psi)
// samples (real and imaginary parts), which makes the quadratic identity
// hbar^2 |grad psi|^2 = hbar^2 |grad sqrt(rho)|^2 + |Lambda|^2 exact off
// vacuum. sqrt(rho) is never differentiated spectrally (cusps at vacuum).

namespace qhd {

struct HydroState {
    ScalarField rho;
    ScalarField sqrt_rho;
    ComplexField polar;          // phi: psi/|psi| off vacuum, 0 on it
    VectorField current;         // J = sqrt(rho) Lambda
    VectorField momentum;        // Lambda = hbar Im(conj(phi) grad psi)
    VectorField grad_sqrt_rho;   // Re(conj(phi) grad psi)
    double time = 0.0;
};

// Vacuum threshold 1e-12 * max(rho), floored at 1e-300.
double default_eps_vac(const ScalarField& rho);

HydroState observables(const WaveState& state, SpectralWorkspace& ws, double eps_vac);
HydroState observables(const WaveState& state, SpectralWorkspace& ws);

// max over grid of |h2|grad psi|^2 - h2|grad s|^2 - |Lambda|^2| / (1 + h2|grad psi|^2).
double quadratic_identity_residual(const WaveState& state, const HydroState& hydro,
                                   SpectralWorkspace& ws);

// Both assemblies of the kinetic stress, entry (i,j) at index i*dim + j:
//   wave  = hbar^2 Re(d_i psi d_j conj psi)
//   hydro = hbar^2 d_i sqrt(rho) d_j sqrt(rho) + Lambda_i Lambda_j
struct StressTensors {
    int dim = 0;
    std::vector<ScalarField> wave;
    std::vector<ScalarField> hydro;
};
StressTensors stress_tensor(const WaveState& state, const HydroState& hydro,
                            SpectralWorkspace& ws);
double stress_residual(const StressTensors& t);  // max-norm gap between assemblies

// Relative max-norm discrepancy between the two sides of
//   (1/2) rho grad(Lap s / s) = (1/4) Lap grad(rho) - div(grad s x grad s),
// rho = s^2; the common hbar^2 factor cancels in the relative residual.
// Requires min(s) >= eps_bohm and s band-limited on the grid.
double bohm_identity_residual(const ScalarField& sqrt_rho, SpectralWorkspace& ws,
                              double eps_bohm = 1e-8);

}  // namespace qhd
