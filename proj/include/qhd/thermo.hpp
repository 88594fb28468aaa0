#pragma once

#include <complex>

#include "qhd/grid.hpp"

// Pointwise thermodynamics of the isothermal pressure law P(rho) = rho and its
// delta-regularization, plus the scalar inequalities the verifier relies on.
// Convention 0*log 0 = 0 wherever a density vanishes.

namespace qhd {

struct ThermoParams {
    double delta = 0.0;  // regularization offset, >= 0
    double hbar = 1.0;   // scaled Planck constant, > 0

    void validate() const;
};

// f_delta(rho) = (rho+delta) log(rho+delta); internal energy density.
double f_delta(double rho, double delta);
// f_delta'(rho) = log(rho+delta) + 1.
double f_delta_prime(double rho, double delta);
// P_delta(rho) = rho f_delta'(rho) - f_delta(rho) = rho - delta log(rho+delta).
double p_delta(double rho, double delta);

// rho log rho, with the global minimum -1/e at rho = 1/e.
double entropy_density(double rho);
// True iff min over the grid of rho log rho >= -1/e - 1e-12.
bool entropy_min_check(const ScalarField& rho);

inline constexpr double kEntropyFloor = -0.36787944117144233;  // -1/e

// F_delta(z) = (log(|z|^2+delta)+1) z; the regularized nonlinearity.
Complex F_delta(Complex z, double delta);

// Im[(z2 ln|z2|^2 - z1 ln|z1|^2)(conj z2 - conj z1)] / |z2 - z1|^2.
// Bounded above by 1 for all distinct z1, z2 (see kHarauxConstant).
double haraux_ratio(Complex z1, Complex z2);

// |F_delta(z1) - F_delta(z2)| / ((1 + |log delta|) |z1 - z2|).
double lipschitz_ratio(Complex z1, Complex z2, double delta);

// Constants frozen from the pre-build sampling oracles (tests re-derive them):
//  - Haraux ratio: sup over 1e6 pairs in |z| <= 10 measured 0.999938...,
//    approaching 1 on near-degenerate pairs; 1.0 is the sharp bound.
//  - Lipschitz ratio: sup 2.3020 at delta = 1e-1 over |z| <= 10, decreasing
//    for smaller delta.
//  - Growth |F_delta(z)| <= C (|z| + |z|^3): C -> |log delta + 1| as z -> 0;
//    12.8156 covers delta >= 1e-6.
inline constexpr double kHarauxConstant = 1.0;
inline constexpr double kLipschitzConstant = 2.35;
inline constexpr double kGrowthConstant = 12.82;

}  // namespace qhd
