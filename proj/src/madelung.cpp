#include "qhd/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qhd {

double default_eps_vac(const ScalarField& rho) {
    double mx = 0.0;
    for (double r : rho.values) mx = std::max(mx, r);
    return std::max(1e-12 * mx, 1e-300);
}

HydroState observables(const WaveState& state, SpectralWorkspace& ws, double eps_vac) {
    if (!(eps_vac > 0.0)) throw std::invalid_argument("observables: eps_vac must be > 0");
    const TorusGrid& grid = state.psi.grid;
    const double hb = state.params.hbar;

    HydroState h;
    h.time = state.time;
    h.rho = ScalarField(grid);
    h.sqrt_rho = ScalarField(grid);
    h.polar = ComplexField(grid);
    h.current = VectorField(grid);
    h.momentum = VectorField(grid);
    h.grad_sqrt_rho = VectorField(grid);

    const std::size_t npts = grid.point_count();
    for (std::size_t i = 0; i < npts; ++i) {
        const Complex z = state.psi.values[i];
        const double rho = std::norm(z);
        h.rho.values[i] = rho;
        h.sqrt_rho.values[i] = std::sqrt(rho);
        h.polar.values[i] = rho > eps_vac ? z / std::abs(z) : Complex(0.0, 0.0);
    }

    const std::vector<ComplexField> grad = ws.gradient(state.psi);
    for (int j = 0; j < grid.dim; ++j) {
        for (std::size_t i = 0; i < npts; ++i) {
            const Complex pg = std::conj(h.polar.values[i]) * grad[j].values[i];
            h.grad_sqrt_rho.comps[j][i] = pg.real();
            h.momentum.comps[j][i] = hb * pg.imag();
            h.current.comps[j][i] = h.sqrt_rho.values[i] * h.momentum.comps[j][i];
        }
    }
    return h;
}

HydroState observables(const WaveState& state, SpectralWorkspace& ws) {
    ScalarField rho(state.psi.grid);
    for (std::size_t i = 0; i < rho.values.size(); ++i)
        rho.values[i] = std::norm(state.psi.values[i]);
    return observables(state, ws, default_eps_vac(rho));
}

double quadratic_identity_residual(const WaveState& state, const HydroState& hydro,
                                   SpectralWorkspace& ws) {
    const TorusGrid& grid = state.psi.grid;
    const double h2 = state.params.hbar * state.params.hbar;
    const std::vector<ComplexField> grad = ws.gradient(state.psi);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.point_count(); ++i) {
        double g2 = 0.0, split = 0.0;
        for (int j = 0; j < grid.dim; ++j) {
            g2 += std::norm(grad[j].values[i]);
            const double gs = hydro.grad_sqrt_rho.comps[j][i];
            const double lm = hydro.momentum.comps[j][i];
            split += h2 * gs * gs + lm * lm;
        }
        const double res = std::abs(h2 * g2 - split) / (1.0 + h2 * g2);
        worst = std::max(worst, res);
    }
    return worst;
}

StressTensors stress_tensor(const WaveState& state, const HydroState& hydro,
                            SpectralWorkspace& ws) {
    const TorusGrid& grid = state.psi.grid;
    const int d = grid.dim;
    const double h2 = state.params.hbar * state.params.hbar;
    const std::vector<ComplexField> grad = ws.gradient(state.psi);

    StressTensors t;
    t.dim = d;
    t.wave.assign(d * d, ScalarField(grid));
    t.hydro.assign(d * d, ScalarField(grid));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            ScalarField& w = t.wave[a * d + b];
            ScalarField& h = t.hydro[a * d + b];
            for (std::size_t i = 0; i < grid.point_count(); ++i) {
                w.values[i] = h2 * (grad[a].values[i] * std::conj(grad[b].values[i])).real();
                h.values[i] = h2 * hydro.grad_sqrt_rho.comps[a][i] * hydro.grad_sqrt_rho.comps[b][i] +
                              hydro.momentum.comps[a][i] * hydro.momentum.comps[b][i];
            }
        }
    return t;
}

double stress_residual(const StressTensors& t) {
    double worst = 0.0;
    for (std::size_t e = 0; e < t.wave.size(); ++e)
        for (std::size_t i = 0; i < t.wave[e].values.size(); ++i)
            worst = std::max(worst, std::abs(t.wave[e].values[i] - t.hydro[e].values[i]));
    return worst;
}

double bohm_identity_residual(const ScalarField& sqrt_rho, SpectralWorkspace& ws,
                              double eps_bohm) {
    if (!(eps_bohm > 0.0)) throw std::invalid_argument("bohm_identity_residual: eps_bohm must be > 0");
    double lo = sqrt_rho.values.empty() ? 0.0 : sqrt_rho.values[0];
    for (double v : sqrt_rho.values) lo = std::min(lo, v);
    if (lo < eps_bohm)
        throw std::invalid_argument("bohm_identity_residual: sqrt_rho not bounded away from vacuum");

    const TorusGrid& grid = sqrt_rho.grid;
    const int d = grid.dim;
    const std::size_t npts = grid.point_count();

    ComplexField s(grid);
    for (std::size_t i = 0; i < npts; ++i) s.values[i] = sqrt_rho.values[i];

    // lhs_j = (1/2) rho d_j(Lap s / s)
    const ComplexField lap_s = ws.laplacian(s);
    ComplexField quot(grid);
    for (std::size_t i = 0; i < npts; ++i)
        quot.values[i] = lap_s.values[i] / sqrt_rho.values[i];
    const std::vector<ComplexField> grad_quot = ws.gradient(quot);

    // rhs_j = (1/4) d_j(Lap rho) - sum_a d_a(d_a s d_j s)
    ComplexField rho(grid);
    for (std::size_t i = 0; i < npts; ++i)
        rho.values[i] = sqrt_rho.values[i] * sqrt_rho.values[i];
    const std::vector<ComplexField> grad_lap_rho = ws.gradient(ws.laplacian(rho));
    const std::vector<ComplexField> grad_s = ws.gradient(s);

    double max_lhs = 0.0, max_rhs = 0.0, max_diff = 0.0;
    for (int j = 0; j < d; ++j) {
        ComplexField prod(grid);
        std::vector<double> div_term(npts, 0.0);
        for (int a = 0; a < d; ++a) {
            for (std::size_t i = 0; i < npts; ++i)
                prod.values[i] = grad_s[a].values[i].real() * grad_s[j].values[i].real();
            const ComplexField dprod = ws.derivative(prod, a);
            for (std::size_t i = 0; i < npts; ++i) div_term[i] += dprod.values[i].real();
        }
        for (std::size_t i = 0; i < npts; ++i) {
            const double lhs = 0.5 * rho.values[i].real() * grad_quot[j].values[i].real();
            const double rhs = 0.25 * grad_lap_rho[j].values[i].real() - div_term[i];
            max_lhs = std::max(max_lhs, std::abs(lhs));
            max_rhs = std::max(max_rhs, std::abs(rhs));
            max_diff = std::max(max_diff, std::abs(lhs - rhs));
        }
    }
    const double scale = std::max(max_lhs, max_rhs);
    return scale > 0.0 ? max_diff / scale : max_diff;
}

}  // namespace qhd
