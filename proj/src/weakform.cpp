#include "qhd/weakform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qhd/thermo.hpp"

namespace qhd {

namespace {

double bump(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double bump_prime(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

void check_uniform(const std::vector<double>& times) {
    if (times.size() < 3) throw std::invalid_argument("time grid: need at least 3 snapshots");
    const double h = times[1] - times[0];
    if (!(h > 0.0)) throw std::invalid_argument("time grid: not increasing");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - times[i - 1] - h) > 1e-9 * h)
            throw std::invalid_argument("time grid: snapshots not uniformly spaced");
}

}  // namespace

double smoothstep(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double u = bump(s), v = bump(1.0 - s);
    return u / (u + v);
}

double smoothstep_derivative(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double u = bump(s), v = bump(1.0 - s);
    const double up = bump_prime(s), vp = -bump_prime(1.0 - s);
    const double denom = (u + v) * (u + v);
    return (up * v - u * vp) / denom;
}

TimeEnvelope TimeEnvelope::one_sided(double a, double b) {
    if (!(0.0 < a && a < b)) throw std::invalid_argument("TimeEnvelope: need 0 < a < b");
    TimeEnvelope e;
    e.rise_begin = e.rise_end = 0.0;
    e.fall_begin = a;
    e.fall_end = b;
    return e;
}

TimeEnvelope TimeEnvelope::two_sided(double r0, double r1, double a, double b) {
    if (!(r0 < r1 && r1 <= a && a < b))
        throw std::invalid_argument("TimeEnvelope: need r0 < r1 <= a < b");
    TimeEnvelope e;
    e.rise_begin = r0;
    e.rise_end = r1;
    e.fall_begin = a;
    e.fall_end = b;
    return e;
}

double TimeEnvelope::value(double t) const {
    double r = 1.0;
    if (rise_end > rise_begin) r = smoothstep((t - rise_begin) / (rise_end - rise_begin));
    double f = 1.0;
    if (t >= fall_end)
        f = 0.0;
    else if (t > fall_begin)
        f = smoothstep((fall_end - t) / (fall_end - fall_begin));
    return r * f;
}

double TimeEnvelope::derivative(double t) const {
    double r = 1.0, rp = 0.0;
    if (rise_end > rise_begin) {
        const double w = rise_end - rise_begin;
        r = smoothstep((t - rise_begin) / w);
        rp = smoothstep_derivative((t - rise_begin) / w) / w;
    }
    double f = 1.0, fp = 0.0;
    if (t >= fall_end) {
        f = 0.0;
    } else if (t > fall_begin) {
        const double w = fall_end - fall_begin;
        f = smoothstep((fall_end - t) / w);
        fp = -smoothstep_derivative((fall_end - t) / w) / w;
    }
    return rp * f + r * fp;
}

void TestFunctionSpec::validate(const TorusGrid& grid) const {
    if (components.empty()) throw std::invalid_argument("TestFunctionSpec: no components");
    const std::size_t expected = vector ? static_cast<std::size_t>(grid.dim) : 1u;
    if (components.size() != expected)
        throw std::invalid_argument("TestFunctionSpec: component count does not match kind");
    for (const auto& comp : components)
        for (const SpatialMode& mode : comp)
            for (int j = 0; j < 3; ++j)
                if (3 * std::abs(mode.m[j]) >= grid.n)
                    throw std::invalid_argument("TestFunctionSpec: mode beyond n/3 band");
    if (!(envelope.fall_begin < envelope.fall_end))
        throw std::invalid_argument("TestFunctionSpec: bad envelope");
}

namespace {

// w(x) = sum Re(a * factor(m) * e^{i 2pi m.x}) sampled on the grid.
template <typename FactorFn>
ScalarField sample_modes(const TorusGrid& grid, const std::vector<SpatialMode>& modes,
                         FactorFn factor) {
    ScalarField out(grid);
    const double h = grid.spacing();
    for (const SpatialMode& mode : modes) {
        const Complex a = mode.amplitude * factor(mode.m);
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const auto mi = grid.decompose(i);
            double phase = 0.0;
            for (int j = 0; j < grid.dim; ++j) phase += mode.m[j] * (mi[j] * h);
            out.values[i] += (a * std::polar(1.0, 2.0 * M_PI * phase)).real();
        }
    }
    return out;
}

double mode_k2(const std::array<int, 3>& m) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += static_cast<double>(m[j]) * m[j];
    return 4.0 * M_PI * M_PI * s;
}

}  // namespace

ScalarField TestFunctionSpec::sample(const TorusGrid& grid, int comp) const {
    return sample_modes(grid, components.at(comp), [](const std::array<int, 3>&) {
        return Complex(1.0, 0.0);
    });
}

ScalarField TestFunctionSpec::sample_derivative(const TorusGrid& grid, int comp, int axis) const {
    return sample_modes(grid, components.at(comp), [axis](const std::array<int, 3>& m) {
        return Complex(0.0, 2.0 * M_PI * m[axis]);
    });
}

ScalarField TestFunctionSpec::sample_divergence(const TorusGrid& grid) const {
    ScalarField out(grid);
    for (std::size_t c = 0; c < components.size(); ++c) {
        const ScalarField d = sample_derivative(grid, static_cast<int>(c), static_cast<int>(c));
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += d.values[i];
    }
    return out;
}

ScalarField TestFunctionSpec::sample_laplacian_divergence(const TorusGrid& grid) const {
    ScalarField out(grid);
    for (std::size_t c = 0; c < components.size(); ++c) {
        const int axis = static_cast<int>(c);
        const ScalarField d =
            sample_modes(grid, components[c], [axis](const std::array<int, 3>& m) {
                return Complex(0.0, 2.0 * M_PI * m[axis]) * (-mode_k2(m));
            });
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += d.values[i];
    }
    return out;
}

std::vector<double> time_quadrature_weights(const std::vector<double>& times) {
    check_uniform(times);
    const std::size_t n = times.size() - 1;  // intervals
    const double h = times[1] - times[0];
    std::vector<double> w(times.size(), 0.0);
    auto add_simpson = [&](std::size_t first, std::size_t count) {
        // count even intervals starting at index `first`
        w[first] += h / 3.0;
        w[first + count] += h / 3.0;
        for (std::size_t i = 1; i < count; ++i)
            w[first + i] += (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
    };
    auto add_simpson38 = [&](std::size_t first) {
        w[first] += 3.0 * h / 8.0;
        w[first + 1] += 9.0 * h / 8.0;
        w[first + 2] += 9.0 * h / 8.0;
        w[first + 3] += 3.0 * h / 8.0;
    };
    if (n % 2 == 0) {
        add_simpson(0, n);
    } else if (n == 3) {
        add_simpson38(0);
    } else {
        add_simpson(0, n - 3);
        add_simpson38(n - 3);
    }
    return w;
}

namespace {

double dot_integral(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s * a.grid.cell_volume();
}

double floor_norm(double x) { return std::max(x, 1e-300); }

}  // namespace

double continuity_residual(const std::vector<HydroState>& snaps,
                           const TestFunctionSpec& zeta, ResidualEntry* entry) {
    if (snaps.size() < 5) throw std::invalid_argument("continuity_residual: need >= 5 snapshots");
    if (zeta.vector_valued()) throw std::invalid_argument("continuity_residual: zeta must be scalar");
    const TorusGrid& grid = snaps.front().rho.grid;
    zeta.validate(grid);
    std::vector<double> times(snaps.size());
    for (std::size_t k = 0; k < snaps.size(); ++k) times[k] = snaps[k].time;
    if (zeta.envelope.fall_end >= times.back() - 1e-12)
        throw std::invalid_argument("continuity_residual: zeta support touches the final time");
    const std::vector<double> wq = time_quadrature_weights(times);

    const ScalarField w = zeta.sample(grid);
    std::vector<ScalarField> gw;
    for (int j = 0; j < grid.dim; ++j) gw.push_back(zeta.sample_derivative(grid, 0, j));

    // normalization: L1 magnitude of each term's space-time integrand, so an
    // identically cancelling identity still reports a near-zero residual
    double i1 = 0.0, i2 = 0.0, n1 = 0.0, n2 = 0.0;
    const double vol = grid.cell_volume();
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const double tau = zeta.envelope.value(times[k]);
        const double taup = zeta.envelope.derivative(times[k]);
        const double a = dot_integral(snaps[k].rho, w);
        double a_abs = 0.0;
        for (std::size_t i = 0; i < w.values.size(); ++i)
            a_abs += std::abs(snaps[k].rho.values[i] * w.values[i]);
        a_abs *= vol;
        double b = 0.0, b_abs = 0.0;
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < grid.dim; ++j)
                dot += snaps[k].current.comps[j][i] * gw[j].values[i];
            b += dot;
            b_abs += std::abs(dot);
        }
        b *= vol;
        b_abs *= vol;
        i1 += wq[k] * a * taup;
        i2 += wq[k] * b * tau;
        n1 += wq[k] * a_abs * std::abs(taup);
        n2 += wq[k] * b_abs * std::abs(tau);
    }
    double i3_abs = 0.0;
    for (std::size_t i = 0; i < w.values.size(); ++i)
        i3_abs += std::abs(snaps.front().rho.values[i] * w.values[i]);
    i3_abs *= vol * zeta.envelope.value(times.front());
    const double i3 = zeta.envelope.value(times.front()) * dot_integral(snaps.front().rho, w);
    const double norm = floor_norm(std::max({n1, n2, i3_abs}));
    const double res = std::abs(i1 + i2 + i3) / norm;
    if (entry) {
        entry->test_fn_id = zeta.id;
        entry->kind = "continuity";
        entry->residual = res;
        entry->normalization = norm;
        entry->n_snapshots = static_cast<int>(snaps.size());
        entry->dt = times[1] - times[0];
        entry->n = grid.n;
        entry->terms = {i1, i2, i3};
    }
    return res;
}

double momentum_residual(const std::vector<HydroState>& snaps,
                         const TestFunctionSpec& phi, PressureMode mode, double delta,
                         double hbar, ResidualEntry* entry) {
    if (snaps.size() < 5) throw std::invalid_argument("momentum_residual: need >= 5 snapshots");
    const TorusGrid& grid = snaps.front().rho.grid;
    if (static_cast<int>(phi.components.size()) != grid.dim)
        throw std::invalid_argument("momentum_residual: phi must have dim components");
    phi.validate(grid);
    std::vector<double> times(snaps.size());
    for (std::size_t k = 0; k < snaps.size(); ++k) times[k] = snaps[k].time;
    if (phi.envelope.fall_end >= times.back() - 1e-12)
        throw std::invalid_argument("momentum_residual: phi support touches the final time");
    const std::vector<double> wq = time_quadrature_weights(times);

    const int d = grid.dim;
    std::vector<ScalarField> W, dW;  // dW[a*d+b] = d_b W_a
    for (int a = 0; a < d; ++a) W.push_back(phi.sample(grid, a));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) dW.push_back(phi.sample_derivative(grid, a, b));
    const ScalarField divW = phi.sample_divergence(grid);
    const ScalarField lapdivW = phi.sample_laplacian_divergence(grid);

    const double vol = grid.cell_volume();
    const double h2 = hbar * hbar;
    double I[5] = {0, 0, 0, 0, 0}, N[5] = {0, 0, 0, 0, 0};
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        const HydroState& s = snaps[k];
        const double tau = phi.envelope.value(times[k]);
        const double taup = phi.envelope.derivative(times[k]);
        double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0, t5 = 0.0;
        double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0;
        for (std::size_t i = 0; i < W[0].values.size(); ++i) {
            double jw = 0.0, lam = 0.0, gss = 0.0;
            for (int a = 0; a < d; ++a) {
                jw += s.current.comps[a][i] * W[a].values[i];
                for (int b = 0; b < d; ++b) {
                    lam += s.momentum.comps[a][i] * s.momentum.comps[b][i] * dW[a * d + b].values[i];
                    gss += s.grad_sqrt_rho.comps[a][i] * s.grad_sqrt_rho.comps[b][i] *
                           dW[a * d + b].values[i];
                }
            }
            const double p =
                mode == PressureMode::Delta ? p_delta(s.rho.values[i], delta) : s.rho.values[i];
            t1 += jw;
            t2 += lam;
            t3 += p * divW.values[i];
            t4 += gss;
            t5 += s.rho.values[i] * lapdivW.values[i];
            a1 += std::abs(jw);
            a2 += std::abs(lam);
            a3 += std::abs(p * divW.values[i]);
            a4 += std::abs(gss);
            a5 += std::abs(s.rho.values[i] * lapdivW.values[i]);
        }
        t1 *= vol;
        t2 *= vol;
        t3 *= vol;
        t4 *= vol * h2;
        t5 *= -0.25 * h2 * vol;
        const double parts[5] = {t1 * taup, t2 * tau, t3 * tau, t4 * tau, t5 * tau};
        const double mags[5] = {a1 * vol * std::abs(taup), a2 * vol * std::abs(tau),
                                a3 * vol * std::abs(tau), a4 * vol * h2 * std::abs(tau),
                                0.25 * h2 * a5 * vol * std::abs(tau)};
        for (int q = 0; q < 5; ++q) {
            I[q] += wq[k] * parts[q];
            N[q] += wq[k] * mags[q];
        }
    }
    double j0 = 0.0, j0_abs = 0.0;
    for (std::size_t i = 0; i < W[0].values.size(); ++i) {
        double dot = 0.0;
        for (int a = 0; a < d; ++a) dot += snaps.front().current.comps[a][i] * W[a].values[i];
        j0 += dot;
        j0_abs += std::abs(dot);
    }
    const double i6 = phi.envelope.value(times.front()) * j0 * vol;
    const double i6_abs = phi.envelope.value(times.front()) * j0_abs * vol;

    double norm = i6_abs;
    for (int q = 0; q < 5; ++q) norm = std::max(norm, N[q]);
    norm = floor_norm(norm);
    const double res = std::abs(I[0] + I[1] + I[2] + I[3] + I[4] + i6) / norm;
    if (entry) {
        entry->test_fn_id = phi.id;
        entry->kind = "momentum";
        entry->residual = res;
        entry->normalization = norm;
        entry->n_snapshots = static_cast<int>(snaps.size());
        entry->dt = times[1] - times[0];
        entry->n = grid.n;
        entry->delta = delta;
        entry->terms = {I[0], I[1], I[2], I[3], I[4], i6};
    }
    return res;
}

MollifierSpec MollifierSpec::for_epsilon(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("MollifierSpec: epsilon must be > 0");
    MollifierSpec spec;
    spec.epsilon = eps;
    spec.half_band = std::max(1, static_cast<int>(std::ceil(1.0 / eps)) - 1);
    return spec;
}

void MollifierSpec::validate(const TorusGrid& grid, double snapshot_spacing) const {
    if (epsilon < 4.0 * grid.spacing() - 1e-12)
        throw std::invalid_argument("MollifierSpec: epsilon below 4h, not resolvable in space");
    if (epsilon < 4.0 * snapshot_spacing - 1e-12)
        throw std::invalid_argument("MollifierSpec: epsilon below 4 snapshot spacings");
    if (2 * half_band > grid.n / 2 - 1)
        throw std::invalid_argument("MollifierSpec: Jackson band does not fit on the grid");
}

std::vector<double> MollifierSpec::axis_transfer(const TorusGrid& grid) const {
    // Self-convolution of Fejer coefficients -> Jackson kernel: nonnegative,
    // band 2M, unit mass after normalizing the zero mode.
    const int M = half_band;
    std::vector<double> jack(4 * M + 1, 0.0);  // index m + 2M
    auto fejer = [M](int l) {
        return std::abs(l) <= M ? 1.0 - std::abs(l) / (M + 1.0) : 0.0;
    };
    for (int m = -2 * M; m <= 2 * M; ++m) {
        double s = 0.0;
        for (int l = -M; l <= M; ++l) s += fejer(l) * fejer(m - l);
        jack[m + 2 * M] = s;
    }
    const double z = jack[2 * M];
    std::vector<double> table(grid.n, 0.0);
    for (int i = 0; i < grid.n; ++i) {
        const int m = grid.mode_of(i);
        if (std::abs(m) <= 2 * M) table[i] = jack[m + 2 * M] / z;
    }
    return table;
}

double MollifierSpec::time_bump(double t) const {
    const double s = t / epsilon;
    const double q = 1.0 - s * s;
    return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

namespace {

std::vector<ComplexField> filter_series(const FieldSeries& in, const MollifierSpec& spec,
                                        SpectralWorkspace& ws) {
    const std::vector<double> table = spec.axis_transfer(ws.grid());
    std::vector<std::vector<double>> per_axis(ws.grid().dim, table);
    std::vector<ComplexField> out;
    out.reserve(in.fields.size());
    for (const ComplexField& f : in.fields) out.push_back(ws.apply_axis_multipliers(f, per_axis));
    return out;
}

// Weighted time combination at t. Weights are the sampled bump renormalized by
// the full sampled bump mass on the extended snapshot lattice (zero extension:
// snapshots outside the series contribute weight mass but zero field).
ComplexField time_combine(const std::vector<double>& times,
                          const std::vector<ComplexField>& fields,
                          const MollifierSpec& spec, double t) {
    const double ds = times[1] - times[0];
    double mass = 0.0;
    const long j_lo = static_cast<long>(std::floor((t - spec.epsilon - times.front()) / ds)) - 1;
    const long j_hi = static_cast<long>(std::ceil((t + spec.epsilon - times.front()) / ds)) + 1;
    for (long j = j_lo; j <= j_hi; ++j) mass += spec.time_bump(t - (times.front() + j * ds));
    ComplexField out(fields.front().grid);
    if (!(mass > 0.0)) return out;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double w = spec.time_bump(t - times[k]) / mass;
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += w * fields[k].values[i];
    }
    return out;
}

}  // namespace

FieldSeries mollify(const FieldSeries& in, const MollifierSpec& spec,
                    const std::vector<double>& eval_times, SpectralWorkspace& ws) {
    if (in.times.size() != in.fields.size() || in.times.size() < 3)
        throw std::invalid_argument("mollify: malformed series");
    check_uniform(in.times);
    spec.validate(ws.grid(), in.times[1] - in.times[0]);
    const std::vector<ComplexField> filtered = filter_series(in, spec, ws);
    FieldSeries out;
    out.times = eval_times;
    out.fields.reserve(eval_times.size());
    for (double t : eval_times)
        out.fields.push_back(time_combine(in.times, filtered, spec, t));
    return out;
}

FieldSeries mollify(const FieldSeries& in, const MollifierSpec& spec, SpectralWorkspace& ws) {
    return mollify(in, spec, in.times, ws);
}

FieldSeries commutator_G(const FieldSeries& psi, double delta, const MollifierSpec& spec,
                         const std::vector<double>& eval_times, SpectralWorkspace& ws) {
    if (!(delta > 0.0)) throw std::invalid_argument("commutator_G: delta must be > 0");
    if (psi.times.size() != psi.fields.size() || psi.times.size() < 3)
        throw std::invalid_argument("commutator_G: malformed series");
    check_uniform(psi.times);
    spec.validate(ws.grid(), psi.times[1] - psi.times[0]);

    FieldSeries fser;
    fser.times = psi.times;
    fser.fields.reserve(psi.fields.size());
    for (const ComplexField& f : psi.fields) {
        ComplexField g(f.grid);
        for (std::size_t i = 0; i < f.values.size(); ++i)
            g.values[i] = F_delta(f.values[i], delta);
        fser.fields.push_back(std::move(g));
    }
    const std::vector<ComplexField> filt_psi = filter_series(psi, spec, ws);
    const std::vector<ComplexField> filt_f = filter_series(fser, spec, ws);

    FieldSeries out;
    out.times = eval_times;
    out.fields.reserve(eval_times.size());
    for (double t : eval_times) {
        const ComplexField pe = time_combine(psi.times, filt_psi, spec, t);
        ComplexField g = time_combine(psi.times, filt_f, spec, t);
        for (std::size_t i = 0; i < g.values.size(); ++i)
            g.values[i] -= F_delta(pe.values[i], delta);
        out.fields.push_back(std::move(g));
    }
    return out;
}

double l2_space_time_norm(const FieldSeries& s) {
    const std::vector<double> wq = time_quadrature_weights(s.times);
    double acc = 0.0;
    for (std::size_t k = 0; k < s.fields.size(); ++k)
        acc += wq[k] * integrate_abs2(s.fields[k]);
    return std::sqrt(acc);
}

Remainders remainders(const FieldSeries& psi_eps, const FieldSeries& G, double hbar,
                      SpectralWorkspace& ws) {
    if (psi_eps.times.size() != G.times.size())
        throw std::invalid_argument("remainders: snapshot grids misaligned");
    for (std::size_t k = 0; k < psi_eps.times.size(); ++k)
        if (std::abs(psi_eps.times[k] - G.times[k]) > 1e-12)
            throw std::invalid_argument("remainders: snapshot grids misaligned");
    const TorusGrid& grid = ws.grid();
    Remainders out;
    out.times = psi_eps.times;
    for (std::size_t k = 0; k < psi_eps.times.size(); ++k) {
        const ComplexField& pe = psi_eps.fields[k];
        const ComplexField& g = G.fields[k];
        ScalarField r0(grid);
        for (std::size_t i = 0; i < r0.values.size(); ++i)
            r0.values[i] = (2.0 / hbar) * (std::conj(pe.values[i]) * g.values[i]).imag();
        const std::vector<ComplexField> gp = ws.gradient(pe);
        const std::vector<ComplexField> gg = ws.gradient(g);
        VectorField r1(grid);
        for (int j = 0; j < grid.dim; ++j)
            for (std::size_t i = 0; i < r0.values.size(); ++i)
                r1.comps[j][i] = (g.values[i] * std::conj(gp[j].values[i]) -
                                  std::conj(pe.values[i]) * gg[j].values[i])
                                     .real();
        out.r0.push_back(std::move(r0));
        out.r1.push_back(std::move(r1));
    }
    return out;
}

double pair_scalar_series(const std::vector<double>& times,
                          const std::vector<ScalarField>& f, const TestFunctionSpec& zeta) {
    const std::vector<double> wq = time_quadrature_weights(times);
    const ScalarField w = zeta.sample(f.front().grid);
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        acc += wq[k] * zeta.envelope.value(times[k]) * dot_integral(f[k], w);
    return acc;
}

double pair_vector_series(const std::vector<double>& times,
                          const std::vector<VectorField>& f, const TestFunctionSpec& phi) {
    const std::vector<double> wq = time_quadrature_weights(times);
    const TorusGrid& grid = f.front().grid;
    std::vector<ScalarField> W;
    for (int a = 0; a < grid.dim; ++a) W.push_back(phi.sample(grid, a));
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        double s = 0.0;
        for (int a = 0; a < grid.dim; ++a)
            for (std::size_t i = 0; i < W[a].values.size(); ++i)
                s += f[k].comps[a][i] * W[a].values[i];
        acc += wq[k] * phi.envelope.value(times[k]) * s * grid.cell_volume();
    }
    return acc;
}

double pair_r1_by_parts(const FieldSeries& psi_eps, const FieldSeries& G,
                        const TestFunctionSpec& phi, SpectralWorkspace& ws) {
    const TorusGrid& grid = ws.grid();
    const std::vector<double> wq = time_quadrature_weights(psi_eps.times);
    std::vector<ScalarField> W;
    for (int a = 0; a < grid.dim; ++a) W.push_back(phi.sample(grid, a));
    const ScalarField divW = phi.sample_divergence(grid);
    double acc = 0.0;
    for (std::size_t k = 0; k < psi_eps.fields.size(); ++k) {
        const ComplexField& pe = psi_eps.fields[k];
        const ComplexField& g = G.fields[k];
        const std::vector<ComplexField> gp = ws.gradient(pe);
        double s = 0.0;
        for (std::size_t i = 0; i < divW.values.size(); ++i) {
            Complex acc_c = g.values[i] * std::conj(pe.values[i]) * divW.values[i];
            for (int a = 0; a < grid.dim; ++a)
                acc_c += 2.0 * g.values[i] * std::conj(gp[a].values[i]) * W[a].values[i];
            s += acc_c.real();
        }
        acc += wq[k] * phi.envelope.value(psi_eps.times[k]) * s * grid.cell_volume();
    }
    return acc;
}

MollifiedSuite mollified_system_residual(const FieldSeries& psi, double delta,
                                         const MollifierSpec& spec,
                                         const std::vector<TestFunctionSpec>& basket,
                                         double hbar, SpectralWorkspace& ws,
                                         double window_lo, double window_hi) {
    if (window_lo < psi.times.front() + spec.epsilon - 1e-12 ||
        window_hi > psi.times.back() - spec.epsilon + 1e-12)
        throw std::invalid_argument(
            "mollified_system_residual: window must stay epsilon away from the series ends");

    std::vector<double> eval_times;
    for (double t : psi.times)
        if (t >= window_lo - 1e-12 && t <= window_hi + 1e-12) eval_times.push_back(t);
    if (eval_times.size() < 5)
        throw std::invalid_argument("mollified_system_residual: too few eval times in window");

    MollifiedSuite suite;
    suite.delta = delta;
    suite.epsilon = spec.epsilon;

    const FieldSeries pe = mollify(psi, spec, eval_times, ws);
    const FieldSeries G = commutator_G(psi, delta, spec, eval_times, ws);
    suite.g_l2 = l2_space_time_norm(G);

    // Hydro observables of the mollified field per eval time.
    ThermoParams params{delta, hbar};
    std::vector<HydroState> hydro;
    hydro.reserve(eval_times.size());
    for (std::size_t k = 0; k < eval_times.size(); ++k) {
        WaveState s{pe.fields[k], eval_times[k], params};
        hydro.push_back(observables(s, ws));
    }
    // R0 spatial integrals reused across scalar test functions.
    std::vector<ScalarField> r0_fields;
    for (std::size_t k = 0; k < eval_times.size(); ++k) {
        ScalarField r0(ws.grid());
        for (std::size_t i = 0; i < r0.values.size(); ++i)
            r0.values[i] = (2.0 / hbar) *
                           (std::conj(pe.fields[k].values[i]) * G.fields[k].values[i]).imag();
        r0_fields.push_back(std::move(r0));
    }

    const std::vector<double> wq = time_quadrature_weights(eval_times);
    const TorusGrid& grid = ws.grid();
    const double vol = grid.cell_volume();
    const double h2 = hbar * hbar;

    for (const TestFunctionSpec& tf : basket) {
        tf.validate(grid);
        if (tf.envelope.rise_begin < window_lo - 1e-12 || tf.envelope.fall_end > window_hi + 1e-12)
            throw std::invalid_argument("mollified_system_residual: envelope outside window");
        ResidualEntry entry;
        entry.test_fn_id = tf.id;
        entry.n_snapshots = static_cast<int>(eval_times.size());
        entry.dt = eval_times[1] - eval_times[0];
        entry.n = grid.n;
        entry.delta = delta;
        entry.epsilon = spec.epsilon;
        if (!tf.vector_valued()) {
            const ScalarField w = tf.sample(grid);
            std::vector<ScalarField> gw;
            for (int j = 0; j < grid.dim; ++j) gw.push_back(tf.sample_derivative(grid, 0, j));
            double i1 = 0, i2 = 0, i3 = 0, n1 = 0, n2 = 0, n3 = 0, pairing = 0;
            for (std::size_t k = 0; k < eval_times.size(); ++k) {
                const double tau = tf.envelope.value(eval_times[k]);
                const double taup = tf.envelope.derivative(eval_times[k]);
                const double a = dot_integral(hydro[k].rho, w);
                double a_abs = 0.0, b = 0.0, b_abs = 0.0, c_abs = 0.0;
                for (std::size_t i = 0; i < w.values.size(); ++i) {
                    a_abs += std::abs(hydro[k].rho.values[i] * w.values[i]);
                    double dot = 0.0;
                    for (int j = 0; j < grid.dim; ++j)
                        dot += hydro[k].current.comps[j][i] * gw[j].values[i];
                    b += dot;
                    b_abs += std::abs(dot);
                    c_abs += std::abs(r0_fields[k].values[i] * w.values[i]);
                }
                b *= vol;
                const double c = dot_integral(r0_fields[k], w);
                i1 += wq[k] * a * taup;
                i2 += wq[k] * b * tau;
                i3 += wq[k] * c * tau;
                n1 += wq[k] * a_abs * vol * std::abs(taup);
                n2 += wq[k] * b_abs * vol * std::abs(tau);
                n3 += wq[k] * c_abs * vol * std::abs(tau);
                pairing += wq[k] * c * tau;
            }
            const double norm = floor_norm(std::max({n1, n2, n3}));
            entry.kind = "moll_continuity";
            entry.residual = std::abs(i1 + i2 + i3) / norm;
            entry.normalization = norm;
            entry.terms = {i1, i2, i3};
            suite.continuity_identity = std::max(suite.continuity_identity, entry.residual);
            suite.r0_pairing += std::abs(pairing);
        } else {
            const int d = grid.dim;
            std::vector<ScalarField> W, dW;
            for (int a = 0; a < d; ++a) W.push_back(tf.sample(grid, a));
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) dW.push_back(tf.sample_derivative(grid, a, b));
            const ScalarField divW = tf.sample_divergence(grid);
            const ScalarField lapdivW = tf.sample_laplacian_divergence(grid);
            double I[6] = {0, 0, 0, 0, 0, 0}, Nn[6] = {0, 0, 0, 0, 0, 0};
            for (std::size_t k = 0; k < eval_times.size(); ++k) {
                const HydroState& s = hydro[k];
                const double tau = tf.envelope.value(eval_times[k]);
                const double taup = tf.envelope.derivative(eval_times[k]);
                double t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0, t6 = 0;
                double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0;
                const std::vector<ComplexField> gp = ws.gradient(pe.fields[k]);
                for (std::size_t i = 0; i < divW.values.size(); ++i) {
                    double jw = 0, lam = 0, gss = 0;
                    Complex r1c = G.fields[k].values[i] * std::conj(pe.fields[k].values[i]) *
                                  divW.values[i];
                    for (int a = 0; a < d; ++a) {
                        jw += s.current.comps[a][i] * W[a].values[i];
                        r1c += 2.0 * G.fields[k].values[i] * std::conj(gp[a].values[i]) *
                               W[a].values[i];
                        for (int b = 0; b < d; ++b) {
                            lam += s.momentum.comps[a][i] * s.momentum.comps[b][i] *
                                   dW[a * d + b].values[i];
                            gss += s.grad_sqrt_rho.comps[a][i] * s.grad_sqrt_rho.comps[b][i] *
                                   dW[a * d + b].values[i];
                        }
                    }
                    const double pr = p_delta(s.rho.values[i], delta) * divW.values[i];
                    const double bohm = s.rho.values[i] * lapdivW.values[i];
                    t1 += jw;
                    t2 += lam;
                    t3 += pr;
                    t4 += gss;
                    t5 += bohm;
                    t6 += r1c.real();
                    a1 += std::abs(jw);
                    a2 += std::abs(lam);
                    a3 += std::abs(pr);
                    a4 += std::abs(gss);
                    a5 += std::abs(bohm);
                    a6 += std::abs(r1c.real());
                }
                const double parts[6] = {t1 * vol * taup, t2 * vol * tau, t3 * vol * tau,
                                         t4 * vol * h2 * tau, -0.25 * h2 * t5 * vol * tau,
                                         t6 * vol * tau};
                const double mags[6] = {a1 * vol * std::abs(taup), a2 * vol * std::abs(tau),
                                        a3 * vol * std::abs(tau), a4 * vol * h2 * std::abs(tau),
                                        0.25 * h2 * a5 * vol * std::abs(tau),
                                        a6 * vol * std::abs(tau)};
                for (int q = 0; q < 6; ++q) {
                    I[q] += wq[k] * parts[q];
                    Nn[q] += wq[k] * mags[q];
                }
            }
            double norm = 0.0, sum = 0.0;
            for (int q = 0; q < 6; ++q) {
                norm = std::max(norm, Nn[q]);
                sum += I[q];
            }
            norm = floor_norm(norm);
            entry.kind = "moll_momentum";
            entry.residual = std::abs(sum) / norm;
            entry.normalization = norm;
            entry.terms.assign(I, I + 6);
            suite.momentum_identity = std::max(suite.momentum_identity, entry.residual);
            suite.r1_pairing += std::abs(I[5]);
        }
        suite.entries.push_back(std::move(entry));
    }
    return suite;
}

namespace {

SpatialMode md(int m1, int m2, int m3, Complex a) {
    SpatialMode m;
    m.m = {m1, m2, m3};
    m.amplitude = a;
    return m;
}

}  // namespace

std::vector<TestFunctionSpec> default_basket(int dim, double T) {
    const Complex one(1.0, 0.0), mi(0.0, -1.0);
    std::vector<TestFunctionSpec> basket;

    TestFunctionSpec c1{"const_a", {{md(0, 0, 0, one)}}, TimeEnvelope::one_sided(0.3 * T, 0.7 * T)};
    TestFunctionSpec c2{"const_b", {{md(0, 0, 0, one)}}, TimeEnvelope::one_sided(0.2 * T, 0.6 * T)};
    TestFunctionSpec s1{"mode_cos", {{md(1, 0, 0, one)}}, TimeEnvelope::one_sided(0.3 * T, 0.7 * T)};
    TestFunctionSpec s2{"mode_sin",
                        {{dim >= 2 ? md(0, 1, 0, mi) : md(2, 0, 0, mi)}},
                        TimeEnvelope::one_sided(0.25 * T, 0.65 * T)};
    basket.insert(basket.end(), {c1, c2, s1, s2});

    TestFunctionSpec v1, v2;
    v1.id = "vec_a";
    v2.id = "vec_b";
    v1.vector = v2.vector = true;
    v1.envelope = TimeEnvelope::one_sided(0.3 * T, 0.7 * T);
    v2.envelope = TimeEnvelope::one_sided(0.25 * T, 0.7 * T);
    if (dim == 1) {
        v1.components = {{md(1, 0, 0, mi), md(0, 0, 0, Complex(0.3, 0.0))}};
        v2.components = {{md(2, 0, 0, one)}};
    } else if (dim == 2) {
        v1.components = {{md(0, 1, 0, mi), md(0, 0, 0, Complex(0.3, 0.0))},
                         {md(1, 0, 0, mi), md(0, 0, 0, Complex(-0.2, 0.0))}};
        v2.components = {{md(1, 0, 0, one)}, {md(0, 2, 0, mi)}};
    } else {
        v1.components = {{md(0, 1, 0, mi), md(0, 0, 0, Complex(0.3, 0.0))},
                         {md(0, 0, 1, mi), md(0, 0, 0, Complex(-0.2, 0.0))},
                         {md(1, 0, 0, mi)}};
        v2.components = {{md(1, 0, 0, one)}, {md(0, 2, 0, mi)}, {md(0, 0, 1, one)}};
    }
    basket.push_back(v1);
    basket.push_back(v2);
    return basket;
}

std::vector<TestFunctionSpec> interior_basket(int dim, double w0, double w1) {
    const double width = 0.25 * (w1 - w0);
    const TimeEnvelope env = TimeEnvelope::two_sided(w0, w0 + width, w1 - width, w1);
    const Complex one(1.0, 0.0), mi(0.0, -1.0), half(0.5, 0.0);
    std::vector<TestFunctionSpec> basket;
    if (dim == 2) {
        basket.push_back({"s1", {{md(0, 0, 0, one), md(1, 1, 0, half), md(1, -1, 0, half)}}, env});
        basket.push_back({"s2", {{md(1, 0, 0, mi), md(0, 2, 0, half)}}, env});
        basket.push_back({"s3", {{md(1, 2, 0, one)}}, env});
        basket.push_back(
            {"s4", {{md(2, -1, 0, half), md(2, 1, 0, -half), md(0, 0, 0, Complex(0.3, 0.0))}}, env});
        basket.push_back({"v1",
                          {{md(0, 1, 0, mi), md(0, 0, 0, Complex(0.3, 0.0))},
                           {md(1, 0, 0, mi), md(0, 0, 0, Complex(-0.2, 0.0))}},
                          env, true});
        basket.push_back({"v2", {{md(1, 0, 0, one)}, {md(0, 2, 0, mi)}}, env, true});
        basket.push_back({"v3", {{md(1, 1, 0, mi)}, {md(1, -1, 0, one)}}, env, true});
        basket.push_back({"v4",
                          {{md(1, 2, 0, -half * mi), md(1, -2, 0, -half * mi)}, {md(1, 0, 0, half)}},
                          env, true});
    } else if (dim == 1) {
        basket.push_back({"s1", {{md(0, 0, 0, one), md(1, 0, 0, half)}}, env});
        basket.push_back({"s2", {{md(1, 0, 0, mi), md(2, 0, 0, half)}}, env});
        basket.push_back({"v1", {{md(1, 0, 0, mi), md(0, 0, 0, Complex(0.3, 0.0))}}, env, true});
        basket.push_back({"v2", {{md(2, 0, 0, one)}}, env, true});
    } else {
        basket.push_back({"s1", {{md(0, 0, 0, one), md(1, 1, 0, half), md(1, -1, 0, half)}}, env});
        basket.push_back({"s2", {{md(1, 0, 0, mi), md(0, 2, 1, half)}}, env});
        basket.push_back({"v1",
                          {{md(0, 1, 0, mi), md(0, 0, 0, Complex(0.3, 0.0))},
                           {md(0, 0, 1, mi)},
                           {md(1, 0, 0, mi)}},
                          env, true});
        basket.push_back(
            {"v2", {{md(1, 0, 0, one)}, {md(0, 2, 0, mi)}, {md(0, 0, 1, one)}}, env, true});
    }
    return basket;
}

}  // namespace qhd
