#include "qhd/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "qhd/madelung.hpp"
#include "qhd/weakform.hpp"

namespace qhd {

double l2_distance(const ComplexField& a, const ComplexField& b) {
    if (a.grid != b.grid) throw std::invalid_argument("l2_distance: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
    return std::sqrt(s * a.grid.cell_volume());
}

double h1_distance(const ComplexField& a, const ComplexField& b, SpectralWorkspace& ws) {
    if (a.grid != b.grid) throw std::invalid_argument("h1_distance: grid mismatch");
    ComplexField diff(a.grid);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        diff.values[i] = a.values[i] - b.values[i];
    double s = integrate_abs2(diff);
    for (const ComplexField& g : ws.gradient(diff)) s += integrate_abs2(g);
    return std::sqrt(s);
}

int worker_count_from_env(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QHD_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct RungData {
    bool failed = false;
    std::string reason;
    std::vector<double> times;
    std::vector<EnergyBreakdown> energies;
    std::vector<double> limit_internal;
    std::vector<double> min_rho;
    std::vector<double> max_rho;
    std::vector<double> quadratic_residual;
    std::vector<double> entropy_min;
    std::vector<ComplexField> comparison_psi;
    std::vector<HydroState> comparison_hydro;
    double kinetic_integral = 0.0;
};

RungData run_rung(const ComplexField& psi0, double delta, const SolverConfig& config,
                  double hbar, const std::vector<double>& comparison_times) {
    RungData out;
    try {
        ThermoParams params{delta, hbar};
        SplitStepSolver solver(psi0.grid, params);
        WaveState state{psi0, 0.0, params};
        std::size_t next_cmp = 0;
        std::vector<double> kinetic_series;
        auto sink = [&](const WaveState& s, const EnergyBreakdown& e) {
            out.times.push_back(s.time);
            out.energies.push_back(e);
            double li = 0.0;
            double lo = std::norm(s.psi.values.front()), hi = lo;
            double emin = entropy_density(lo);
            for (const Complex& z : s.psi.values) {
                const double rho = std::norm(z);
                const double ent = entropy_density(rho);
                li += ent;
                emin = std::min(emin, ent);
                lo = std::min(lo, rho);
                hi = std::max(hi, rho);
            }
            out.limit_internal.push_back(li * s.psi.grid.cell_volume());
            out.min_rho.push_back(lo);
            out.max_rho.push_back(hi);
            out.entropy_min.push_back(emin);
            kinetic_series.push_back(2.0 * e.kinetic / (hbar * hbar));  // int |grad psi|^2
            const HydroState h = observables(s, solver.workspace());
            out.quadratic_residual.push_back(
                quadratic_identity_residual(s, h, solver.workspace()));
            if (next_cmp < comparison_times.size() &&
                std::abs(s.time - comparison_times[next_cmp]) < 1e-9) {
                out.comparison_psi.push_back(s.psi);
                out.comparison_hydro.push_back(h);
                ++next_cmp;
            }
        };
        solver.evolve(std::move(state), config, sink);
        if (next_cmp != comparison_times.size())
            throw std::runtime_error("snapshot cadence missed a comparison time");
        const std::vector<double> wq = time_quadrature_weights(out.times);
        for (std::size_t k = 0; k < kinetic_series.size(); ++k)
            out.kinetic_integral += wq[k] * kinetic_series[k];
    } catch (const std::exception& e) {
        out.failed = true;
        out.reason = e.what();
    }
    return out;
}

double pair_distance_proxy(const std::vector<double>& d2, double t_final) {
    double mean = 0.0;
    for (double v : d2) mean += v;
    mean /= static_cast<double>(d2.size());
    return std::sqrt(t_final * mean);
}

}  // namespace

ContinuationReport delta_sweep(const ComplexField& psi0, const std::vector<double>& ladder,
                               const SolverConfig& config, double hbar, int workers) {
    if (ladder.empty()) throw std::invalid_argument("delta_sweep: empty ladder");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0)) throw std::invalid_argument("delta_sweep: ladder entries must be > 0");
        if (i > 0 && !(ladder[i] < ladder[i - 1]))
            throw std::invalid_argument("delta_sweep: ladder must be strictly decreasing");
    }
    config.validate();

    ContinuationReport rep;
    rep.ladder = ladder;
    rep.t_final = config.t_final;
    rep.hbar = hbar;
    for (int j = 1; j <= 9; ++j) rep.comparison_times.push_back(0.1 * j * config.t_final);

    // snapshot cadence must hit the comparison times
    {
        const long n = config.num_steps();
        if (n % 10 != 0 || (n / 10) % config.snapshot_stride != 0)
            throw std::invalid_argument(
                "delta_sweep: snapshot stride must divide t_final/(10 dt) so comparison times land on snapshots");
    }

    const int nworkers = worker_count_from_env(workers);
    std::vector<RungData> rungs(ladder.size());
    std::size_t next = 0;
    std::mutex mx;
    auto worker = [&]() {
        for (;;) {
            std::size_t mine;
            {
                std::lock_guard<std::mutex> lock(mx);
                if (next >= ladder.size()) return;
                mine = next++;
            }
            rungs[mine] = run_rung(psi0, ladder[mine], config, hbar, rep.comparison_times);
        }
    };
    {
        std::vector<std::future<void>> futs;
        for (int t = 0; t < std::min<int>(nworkers, static_cast<int>(ladder.size())); ++t)
            futs.push_back(std::async(std::launch::async, worker));
        for (auto& f : futs) f.get();
    }

    SpectralWorkspace ws(psi0.grid);
    for (std::size_t r = 0; r < rungs.size(); ++r) {
        const RungData& rd = rungs[r];
        rep.failed.push_back(rd.failed);
        rep.failure_reason.push_back(rd.reason);
        rep.snapshot_times.push_back(rd.times);
        rep.energy_traces.push_back(rd.energies);
        rep.limit_internal_traces.push_back(rd.limit_internal);
        rep.min_rho_traces.push_back(rd.min_rho);
        rep.max_rho_traces.push_back(rd.max_rho);
        rep.kinetic_time_integral.push_back(rd.kinetic_integral);
        double drift = 0.0, gap = 0.0, mass_spread = 0.0, quad = 0.0;
        double emin = 0.0;
        if (!rd.failed && !rd.energies.empty()) {
            const double e0 = rd.energies.front().total;
            const double m0 = rd.energies.front().mass;
            emin = rd.entropy_min.front();
            for (std::size_t k = 0; k < rd.energies.size(); ++k) {
                drift = std::max(drift, std::abs(rd.energies[k].total - e0));
                gap = std::max(gap,
                               std::abs(rd.energies[k].internal - rd.limit_internal[k]));
                mass_spread = std::max(mass_spread, std::abs(rd.energies[k].mass - m0) / m0);
                quad = std::max(quad, rd.quadratic_residual[k]);
                emin = std::min(emin, rd.entropy_min[k]);
            }
        }
        rep.energy_drift.push_back(drift);
        rep.internal_gap.push_back(gap);
        rep.mass_trace_spread.push_back(mass_spread);
        rep.quadratic_residual_max.push_back(quad);
        rep.entropy_min.push_back(emin);
    }

    for (std::size_t r = 0; r + 1 < rungs.size(); ++r) {
        if (rungs[r].failed || rungs[r + 1].failed) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            rep.pair_l2.push_back(nan);
            rep.pair_h1.push_back(nan);
            rep.pair_sqrt_rho_l2.push_back(nan);
            rep.pair_lambda_l2.push_back(nan);
            rep.pair_grad_sqrt_rho_l2.push_back(nan);
            continue;
        }
        std::vector<double> dl2, dh1, dsq, dlam, dgs;
        for (std::size_t k = 0; k < rep.comparison_times.size(); ++k) {
            const ComplexField& a = rungs[r].comparison_psi[k];
            const ComplexField& b = rungs[r + 1].comparison_psi[k];
            const double l2 = l2_distance(a, b);
            const double h1 = h1_distance(a, b, ws);
            dl2.push_back(l2 * l2);
            dh1.push_back(h1 * h1);
            const HydroState& ha = rungs[r].comparison_hydro[k];
            const HydroState& hb = rungs[r + 1].comparison_hydro[k];
            double s2 = 0.0, lam2 = 0.0, gs2 = 0.0;
            for (std::size_t i = 0; i < ha.rho.values.size(); ++i) {
                const double ds = ha.sqrt_rho.values[i] - hb.sqrt_rho.values[i];
                s2 += ds * ds;
                for (int j = 0; j < a.grid.dim; ++j) {
                    const double dl = ha.momentum.comps[j][i] - hb.momentum.comps[j][i];
                    const double dg = ha.grad_sqrt_rho.comps[j][i] - hb.grad_sqrt_rho.comps[j][i];
                    lam2 += dl * dl;
                    gs2 += dg * dg;
                }
            }
            const double vol = a.grid.cell_volume();
            dsq.push_back(s2 * vol);
            dlam.push_back(lam2 * vol);
            dgs.push_back(gs2 * vol);
        }
        rep.pair_l2.push_back(pair_distance_proxy(dl2, config.t_final));
        rep.pair_h1.push_back(pair_distance_proxy(dh1, config.t_final));
        rep.pair_sqrt_rho_l2.push_back(pair_distance_proxy(dsq, config.t_final));
        rep.pair_lambda_l2.push_back(pair_distance_proxy(dlam, config.t_final));
        rep.pair_grad_sqrt_rho_l2.push_back(pair_distance_proxy(dgs, config.t_final));
    }
    return rep;
}

double energy_equality_check(const ContinuationReport& report) {
    // smallest non-failed delta
    std::size_t best = report.ladder.size();
    for (std::size_t r = report.ladder.size(); r-- > 0;)
        if (!report.failed[r]) {
            best = r;
            break;
        }
    if (best == report.ladder.size())
        throw std::invalid_argument("energy_equality_check: all rungs failed");
    const auto& en = report.energy_traces[best];
    const auto& li = report.limit_internal_traces[best];
    const double e0 = en.front().kinetic + li.front();
    double worst = 0.0;
    for (std::size_t k = 0; k < en.size(); ++k) {
        const double e = en[k].kinetic + li[k];
        worst = std::max(worst, std::abs(e - e0) / (1.0 + std::abs(e0)));
    }
    return worst;
}

SlopeFit kinetic_convergence_check(const ContinuationReport& report) {
    if (report.ladder.size() < 3)
        throw std::invalid_argument("kinetic_convergence_check: need >= 3 rungs");
    std::vector<double> diffs, deltas;
    for (std::size_t r = 0; r + 1 < report.ladder.size(); ++r) {
        if (report.failed[r] || report.failed[r + 1]) continue;
        diffs.push_back(std::abs(report.kinetic_time_integral[r] -
                                 report.kinetic_time_integral[r + 1]));
        deltas.push_back(report.ladder[r]);
    }
    SlopeFit fit;
    if (diffs.size() < 2) return fit;
    fit.monotone = true;
    for (std::size_t i = 0; i + 1 < diffs.size(); ++i)
        if (!(diffs[i + 1] < diffs[i])) fit.monotone = false;
    // least-squares slope of log diff vs log delta
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double nn = static_cast<double>(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        const double x = std::log(deltas[i]);
        const double y = std::log(std::max(diffs[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    return fit;
}

}  // namespace qhd
