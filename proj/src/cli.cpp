#include "qhd/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "qhd/continuation.hpp"
#include "qhd/io.hpp"
#include "qhd/madelung.hpp"
#include "qhd/nls.hpp"
#include "qhd/thermo.hpp"
#include "qhd/weakform.hpp"

namespace fs = std::filesystem;

namespace qhd {

namespace {

std::string join_ladder(const std::vector<double>& ladder) {
    std::string s;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (i) s += ',';
        s += format_f64(ladder[i]);
    }
    return s;
}

std::vector<double> parse_ladder(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

void validate(const RunConfig& c) {
    std::vector<std::string> problems;
    auto bad = [&problems](const std::string& p) { problems.push_back(p); };

    if (c.mode != "run" && c.mode != "sweep" && c.mode != "verify" && c.mode != "identities")
        bad("mode must be one of run, sweep, verify, identities");
    if (c.d < 1 || c.d > 3) bad("d must be 1, 2 or 3");
    if (c.n < 4 || c.n % 2 != 0) bad("n must be even and >= 4");
    if (!(c.dt > 0.0)) bad("dt must be > 0");
    if (!(c.t_final > 0.0)) bad("t-final must be > 0");
    if (c.dt > 0.0 && c.t_final > 0.0) {
        const double steps = c.t_final / c.dt;
        if (steps > 1e9)
            bad("t-final/dt too large");
        else if (std::abs(steps - std::llround(steps)) > 1e-9 * steps)
            bad("t-final must be an integer multiple of dt");
    }
    if (!(c.hbar > 0.0)) bad("hbar must be > 0");
    if (c.snapshot_stride < 1) bad("snapshot-stride must be >= 1");
    if (c.mode != "identities") {
        if (!(c.delta > 0.0) && c.mode != "sweep") bad("delta must be > 0 for time stepping");
    }
    if (c.delta < 0.0) bad("delta must be >= 0");
    if (c.mode == "sweep") {
        if (c.delta_ladder.empty()) bad("delta-ladder must not be empty");
        for (std::size_t i = 0; i < c.delta_ladder.size(); ++i) {
            if (!(c.delta_ladder[i] > 0.0)) bad("delta-ladder entries must be > 0");
            if (i > 0 && !(c.delta_ladder[i] < c.delta_ladder[i - 1])) {
                bad("delta-ladder must be strictly decreasing");
                break;
            }
        }
    }
    if (c.max_mode < 0) bad("max-mode must be >= 0");
    if (c.n >= 4 && 3 * c.max_mode >= c.n) bad("max-mode must be below n/3");
    if (!(c.decay >= 0.0)) bad("decay must be >= 0");
    if (!std::isfinite(c.amplitude) || !std::isfinite(c.offset)) bad("amplitude/offset must be finite");
    if (c.eps_vac < 0.0) bad("eps-vac must be >= 0");
    if (c.mode == "verify") {
        if (!(c.epsilon > 0.0)) bad("epsilon must be > 0");
        if (c.n >= 4 && c.epsilon < 4.0 / c.n) bad("epsilon must be >= 4/n (resolvable in space)");
        if (c.epsilon < 4.0 * c.snapshot_stride * c.dt)
            bad("epsilon must be >= 4 snapshot spacings");
        if (c.epsilon >= 0.5 * c.t_final) bad("epsilon must be < t-final/2");
    }
    if (c.basket != "default") bad("basket must be 'default'");
    if (c.workers < 0) bad("workers must be >= 0");
    if (c.output_dir.empty()) bad("output-dir must not be empty");

    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig c;
    CLI::App app{"pseudospectral simulator for the regularized logarithmic Schrodinger / QHD system"};
    app.set_config("--config", "", "flat key = value config file; flags override file values");
    app.allow_config_extras(false);

    std::string ladder_text;
    app.add_option("--mode", c.mode, "run | sweep | verify | identities")->required();
    app.add_option("--d", c.d, "spatial dimension (1..3)")->capture_default_str();
    app.add_option("--n", c.n, "grid points per axis (even, >= 4)")->capture_default_str();
    app.add_option("--dt", c.dt, "time step")->capture_default_str();
    app.add_option("--t-final", c.t_final, "final time (integer multiple of dt)")->capture_default_str();
    app.add_option("--delta", c.delta, "regularization parameter")->capture_default_str();
    app.add_option("--delta-ladder", ladder_text,
                   "comma separated strictly decreasing deltas (sweep mode)");
    app.add_option("--hbar", c.hbar, "scaled Planck constant")->capture_default_str();
    app.add_option("--seed", c.seed, "random data seed")->capture_default_str();
    app.add_option("--max-mode", c.max_mode, "band limit of the random data")->capture_default_str();
    app.add_option("--decay", c.decay, "spectral decay exponent of the random data")
        ->capture_default_str();
    app.add_option("--amplitude", c.amplitude, "random perturbation amplitude")->capture_default_str();
    app.add_option("--offset", c.offset, "constant offset of the initial data")->capture_default_str();
    app.add_option("--normalize", c.normalize, "rescale the initial data to unit mass")
        ->capture_default_str();
    app.add_option("--snapshot-stride", c.snapshot_stride, "steps between snapshots")
        ->capture_default_str();
    app.add_option("--output-dir", c.output_dir, "output directory")->capture_default_str();
    app.add_option("--eps-vac", c.eps_vac, "vacuum threshold override (0 = automatic)")
        ->capture_default_str();
    app.add_option("--epsilon", c.epsilon, "mollifier scale (verify mode)")->capture_default_str();
    app.add_option("--basket", c.basket, "test function basket selector")->capture_default_str();
    app.add_flag("--dealias", c.dealias, "apply 2/3-rule truncation after each step");
    app.add_option("--workers", c.workers, "worker threads (0 = QHD_WORKERS env or machine)")
        ->capture_default_str();

    std::vector<const char*> argv;
    argv.push_back("qhdsim");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string("invalid configuration:\n  - ") + e.what());
    }
    if (!ladder_text.empty()) {
        try {
            c.delta_ladder = parse_ladder(ladder_text);
        } catch (const std::exception&) {
            throw ConfigError("invalid configuration:\n  - delta-ladder must be comma separated reals");
        }
    }
    validate(c);
    return c;
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "mode = " << c.mode << "\n";
    out << "d = " << c.d << "\n";
    out << "n = " << c.n << "\n";
    out << "dt = " << format_f64(c.dt) << "\n";
    out << "t-final = " << format_f64(c.t_final) << "\n";
    out << "delta = " << format_f64(c.delta) << "\n";
    out << "delta-ladder = \"" << join_ladder(c.delta_ladder) << "\"\n";
    out << "hbar = " << format_f64(c.hbar) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "max-mode = " << c.max_mode << "\n";
    out << "decay = " << format_f64(c.decay) << "\n";
    out << "amplitude = " << format_f64(c.amplitude) << "\n";
    out << "offset = " << format_f64(c.offset) << "\n";
    out << "normalize = " << (c.normalize ? "true" : "false") << "\n";
    out << "snapshot-stride = " << c.snapshot_stride << "\n";
    out << "output-dir = " << c.output_dir << "\n";
    out << "eps-vac = " << format_f64(c.eps_vac) << "\n";
    out << "epsilon = " << format_f64(c.epsilon) << "\n";
    out << "basket = " << c.basket << "\n";
    out << "dealias = " << (c.dealias ? "true" : "false") << "\n";
    out << "workers = " << c.workers << "\n";
    return out.str();
}

namespace {

ComplexField initial_data(const RunConfig& c) {
    const TorusGrid grid(c.d, c.n);
    ComplexField psi = random_band_limited(grid, c.seed, c.max_mode, c.decay);
    for (Complex& z : psi.values) z = c.offset + c.amplitude * z;
    if (c.normalize) {
        const double mass = integrate_abs2(psi);
        if (!(mass > 0.0)) throw ConfigError("initial data has zero mass");
        const double scale = 1.0 / std::sqrt(mass);
        for (Complex& z : psi.values) z *= scale;
    }
    return psi;
}

std::uint64_t fnv1a_string(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct OutputTracker {
    fs::path dir;
    std::vector<std::string> files;

    fs::path file(const std::string& rel) {
        files.push_back(rel);
        return dir / rel;
    }
};

void finish_manifest(OutputTracker& tracker, const RunConfig& c, double wall_seconds,
                     int status, const std::string& note) {
    Manifest m;
    m.config_hash = hash_hex(fnv1a_string(serialize_config(c)));
    m.tool_version = kToolVersion;
    m.wall_seconds = wall_seconds;
    m.exit_status = status;
    m.note = note;
    for (const std::string& rel : tracker.files)
        m.entries.push_back({rel, fnv1a_file((tracker.dir / rel).string())});
    write_manifest((tracker.dir / "manifest.txt").string(), m);
}

std::vector<std::string> series_header() {
    return {"time", "mass", "energy_total", "energy_kinetic", "energy_internal",
            "hydro_grad", "hydro_lambda", "min_rho", "max_rho"};
}

void series_row(CsvWriter& csv, const WaveState& s, const EnergyBreakdown& e) {
    double lo = std::norm(s.psi.values.front()), hi = lo;
    for (const Complex& z : s.psi.values) {
        const double r = std::norm(z);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    csv.row({format_f64(s.time), format_f64(e.mass), format_f64(e.total), format_f64(e.kinetic),
             format_f64(e.internal), format_f64(e.hydro_grad), format_f64(e.hydro_lambda),
             format_f64(lo), format_f64(hi)});
}

int mode_run(const RunConfig& c, OutputTracker& tracker) {
    const ComplexField psi0 = initial_data(c);
    ThermoParams params{c.delta, c.hbar};
    SplitStepSolver solver(psi0.grid, params);
    SolverConfig sc{c.dt, c.t_final, c.snapshot_stride, c.dealias};

    write_qhdf(tracker.file("state_initial.qhdf").string(), psi0, 0.0, c.hbar, c.delta);
    CsvWriter csv(tracker.file("series.csv").string(), series_header());
    WaveState final_state;
    try {
        final_state = solver.evolve(WaveState{psi0, 0.0, params}, sc,
                                    [&](const WaveState& s, const EnergyBreakdown& e) {
                                        series_row(csv, s, e);
                                    });
    } catch (const BlowUpError& e) {
        csv.close();
        throw;
    }
    csv.close();
    write_qhdf(tracker.file("state_final.qhdf").string(), final_state.psi, final_state.time,
               c.hbar, c.delta);
    const HydroState hydro = observables(final_state, solver.workspace());
    write_hydro_qhdf(tracker.file("hydro_final.qhdf").string(), hydro, c.hbar, c.delta);
    return 0;
}

int mode_sweep(const RunConfig& c, OutputTracker& tracker) {
    const ComplexField psi0 = initial_data(c);
    SolverConfig sc{c.dt, c.t_final, c.snapshot_stride, c.dealias};
    const ContinuationReport rep = delta_sweep(psi0, c.delta_ladder, sc, c.hbar, c.workers);

    for (std::size_t r = 0; r < rep.ladder.size(); ++r) {
        char name[64];
        std::snprintf(name, sizeof(name), "rung_%03zu", r);
        fs::create_directories(tracker.dir / name);
        if (rep.failed[r]) continue;
        CsvWriter csv(tracker.file(std::string(name) + "/series.csv").string(), series_header());
        for (std::size_t k = 0; k < rep.snapshot_times[r].size(); ++k) {
            const EnergyBreakdown& e = rep.energy_traces[r][k];
            csv.row({format_f64(rep.snapshot_times[r][k]), format_f64(e.mass),
                     format_f64(e.total), format_f64(e.kinetic), format_f64(e.internal),
                     format_f64(e.hydro_grad), format_f64(e.hydro_lambda),
                     format_f64(rep.min_rho_traces[r][k]), format_f64(rep.max_rho_traces[r][k])});
        }
    }

    CsvWriter csv(tracker.file("continuation.csv").string(),
                  {"delta", "pair_l2", "pair_h1", "sqrt_rho_l2", "lambda_l2", "energy_drift",
                   "internal_gap"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < rep.ladder.size(); ++r) {
        const bool has_pair = r + 1 < rep.ladder.size();
        csv.row({format_f64(rep.ladder[r]),
                 format_f64(has_pair ? rep.pair_l2[r] : nan),
                 format_f64(has_pair ? rep.pair_h1[r] : nan),
                 format_f64(has_pair ? rep.pair_sqrt_rho_l2[r] : nan),
                 format_f64(has_pair ? rep.pair_lambda_l2[r] : nan),
                 format_f64(rep.energy_drift[r]), format_f64(rep.internal_gap[r])});
    }
    for (std::size_t r = 0; r < rep.ladder.size(); ++r)
        if (rep.failed[r]) return 2;
    return 0;
}

int mode_verify(const RunConfig& c, OutputTracker& tracker) {
    const ComplexField psi0 = initial_data(c);
    ThermoParams params{c.delta, c.hbar};
    SplitStepSolver solver(psi0.grid, params);
    SolverConfig sc{c.dt, c.t_final, c.snapshot_stride, c.dealias};

    FieldSeries psi_series;
    std::vector<HydroState> hydro;
    solver.evolve(WaveState{psi0, 0.0, params}, sc,
                  [&](const WaveState& s, const EnergyBreakdown&) {
                      psi_series.times.push_back(s.time);
                      psi_series.fields.push_back(s.psi);
                      hydro.push_back(c.eps_vac > 0.0
                                          ? observables(s, solver.workspace(), c.eps_vac)
                                          : observables(s, solver.workspace()));
                  });

    std::vector<ResidualEntry> entries;
    for (const TestFunctionSpec& tf : default_basket(c.d, c.t_final)) {
        ResidualEntry entry;
        if (!tf.vector_valued())
            continuity_residual(hydro, tf, &entry);
        else
            momentum_residual(hydro, tf, PressureMode::Delta, c.delta, c.hbar, &entry);
        entry.delta = c.delta;
        entries.push_back(entry);
    }

    const MollifierSpec spec = MollifierSpec::for_epsilon(c.epsilon);
    const double w0 = std::max(c.epsilon, 0.2 * c.t_final);
    const double w1 = std::min(c.t_final - c.epsilon, 0.8 * c.t_final);
    const MollifiedSuite suite =
        mollified_system_residual(psi_series, c.delta, spec, interior_basket(c.d, w0, w1),
                                  c.hbar, solver.workspace(), w0, w1);
    entries.insert(entries.end(), suite.entries.begin(), suite.entries.end());

    CsvWriter csv(tracker.file("residuals.csv").string(),
                  {"test_fn_id", "kind", "residual", "normalization", "n_snapshots", "dt", "N",
                   "delta", "epsilon"});
    for (const ResidualEntry& e : entries)
        csv.row({e.test_fn_id, e.kind, format_f64(e.residual), format_f64(e.normalization),
                 std::to_string(e.n_snapshots), format_f64(e.dt), std::to_string(e.n),
                 format_f64(e.delta), format_f64(e.epsilon)});
    csv.row({"__g_norm__", "commutator", format_f64(suite.g_l2), "1", "0", "0",
             std::to_string(c.n), format_f64(c.delta), format_f64(c.epsilon)});
    return 0;
}

int mode_identities(const RunConfig& c, OutputTracker& tracker) {
    CsvWriter csv(tracker.file("identities.csv").string(),
                  {"suite", "metric", "value", "threshold", "pass"});
    bool all_pass = true;
    auto emit = [&](const std::string& suite, const std::string& metric, double value,
                    double threshold, bool pass) {
        all_pass = all_pass && pass;
        csv.row({suite, metric, format_f64(value), format_f64(threshold), pass ? "1" : "0"});
    };

    const TorusGrid grid(c.d, c.n);
    SpectralWorkspace ws(grid);
    ComplexField psi0 = initial_data(c);
    const double delta = c.delta > 0.0 ? c.delta : 0.05;
    ThermoParams params{delta, c.hbar};
    WaveState state{psi0, 0.0, params};

    {
        const HydroState h = c.eps_vac > 0.0 ? observables(state, ws, c.eps_vac)
                                             : observables(state, ws);
        const double q = quadratic_identity_residual(state, h, ws);
        emit("quadratic_identity", "max_residual", q, 1e-12, q <= 1e-12);
        const double s = stress_residual(stress_tensor(state, h, ws));
        emit("stress_identity", "max_gap", s, 1e-12, s <= 1e-12);
    }
    {
        double prev = 0.0;
        for (int n : {32, 64, 128}) {
            TorusGrid g1(1, n);
            SpectralWorkspace w1(g1);
            ScalarField sq(g1);
            for (int i = 0; i < n; ++i)
                sq.values[i] = (2.0 + std::cos(2.0 * M_PI * i / n)) / 2.0;
            const double r = bohm_identity_residual(sq, w1);
            if (n == 64) emit("bohm_identity", "rel_residual_n64", r, 1e-8, r <= 1e-8);
            if (n > 32) {
                const bool dec = r < prev || r <= 1e-9;
                emit("bohm_identity", "decreasing_to_n" + std::to_string(n), r, prev, dec);
            }
            prev = r;
        }
    }
    {
        const double v = entropy_density(std::exp(-1.0));
        emit("entropy", "min_at_1_over_e", v, kEntropyFloor,
             std::abs(v - kEntropyFloor) <= 1e-10);
        ScalarField rho(grid);
        for (std::size_t i = 0; i < rho.values.size(); ++i)
            rho.values[i] = std::norm(psi0.values[i]);
        emit("entropy", "field_min_check", entropy_min_check(rho) ? 1.0 : 0.0, 1.0,
             entropy_min_check(rho));
    }
    {
        std::mt19937_64 rng(c.seed + 1);
        auto uniform = [&rng](double lo, double hi) {
            return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        };
        double worst = 0.0;
        for (int i = 0; i < 1000000; ++i) {
            const Complex z1(uniform(-10, 10), uniform(-10, 10));
            const Complex z2(uniform(-10, 10), uniform(-10, 10));
            if (std::abs(z1 - z2) < 1e-12) continue;
            worst = std::max(worst, haraux_ratio(z1, z2));
        }
        emit("haraux", "sup_ratio_1e6", worst, kHarauxConstant, worst <= kHarauxConstant);

        double worst_lip = 0.0;
        for (double dl : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
            for (int i = 0; i < 100000; ++i) {
                const Complex z1(uniform(-10, 10), uniform(-10, 10));
                const Complex z2 = z1 + std::polar(std::pow(10.0, uniform(-8, 0)),
                                                   uniform(0, 2 * M_PI));
                if (std::abs(z1) > 10 || std::abs(z2) > 10 || z1 == z2) continue;
                worst_lip = std::max(worst_lip, lipschitz_ratio(z1, z2, dl));
            }
        emit("lipschitz", "sup_ratio", worst_lip, kLipschitzConstant,
             worst_lip <= kLipschitzConstant);

        double worst_growth = 0.0;
        for (double dl : {1e-1, 1e-3, 1e-6})
            for (int i = 0; i < 200000; ++i) {
                const Complex z = std::polar(std::pow(10.0, uniform(-9, 1)),
                                             uniform(0, 2 * M_PI));
                if (std::abs(z) > 10 || std::abs(z) == 0.0) continue;
                const double g = std::abs(F_delta(z, dl)) /
                                 (std::abs(z) + std::pow(std::abs(z), 3));
                worst_growth = std::max(worst_growth, g);
            }
        emit("growth", "sup_F_over_cubic", worst_growth, kGrowthConstant,
             worst_growth <= kGrowthConstant);
    }
    {
        double worst = 0.0;
        bool ok = true;
        for (int j = 1; j <= 6; ++j) {
            const double dl = std::pow(10.0, -j);
            for (int i = 0; i <= 100; ++i) {
                const double rho = 0.1 * i;
                const double gap = std::abs(p_delta(rho, dl) - rho);
                const double bound = dl * (std::abs(std::log(dl)) + std::log(rho + 1.0) + 1.0);
                worst = std::max(worst, gap - bound);
                ok = ok && gap <= bound;
            }
        }
        emit("pressure_limit", "max_excess_over_bound", worst, 0.0, ok);

        bool fok = true;
        std::mt19937_64 rng(c.seed + 2);
        for (int i = 0; i < 10000; ++i) {
            const double rho = 10.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
            const double dl = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            fok = fok && f_delta(rho, dl) >= kEntropyFloor - 1e-12;
        }
        emit("f_delta_floor", "above_minus_1_over_e", fok ? 1.0 : 0.0, 1.0, fok);
    }
    csv.close();
    return all_pass ? 0 : 1;
}

}  // namespace

int run_main(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    OutputTracker tracker;
    tracker.dir = c.output_dir;
    fs::create_directories(tracker.dir);

    // effective config, reparsable
    {
        std::ofstream cfg(tracker.dir / "config.cfg");
        cfg << serialize_config(c);
    }
    tracker.files.push_back("config.cfg");

    int status = 0;
    std::string note;
    try {
        if (c.mode == "run")
            status = mode_run(c, tracker);
        else if (c.mode == "sweep")
            status = mode_sweep(c, tracker);
        else if (c.mode == "verify")
            status = mode_verify(c, tracker);
        else if (c.mode == "identities")
            status = mode_identities(c, tracker);
        else
            throw ConfigError("unknown mode " + c.mode);
    } catch (const BlowUpError& e) {
        status = 2;
        note = "blow_up_step = " + std::to_string(e.step);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        status = 2;
        note = std::string("numeric_abort = ") + e.what();
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finish_manifest(tracker, c, wall, status, note);
    return status;
}

}  // namespace qhd
