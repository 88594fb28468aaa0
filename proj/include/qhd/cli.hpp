#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Configuration and orchestration for the qhdsim tool. Modes:
//   run        one regularized solve, series.csv + QHDF dumps
//   sweep      delta ladder, per-rung directories + continuation.csv
//   verify     weak-form residuals (Def. 1.1 style + mollified system)
//   identities pointwise identity and inequality suites, identities.csv
// Flat `key = value` config files mirror the flags 1:1; flags win.

namespace qhd {

struct RunConfig {
    std::string mode;  // run | sweep | verify | identities
    int d = 2;
    int n = 32;
    double dt = 1e-3;
    double t_final = 1.0;
    double delta = 0.05;
    std::vector<double> delta_ladder = {0.2, 0.1, 0.05, 0.025, 0.0125};
    double hbar = 1.0;
    std::uint64_t seed = 7;
    int max_mode = 4;
    double decay = 3.0;
    double amplitude = 0.05;  // psi0 = offset + amplitude * band-limited field
    double offset = 1.0;
    bool normalize = true;    // rescale psi0 to unit mass
    int snapshot_stride = 10;
    std::string output_dir = "out";
    double eps_vac = 0.0;    // 0: automatic threshold
    double epsilon = 0.2;    // mollifier scale (verify mode)
    std::string basket = "default";
    bool dealias = false;
    int workers = 0;  // 0: QHD_WORKERS env or machine parallelism
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses flags (and an optional --config file). Throws ConfigError with one
// aggregated message listing every validation problem.
RunConfig parse_config(const std::vector<std::string>& args);

// Canonical key = value serialization; parse_config round-trips it.
std::string serialize_config(const RunConfig& config);

// Dispatches to the solver / sweep / verifier / identity suites.
// Returns 0 on success, 1 on validation failure, 2 on numeric abort.
int run_main(const RunConfig& config);

}  // namespace qhd
