#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qhd/grid.hpp"
#include "qhd/madelung.hpp"
#include "qhd/nls.hpp"

// File formats.
//
// QHDF field dump: magic "QHDF", u32 version = 1, u32 d, u32 n, f64 time,
// f64 hbar, f64 delta, then n^d complex samples as interleaved little-endian
// f64 (re, im), row-major with axis 1 fastest.
//
// Hydro dump: the same layout per block, preceded by one role tag byte
// (rho=1, sqrt_rho=2, J=3, Lambda=4, grad_sqrt_rho=5, phi=6); real fields
// store im = 0; vector fields write one block per component.
//
// CSV: all floating point at 17 significant digits (f64 round-trip).

namespace qhd {

void write_qhdf(const std::string& path, const ComplexField& field, double time,
                double hbar, double delta);

struct QhdfContents {
    ComplexField field;
    double time = 0.0;
    double hbar = 0.0;
    double delta = 0.0;
};
QhdfContents read_qhdf(const std::string& path);

void write_hydro_qhdf(const std::string& path, const HydroState& hydro, double hbar,
                      double delta);

std::string format_f64(double v);  // 17 significant digits

struct CsvWriter {
    explicit CsvWriter(const std::string& path, const std::vector<std::string>& header);
    ~CsvWriter();
    void row(const std::vector<std::string>& cells);
    void close();

private:
    void* out_;
};

std::uint64_t fnv1a_file(const std::string& path);

struct ManifestEntry {
    std::string path;      // relative to the manifest directory
    std::uint64_t checksum = 0;
};
struct Manifest {
    std::string config_hash;
    std::string tool_version;
    double wall_seconds = 0.0;
    int exit_status = 0;
    std::string note;  // e.g. blow-up step index
    std::vector<ManifestEntry> entries;
};
void write_manifest(const std::string& path, const Manifest& m);

inline constexpr const char* kToolVersion = "qhdsim 1.0.0";

}  // namespace qhd
