#include "qhd/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qhd {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_block(std::ofstream& out, const ComplexField& field, double time, double hbar,
                 double delta) {
    out.write("QHDF", 4);
    put_u32(out, 1u);
    put_u32(out, static_cast<std::uint32_t>(field.grid.dim));
    put_u32(out, static_cast<std::uint32_t>(field.grid.n));
    put_f64(out, time);
    put_f64(out, hbar);
    put_f64(out, delta);
    for (const Complex& z : field.values) {
        put_f64(out, z.real());
        put_f64(out, z.imag());
    }
}

}  // namespace

void write_qhdf(const std::string& path, const ComplexField& field, double time,
                double hbar, double delta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_qhdf: cannot open " + path);
    write_block(out, field, time, hbar, delta);
    if (!out) throw std::runtime_error("write_qhdf: write failed for " + path);
}

QhdfContents read_qhdf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_qhdf: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "QHDF", 4) != 0)
        throw std::runtime_error("read_qhdf: bad magic in " + path);
    const std::uint32_t version = get_u32(in);
    if (version != 1u) throw std::runtime_error("read_qhdf: unsupported version");
    const std::uint32_t d = get_u32(in);
    const std::uint32_t n = get_u32(in);
    QhdfContents c;
    c.time = get_f64(in);
    c.hbar = get_f64(in);
    c.delta = get_f64(in);
    c.field = ComplexField(TorusGrid(static_cast<int>(d), static_cast<int>(n)));
    for (Complex& z : c.field.values) {
        const double re = get_f64(in);
        const double im = get_f64(in);
        z = Complex(re, im);
    }
    if (!in) throw std::runtime_error("read_qhdf: truncated file " + path);
    return c;
}

void write_hydro_qhdf(const std::string& path, const HydroState& hydro, double hbar,
                      double delta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_hydro_qhdf: cannot open " + path);
    const TorusGrid& grid = hydro.rho.grid;
    auto real_block = [&](unsigned char tag, const std::vector<double>& vals) {
        out.put(static_cast<char>(tag));
        ComplexField f(grid);
        for (std::size_t i = 0; i < vals.size(); ++i) f.values[i] = vals[i];
        write_block(out, f, hydro.time, hbar, delta);
    };
    real_block(1, hydro.rho.values);
    real_block(2, hydro.sqrt_rho.values);
    for (int j = 0; j < grid.dim; ++j) real_block(3, hydro.current.comps[j]);
    for (int j = 0; j < grid.dim; ++j) real_block(4, hydro.momentum.comps[j]);
    for (int j = 0; j < grid.dim; ++j) real_block(5, hydro.grad_sqrt_rho.comps[j]);
    out.put(static_cast<char>(6));
    write_block(out, hydro.polar, hydro.time, hbar, delta);
    if (!out) throw std::runtime_error("write_hydro_qhdf: write failed for " + path);
}

std::string format_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) {
    auto* f = new std::ofstream(path);
    if (!*f) {
        delete f;
        throw std::runtime_error("CsvWriter: cannot open " + path);
    }
    out_ = f;
    row(header);
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::row(const std::vector<std::string>& cells) {
    auto* f = static_cast<std::ofstream*>(out_);
    if (!f) throw std::runtime_error("CsvWriter: closed");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) *f << ',';
        *f << cells[i];
    }
    *f << '\n';
}

void CsvWriter::close() {
    auto* f = static_cast<std::ofstream*>(out_);
    if (f) {
        f->close();
        delete f;
        out_ = nullptr;
    }
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a_file: cannot open " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    out << "tool = " << m.tool_version << "\n";
    out << "config_hash = " << m.config_hash << "\n";
    out << "wall_seconds = " << format_f64(m.wall_seconds) << "\n";
    out << "exit_status = " << m.exit_status << "\n";
    if (!m.note.empty()) out << "note = " << m.note << "\n";
    for (const ManifestEntry& e : m.entries) {
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016" PRIx64, e.checksum);
        out << "file = " << e.path << " fnv1a:" << hex << "\n";
    }
}

}  // namespace qhd
