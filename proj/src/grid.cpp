#include "qhd/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

namespace qhd {

namespace {
// FFTW's planner is not thread-safe; executing distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

TorusGrid::TorusGrid(int dim_, int n_) : dim(dim_), n(n_) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("TorusGrid: dim must be 1, 2 or 3");
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("TorusGrid: n must be even and >= 4");
}

std::size_t TorusGrid::point_count() const {
    std::size_t p = 1;
    for (int j = 0; j < dim; ++j) p *= static_cast<std::size_t>(n);
    return p;
}

double TorusGrid::cell_volume() const {
    double v = 1.0;
    for (int j = 0; j < dim; ++j) v *= spacing();
    return v;
}

double TorusGrid::wavenumber(int i) const { return 2.0 * M_PI * mode_of(i); }

double TorusGrid::wavenumber_odd(int i) const {
    return i == n / 2 ? 0.0 : wavenumber(i);
}

std::array<int, 3> TorusGrid::decompose(std::size_t idx) const {
    std::array<int, 3> out{0, 0, 0};
    for (int j = 0; j < dim; ++j) {
        out[j] = static_cast<int>(idx % n);
        idx /= n;
    }
    return out;
}

std::size_t TorusGrid::index(int i1, int i2, int i3) const {
    std::size_t idx = static_cast<std::size_t>(i1);
    if (dim > 1) idx += static_cast<std::size_t>(n) * i2;
    if (dim > 2) idx += static_cast<std::size_t>(n) * n * i3;
    return idx;
}

bool all_finite(const ComplexField& u) {
    for (const Complex& z : u.values)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

bool all_finite(const ScalarField& f) {
    for (double v : f.values)
        if (!std::isfinite(v)) return false;
    return true;
}

double integrate(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.cell_volume();
}

double integrate_abs2(const ComplexField& u) {
    double s = 0.0;
    for (const Complex& z : u.values) s += std::norm(z);
    return s * u.grid.cell_volume();
}

double l2_norm(const ComplexField& u) { return std::sqrt(integrate_abs2(u)); }

SpectralWorkspace::SpectralWorkspace(const TorusGrid& grid)
    : grid_(grid), buf_(grid.point_count()) {
    // FFTW is row-major with the last dimension contiguous; axis 1 is our
    // fastest axis, so it goes last.
    int dims[3] = {grid_.n, grid_.n, grid_.n};
    auto* b = reinterpret_cast<fftw_complex*>(buf_.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft(grid_.dim, dims, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft(grid_.dim, dims, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("fftw plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

SpectralWorkspace::SpectralWorkspace(SpectralWorkspace&& other) noexcept
    : grid_(other.grid_),
      plan_fwd_(other.plan_fwd_),
      plan_bwd_(other.plan_bwd_),
      buf_(std::move(other.buf_)),
      k2_(std::move(other.k2_)) {
    other.plan_fwd_ = nullptr;
    other.plan_bwd_ = nullptr;
}

void SpectralWorkspace::forward(const ComplexField& u, std::vector<Complex>& coeffs) {
    if (u.grid != grid_) throw std::invalid_argument("forward: grid mismatch");
    buf_ = u.values;
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    const double scale = 1.0 / static_cast<double>(grid_.point_count());
    coeffs.resize(buf_.size());
    for (std::size_t i = 0; i < buf_.size(); ++i) coeffs[i] = buf_[i] * scale;
}

void SpectralWorkspace::backward(const std::vector<Complex>& coeffs, ComplexField& u) {
    if (coeffs.size() != grid_.point_count())
        throw std::invalid_argument("backward: coefficient count mismatch");
    buf_.assign(coeffs.begin(), coeffs.end());
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    u.grid = grid_;
    u.values = buf_;
}

ComplexField SpectralWorkspace::derivative(const ComplexField& u, int axis) {
    if (axis < 0 || axis >= grid_.dim) throw std::invalid_argument("derivative: bad axis");
    std::vector<Complex> c;
    forward(u, c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto mi = grid_.decompose(i);
        c[i] *= Complex(0.0, grid_.wavenumber_odd(mi[axis]));
    }
    ComplexField out;
    backward(c, out);
    return out;
}

std::vector<ComplexField> SpectralWorkspace::gradient(const ComplexField& u) {
    std::vector<Complex> c;
    forward(u, c);
    std::vector<ComplexField> out;
    out.reserve(grid_.dim);
    std::vector<Complex> cj(c.size());
    for (int axis = 0; axis < grid_.dim; ++axis) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto mi = grid_.decompose(i);
            cj[i] = c[i] * Complex(0.0, grid_.wavenumber_odd(mi[axis]));
        }
        ComplexField g;
        backward(cj, g);
        out.push_back(std::move(g));
    }
    return out;
}

ComplexField SpectralWorkspace::laplacian(const ComplexField& u) {
    std::vector<Complex> c;
    forward(u, c);
    const std::vector<double>& k2 = k_squared();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -k2[i];
    ComplexField out;
    backward(c, out);
    return out;
}

ComplexField SpectralWorkspace::apply_axis_multipliers(
    const ComplexField& u, const std::vector<std::vector<double>>& per_axis) {
    if (static_cast<int>(per_axis.size()) != grid_.dim)
        throw std::invalid_argument("apply_axis_multipliers: need one table per axis");
    for (const auto& t : per_axis)
        if (static_cast<int>(t.size()) != grid_.n)
            throw std::invalid_argument("apply_axis_multipliers: table length must equal n");
    std::vector<Complex> c;
    forward(u, c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto mi = grid_.decompose(i);
        double f = 1.0;
        for (int j = 0; j < grid_.dim; ++j) f *= per_axis[j][mi[j]];
        c[i] *= f;
    }
    ComplexField out;
    backward(c, out);
    return out;
}

const std::vector<double>& SpectralWorkspace::k_squared() {
    if (k2_.empty()) {
        k2_.resize(grid_.point_count());
        for (std::size_t i = 0; i < k2_.size(); ++i) {
            const auto mi = grid_.decompose(i);
            double s = 0.0;
            for (int j = 0; j < grid_.dim; ++j) {
                const double k = grid_.wavenumber(mi[j]);
                s += k * k;
            }
            k2_[i] = s;
        }
    }
    return k2_;
}

ComplexField random_band_limited(const TorusGrid& grid, std::uint64_t seed,
                                 int max_mode, double decay) {
    if (max_mode < 0) throw std::invalid_argument("random_band_limited: max_mode < 0");
    if (3 * max_mode >= grid.n)
        throw std::invalid_argument("random_band_limited: max_mode must satisfy max_mode < n/3");
    std::mt19937_64 rng(seed);
    auto unit_phase = [&rng]() {
        // [0,1) from the top 53 bits; avoids distribution-implementation drift
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return std::polar(1.0, 2.0 * M_PI * u);
    };
    std::vector<Complex> c(grid.point_count(), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto mi = grid.decompose(i);
        double m2 = 0.0;
        bool keep = true;
        for (int j = 0; j < grid.dim; ++j) {
            const int m = grid.mode_of(mi[j]);
            if (std::abs(m) > max_mode) keep = false;
            m2 += static_cast<double>(m) * m;
        }
        if (!keep) continue;
        const double mag = std::pow(1.0 + std::sqrt(m2), -decay);
        c[i] = mag * unit_phase();
    }
    SpectralWorkspace ws(grid);
    ComplexField out;
    ws.backward(c, out);
    return out;
}

}  // namespace qhd
