#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

// Uniform periodic grids on the unit torus T^d = (R/Z)^d with spectral
// differentiation. Storage is row-major with axis 1 fastest:
//   idx = i1 + n*(i2 + n*i3).

namespace qhd {

using Complex = std::complex<double>;

struct TorusGrid {
    int dim = 0;   // 1, 2 or 3
    int n = 0;     // points per axis, even, >= 4

    TorusGrid() = default;
    TorusGrid(int dim_, int n_);

    double spacing() const { return 1.0 / n; }
    std::size_t point_count() const;
    double cell_volume() const;

    // Integer frequency of axis index i: i for i < n/2, i - n otherwise.
    // The Nyquist frequency -n/2 appears once per axis.
    int mode_of(int axis_index) const { return axis_index < n / 2 ? axis_index : axis_index - n; }
    double wavenumber(int axis_index) const;       // 2*pi*m
    double wavenumber_odd(int axis_index) const;   // 2*pi*m, Nyquist entry zeroed

    std::array<int, 3> decompose(std::size_t idx) const;
    std::size_t index(int i1, int i2 = 0, int i3 = 0) const;

    bool operator==(const TorusGrid&) const = default;
};

struct ComplexField {
    TorusGrid grid;
    std::vector<Complex> values;

    ComplexField() = default;
    explicit ComplexField(const TorusGrid& g, Complex fill = {0.0, 0.0})
        : grid(g), values(g.point_count(), fill) {}
};

struct ScalarField {
    TorusGrid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g, double fill = 0.0)
        : grid(g), values(g.point_count(), fill) {}
};

// Exactly grid.dim components, each sampled like a ScalarField.
struct VectorField {
    TorusGrid grid;
    std::vector<std::vector<double>> comps;

    VectorField() = default;
    explicit VectorField(const TorusGrid& g)
        : grid(g), comps(g.dim, std::vector<double>(g.point_count(), 0.0)) {}
};

bool all_finite(const ComplexField& u);
bool all_finite(const ScalarField& f);

// Discrete integral h^d * sum; exact for band-limited integrands on the grid.
double integrate(const ScalarField& f);
double integrate_abs2(const ComplexField& u);
double l2_norm(const ComplexField& u);

// FFT workspace bound to one grid. Owns its FFTW plans and buffer; create one
// per worker thread (plan creation is serialized internally, execution is not).
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const TorusGrid& grid);
    ~SpectralWorkspace();
    SpectralWorkspace(SpectralWorkspace&&) noexcept;
    SpectralWorkspace& operator=(SpectralWorkspace&&) = delete;
    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const TorusGrid& grid() const { return grid_; }

    // Coefficients c_m of u(x) = sum_m c_m e^{+i 2pi m.x}.
    void forward(const ComplexField& u, std::vector<Complex>& coeffs);
    void backward(const std::vector<Complex>& coeffs, ComplexField& u);

    // Spectral d/dx_axis with zeroed Nyquist mode (skew-adjoint discretely).
    ComplexField derivative(const ComplexField& u, int axis);
    std::vector<ComplexField> gradient(const ComplexField& u);
    ComplexField laplacian(const ComplexField& u);

    // Multiply coefficient (m1,...,md) by prod_j per_axis[j][i_j].
    ComplexField apply_axis_multipliers(const ComplexField& u,
                                        const std::vector<std::vector<double>>& per_axis);

    // |k|^2 per linear index (full table, Nyquist included).
    const std::vector<double>& k_squared();

private:
    TorusGrid grid_;
    void* plan_fwd_ = nullptr;
    void* plan_bwd_ = nullptr;
    std::vector<Complex> buf_;
    std::vector<double> k2_;
};

// Deterministic band-limited field: coefficient magnitude (1+|m|_2)^(-decay),
// phase drawn from a seeded generator; modes with max_j |m_j| > max_mode zero.
ComplexField random_band_limited(const TorusGrid& grid, std::uint64_t seed,
                                 int max_mode, double decay);

}  // namespace qhd
