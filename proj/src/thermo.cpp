#include "qhd/thermo.hpp"

#include <cmath>
#include <stdexcept>

namespace qhd {

void ThermoParams::validate() const {
    if (delta < 0.0 || !std::isfinite(delta))
        throw std::invalid_argument("ThermoParams: delta must be >= 0");
    if (hbar <= 0.0 || !std::isfinite(hbar))
        throw std::invalid_argument("ThermoParams: hbar must be > 0");
}

double f_delta(double rho, double delta) {
    if (rho < 0.0) throw std::invalid_argument("f_delta: rho < 0");
    if (delta < 0.0) throw std::invalid_argument("f_delta: delta < 0");
    const double s = rho + delta;
    return s > 0.0 ? s * std::log(s) : 0.0;
}

double f_delta_prime(double rho, double delta) {
    if (rho < 0.0) throw std::invalid_argument("f_delta_prime: rho < 0");
    if (delta < 0.0) throw std::invalid_argument("f_delta_prime: delta < 0");
    return std::log(rho + delta) + 1.0;
}

double p_delta(double rho, double delta) {
    if (rho < 0.0) throw std::invalid_argument("p_delta: rho < 0");
    if (delta < 0.0) throw std::invalid_argument("p_delta: delta < 0");
    if (delta == 0.0) return rho;  // P_0(rho) = rho, including P_0(0) = 0
    return rho - delta * std::log(rho + delta);
}

double entropy_density(double rho) {
    if (rho < 0.0) throw std::invalid_argument("entropy_density: rho < 0");
    return rho > 0.0 ? rho * std::log(rho) : 0.0;
}

bool entropy_min_check(const ScalarField& rho) {
    double lo = 0.0;
    bool first = true;
    for (double r : rho.values) {
        const double e = entropy_density(r);
        if (first || e < lo) {
            lo = e;
            first = false;
        }
    }
    return !first && lo >= kEntropyFloor - 1e-12;
}

Complex F_delta(Complex z, double delta) {
    return (std::log(std::norm(z) + delta) + 1.0) * z;
}

namespace {
Complex z_log_abs2(Complex z) {
    const double a2 = std::norm(z);
    return a2 > 0.0 ? z * std::log(a2) : Complex(0.0, 0.0);
}
}  // namespace

double haraux_ratio(Complex z1, Complex z2) {
    if (z1 == z2) throw std::invalid_argument("haraux_ratio: z1 == z2");
    const Complex num = (z_log_abs2(z2) - z_log_abs2(z1)) * std::conj(z2 - z1);
    return num.imag() / std::norm(z2 - z1);
}

double lipschitz_ratio(Complex z1, Complex z2, double delta) {
    if (delta <= 0.0) throw std::invalid_argument("lipschitz_ratio: delta must be > 0");
    if (z1 == z2) throw std::invalid_argument("lipschitz_ratio: z1 == z2");
    const double num = std::abs(F_delta(z1, delta) - F_delta(z2, delta));
    return num / ((1.0 + std::abs(std::log(delta))) * std::abs(z1 - z2));
}

}  // namespace qhd
