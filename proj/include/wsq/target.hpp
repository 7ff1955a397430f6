#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "wsq/errors.hpp"
#include "wsq/quadrature.hpp"
#include "wsq/welltrap.hpp"

namespace wsq {

// Antisymmetric squeezed target packet
//   Psi_T(x) = B (x - x0) exp(-(x - x0)^2 / sigma^2),
// the first excited state of a harmonic well in shape.  Antisymmetry about
// x0 is what a constant-force (long-wavelength) control can reach from the
// symmetric ground state; among packets of that symmetry and width it
// minimizes the kinetic energy (E_kin = 3 hbar^2 / (2 m sigma^2)).
struct TargetSpec {
    double width = 0.0;  // sigma
    double center = 0.0; // x0

    void validate(const WellSpec& spec) const {
        if (!(width > 0.0)) throw invalid_target_error("target width must be positive");
        const double L = spec.well_width;
        if (!(width < L)) throw invalid_target_error("target width must be below L");
        if (!(center > 0.0 && center < L))
            throw invalid_target_error("target center must lie inside the well");
    }

    // Support is effectively inside the well when x0 +- 5 sigma stays off the
    // walls; callers may warn otherwise (the tails then feel the hard walls).
    bool support_inside_well(const WellSpec& spec) const {
        return center - 5.0 * width > 0.0 &&
               center + 5.0 * width < spec.well_width;
    }
};

// Normalization constant B from converged quadrature of the density over
// [0, L].  (For sigma <= L/20 this coincides with the closed-form
// infinite-interval value (sqrt(pi) sigma^3 / (4 sqrt 2))^(-1/2) to ~1e-10.)
inline double target_normalization(const TargetSpec& t, const WellSpec& spec) {
    t.validate(spec);
    const auto density = [&](double x) {
        const double u = x - t.center;
        const double g = u * std::exp(-u * u / (t.width * t.width));
        return g * g;
    };
    const double L = spec.well_width;
    const int panels = std::max<int>(16, static_cast<int>(4.0 * L / t.width));
    const double norm2 = integrate_adaptive(density, 0.0, L, 1e-12, panels, 1e-30);
    return 1.0 / std::sqrt(norm2);
}

inline double target_wavefunction(const TargetSpec& t, const WellSpec& spec,
                                  double x) {
    const double B = target_normalization(t, spec);
    const double u = x - t.center;
    return B * u * std::exp(-u * u / (t.width * t.width));
}

// Complex amplitudes over the well eigenbasis at one instant, in the
// interaction picture (free-evolution phases removed; they are reinstated at
// reconstruction).
struct SpectralVector {
    Eigen::VectorXcd amplitudes; // a_1..a_N, amplitudes(j-1)
    double time = 0.0;
    std::string model;

    int levels() const { return static_cast<int>(amplitudes.size()); }
    std::complex<double> a(int j) const { return amplitudes(j - 1); }
    double norm_sq() const { return amplitudes.squaredNorm(); }

    double excited_norm() const { // s = (sum_{j>=2} |a_j|^2)^(1/2)
        return std::sqrt(std::max(0.0, norm_sq() - std::norm(amplitudes(0))));
    }
};

inline SpectralVector ground_state(const WellSpec& spec) {
    SpectralVector v;
    v.amplitudes = Eigen::VectorXcd::Zero(spec.num_levels);
    v.amplitudes(0) = 1.0;
    return v;
}

// a_j^T = int_0^L psi_j Psi_T dx, by converged quadrature (ground truth; the
// Gaussian/erf closed form below is the cross-check).  All values are real.
inline SpectralVector target_coefficients(const TargetSpec& t, const WellSpec& spec) {
    t.validate(spec);
    const double B = target_normalization(t, spec);
    const double L = spec.well_width;
    SpectralVector out;
    out.amplitudes = Eigen::VectorXcd::Zero(spec.num_levels);
    for (int j = 1; j <= spec.num_levels; ++j) {
        const auto integrand = [&](double x) {
            const double u = x - t.center;
            return eigenfunction(spec, j, x) * B * u *
                   std::exp(-u * u / (t.width * t.width));
        };
        const int panels =
            std::max<int>({16, 2 * j, static_cast<int>(4.0 * L / t.width)});
        out.amplitudes(j - 1) =
            integrate_adaptive(integrand, 0.0, L, 1e-11, panels, 1e-15);
    }
    if (out.norm_sq() > 1.0 + 1e-9)
        throw numerical_error("target coefficient norm exceeds 1");
    return out;
}

// Infinite-interval closed form of the same projection,
//   a_j ~= sqrt(2/L) B cos(j pi x0 / L) (sqrt(pi) sigma^3 k / 2) e^(-k^2 sigma^2 / 4),
// k = j pi / L, with B from the erf-exact normalization over [0, L].
// Wall-truncation corrections are below 1e-10 for sigma <= L/20.
inline double target_coefficient_closed_form(const TargetSpec& t,
                                             const WellSpec& spec, int j) {
    if (j < 1) throw invalid_level_error(j);
    t.validate(spec);
    const double L = spec.well_width;
    const double sigma = t.width;
    const double b = 2.0 / (sigma * sigma);
    // int u^2 e^{-b u^2} du over [-x0, L-x0] in terms of erf
    const auto moment = [&](double u) {
        return -u * std::exp(-b * u * u) / (2.0 * b) +
               std::sqrt(kPi) / (4.0 * std::pow(b, 1.5)) * std::erf(std::sqrt(b) * u);
    };
    const double norm2 = moment(L - t.center) - moment(-t.center);
    const double B = 1.0 / std::sqrt(norm2);
    const double k = j * kPi / L;
    return std::sqrt(2.0 / L) * B * std::cos(j * kPi * t.center / L) *
           (std::sqrt(kPi) * sigma * sigma * sigma * k / 2.0) *
           std::exp(-k * k * sigma * sigma / 4.0);
}

// Smallest N whose spectral residual sum_{j>N} |a_j^T|^2, estimated by
// extending the coefficient computation to 4N levels, falls below c_const.
inline int choose_truncation(const TargetSpec& t, const WellSpec& spec,
                             double c_const, int n_max = 512) {
    if (!(c_const > 0.0 && c_const < 1.0))
        throw validation_error("c_const must lie in (0, 1)");
    t.validate(spec);
    WellSpec probe = spec;
    probe.num_levels = 8;
    Eigen::VectorXcd coeffs;
    const auto extend_to = [&](int levels) {
        if (coeffs.size() >= levels) return;
        // grow geometrically so the quadrature pass reruns O(log) times
        probe.num_levels = std::max<int>(levels, 2 * static_cast<int>(coeffs.size()));
        coeffs = target_coefficients(t, probe).amplitudes;
    };
    extend_to(8);
    for (int n = 2; n <= n_max; ++n) {
        extend_to(4 * n);
        double residual = 0.0;
        for (int j = n + 1; j <= 4 * n; ++j) residual += std::norm(coeffs(j - 1));
        if (residual < c_const) return n;
    }
    throw truncation_failure_error("spectral residual does not reach " +
                                   std::to_string(c_const) + " below N = " +
                                   std::to_string(n_max));
}

} // namespace wsq
