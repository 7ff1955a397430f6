#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "wsq/dynamics.hpp"
#include "wsq/errors.hpp"
#include "wsq/target.hpp"

namespace wsq {

// sigma^2 = <x^2> - <x>^2 by trapezoidal quadrature on the grid.  Converged
// to relative 1e-6 at M = 2048 for packets wider than ~L/100.
inline double dispersion(const GridWavefunction& psi) {
    const double norm = psi.trapezoid_norm_sq();
    if (std::abs(norm - 1.0) > 1e-6)
        throw normalization_error("dispersion needs a normalized wavefunction");
    const double h = psi.spacing();
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < psi.size(); ++i) {
        const double w = (i == 0 || i == psi.size() - 1) ? 0.5 : 1.0;
        const double dens = std::norm(psi.values(i));
        const double x = psi.positions(i);
        m1 += w * dens * x;
        m2 += w * dens * x * x;
    }
    m1 *= h / norm;
    m2 *= h / norm;
    const double var = m2 - m1 * m1;
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

// |<a|b>|^2; equals the physical overlap at a common time stamp since the
// dynamical phases cancel pairwise.
inline double fidelity(const SpectralVector& a, const SpectralVector& b) {
    if (a.levels() != b.levels())
        throw validation_error("fidelity: dimension mismatch");
    const complexd overlap = a.amplitudes.dot(b.amplitudes); // conjugates a
    return std::norm(overlap);
}

// Per-time and maximum absolute amplitude deviation between two trajectories
// on the same sample grid, plus the restriction to a time window.
struct DeviationReport {
    std::vector<double> per_time;   // max_j |a_j^(1)(t) - a_j^(2)(t)|
    double max_deviation = 0.0;     // over all samples
    double max_in_window = 0.0;     // over samples with t in [begin, end)
    double at_window_edge = 0.0;    // last sample inside the window
    double window_begin = 0.0;
    double window_end = 0.0;
};

inline DeviationReport compare_models(const TrajectoryRecord& t1,
                                      const TrajectoryRecord& t2,
                                      double window_begin, double window_end) {
    if (t1.times.size() != t2.times.size())
        throw validation_error("compare_models: mismatched sampling");
    for (std::size_t i = 0; i < t1.times.size(); ++i)
        if (std::abs(t1.times[i] - t2.times[i]) >
            1e-12 * std::max(1.0, std::abs(t1.times[i])))
            throw validation_error("compare_models: mismatched sampling");

    DeviationReport report;
    report.window_begin = window_begin;
    report.window_end = window_end;
    report.per_time.reserve(t1.times.size());
    for (std::size_t i = 0; i < t1.times.size(); ++i) {
        const double dev = (t1.states[i].amplitudes - t2.states[i].amplitudes)
                               .cwiseAbs()
                               .maxCoeff();
        report.per_time.push_back(dev);
        report.max_deviation = std::max(report.max_deviation, dev);
        const double t = t1.times[i];
        if (t >= window_begin && t < window_end) {
            report.max_in_window = std::max(report.max_in_window, dev);
            report.at_window_edge = dev;
        }
    }
    return report;
}

// Indices i where sigma(t_{i+1}) > sigma(t_i) * (1 + ripple_tol): empty means
// the series is monotone non-increasing within the ripple band.
inline std::vector<int> monotonicity_report(const std::vector<double>& widths,
                                            double ripple_tol) {
    if (widths.size() < 2)
        throw validation_error("monotonicity needs at least two samples");
    std::vector<int> violations;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        if (widths[i + 1] > widths[i] * (1.0 + ripple_tol))
            violations.push_back(static_cast<int>(i));
    return violations;
}

// Same flag for a series that should be non-decreasing (peak heights).
inline std::vector<int> monotone_increase_report(const std::vector<double>& series,
                                                 double ripple_tol) {
    if (series.size() < 2)
        throw validation_error("monotonicity needs at least two samples");
    std::vector<int> violations;
    for (std::size_t i = 0; i + 1 < series.size(); ++i)
        if (series[i + 1] < series[i] / (1.0 + ripple_tol))
            violations.push_back(static_cast<int>(i));
    return violations;
}

// Ground-dominance validity window t in [0, T - 2T sqrt(sigma/L)/pi).
struct TimeInterval {
    double begin = 0.0;
    double end = 0.0;
    bool degenerate() const { return !(end > begin); }
};

inline TimeInterval validity_window(double sigma, double L, double T) {
    if (!(sigma > 0.0 && sigma < L) || !(T > 0.0))
        throw validation_error("validity_window: need 0 < sigma < L and T > 0");
    TimeInterval w;
    w.begin = 0.0;
    w.end = T * (1.0 - 2.0 * std::sqrt(sigma / L) / kPi);
    if (w.end < 0.0) w.end = 0.0;
    return w;
}

// <p^2/2m> of the target packet by quadrature of |dPsi_T/dx|^2; scales as
// sigma^{-2} (the closed form is 3 hbar^2 / (2 m sigma^2) away from walls).
inline double kinetic_energy(const TargetSpec& t, const WellSpec& spec) {
    t.validate(spec);
    const double B = target_normalization(t, spec);
    const double sig2 = t.width * t.width;
    const auto d_psi = [&](double x) {
        const double u = x - t.center;
        return B * (1.0 - 2.0 * u * u / sig2) * std::exp(-u * u / sig2);
    };
    const int panels = std::max<int>(16, static_cast<int>(8.0 * spec.well_width / t.width));
    const double grad2 = integrate_adaptive(
        [&](double x) { const double g = d_psi(x); return g * g; }, 0.0,
        spec.well_width, 1e-11, panels, 1e-20);
    return spec.hbar * spec.hbar / (2.0 * spec.particle_mass) * grad2;
}

} // namespace wsq
