#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "wsq/errors.hpp"
#include "wsq/target.hpp"
#include "wsq/welltrap.hpp"

namespace wsq {

// One resonant component of the control field: envelope V_k(t) = V_k
// (constant on [0, T], hard-switched at both ends) riding the carrier
// cos(omega_1k t).  theta_k(t) = (1/2) int_0^t V_k = B_k t.
struct ControlMode {
    int level = 0;              // k
    double envelope_slope = 0;  // B_k   (force units: energy/length)
    double amplitude = 0;       // V_k = 2 B_k
    double carrier = 0;         // omega_1k
};

struct ControlSchedule {
    double horizon = 0.0; // T
    std::vector<ControlMode> modes;
    std::string profile_label = "linear";

    const ControlMode* find(int level) const {
        for (const auto& m : modes)
            if (m.level == level) return &m;
        return nullptr;
    }
};

// Optimal constant envelopes under the field-energy constraint:
//   B_k = hbar pi a_k^T / (2 d_k1 T),  k = 2..N with d_k1 != 0.
// Signs ride on a_k^T / d_k1.  Modes the profile cannot drive (d_k1 = 0)
// must carry no target weight; a mismatch means the target symmetry is
// wrong for this profile.
inline ControlSchedule synthesize(const SpectralVector& target,
                                  const CouplingMatrix& couplings,
                                  const WellSpec& spec, double horizon) {
    if (!(horizon > 0.0))
        throw validation_error("control horizon must be positive");
    const int n = std::min(target.levels(), couplings.num_levels());
    ControlSchedule schedule;
    schedule.horizon = horizon;
    schedule.profile_label = couplings.profile_label();
    for (int k = 2; k <= n; ++k) {
        const double d = couplings(k, 1);
        const double a = target.a(k).real();
        if (d == 0.0) {
            if (std::abs(target.a(k)) >= 1e-10)
                throw symmetry_violation_error(
                    "target has weight on level " + std::to_string(k) +
                    " which the profile cannot drive (d_k1 = 0)");
            continue;
        }
        if (a == 0.0) continue;
        ControlMode m;
        m.level = k;
        m.envelope_slope = spec.hbar * kPi * a / (2.0 * d * horizon);
        m.amplitude = 2.0 * m.envelope_slope;
        m.carrier = transition_frequency(spec, k);
        schedule.modes.push_back(m);
    }
    return schedule;
}

// Instantaneous control potential U_c(x, t) = U_in(x) sum_k V_k cos(omega_1k t),
// zero outside [0, T].
inline double field_value(const ControlSchedule& s,
                          const InhomogeneityProfile& profile, double x,
                          double t) {
    if (t < 0.0 || t > s.horizon) return 0.0;
    double carrier_sum = 0.0;
    for (const auto& m : s.modes)
        carrier_sum += m.amplitude * std::cos(m.carrier * t);
    return profile(x) * carrier_sum;
}

// Field-energy measure sum_k B_k^2 T.  This is the convention the synthesis
// solves with; the envelope form sum_k V_k^2 T is exactly 4x larger and is
// reported alongside it in diagnostics.
inline double total_energy(const ControlSchedule& s) {
    double acc = 0.0;
    for (const auto& m : s.modes) acc += m.envelope_slope * m.envelope_slope;
    return acc * s.horizon;
}

inline double total_energy_envelope(const ControlSchedule& s) {
    return 4.0 * total_energy(s);
}

// Since B_k ~ 1/T, sum B_k^2 T = (1/T) sum (hbar pi a_k^T / (2 d_k1))^2;
// inverting gives the horizon that spends exactly e_tot.
inline double duration_from_energy(const SpectralVector& target,
                                   const CouplingMatrix& couplings,
                                   const WellSpec& spec, double e_tot) {
    if (!(e_tot > 0.0)) throw validation_error("field energy must be positive");
    const int n = std::min(target.levels(), couplings.num_levels());
    double acc = 0.0;
    for (int k = 2; k <= n; ++k) {
        const double d = couplings(k, 1);
        const double a = target.a(k).real();
        if (d == 0.0 || a == 0.0) continue;
        const double w = spec.hbar * kPi * a / (2.0 * d);
        acc += w * w;
    }
    if (acc == 0.0)
        throw validation_error("target drives no mode; duration undefined");
    return acc / e_tot;
}

// Residuals of the terminal algebraic system
//   d_j1 B_j T sin(R(T)/hbar)/R(T) = a_j^T,  R(T) = T (sum_k B_k^2 d_k1^2)^(1/2),
// one entry per level j = 2..N.  With the synthesized envelopes this reduces
// to |a_j^T| |sin(pi s/2)/s - 1| where s is the truncated target norm; the
// residuals vanish only as s -> 1, which makes the truncation error visible.
inline Eigen::VectorXd check_boundary_condition(const ControlSchedule& s,
                                                const SpectralVector& target,
                                                const CouplingMatrix& couplings,
                                                const WellSpec& spec) {
    const int n = std::min(target.levels(), couplings.num_levels());
    bool target_empty = true;
    for (int k = 2; k <= n; ++k)
        if (std::abs(target.a(k)) > 0.0) target_empty = false;
    if (s.modes.empty() && target_empty) return Eigen::VectorXd();

    double r2 = 0.0;
    for (const auto& m : s.modes) {
        const double bd = m.envelope_slope * couplings(m.level, 1);
        r2 += bd * bd;
    }
    const double x = s.horizon * std::sqrt(r2) / spec.hbar; // R(T)/hbar
    const double sinc = x < 1e-6 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    Eigen::VectorXd residual(n - 1);
    for (int j = 2; j <= n; ++j) {
        const ControlMode* m = s.find(j);
        const double bj = m ? m->envelope_slope : 0.0;
        const double reached = couplings(j, 1) * bj * s.horizon / spec.hbar * sinc;
        residual(j - 2) = std::abs(reached - target.a(j).real());
    }
    return residual;
}

// Terminal mismatch plus energy penalty,
//   sum_j |a_j(T) - a_j^T|^2 + lambda sum_k V_k^2 T.
// Diagnostic only; the synthesis never uses lambda.
inline double cost_functional(const SpectralVector& final_state,
                              const SpectralVector& target,
                              const ControlSchedule& s, double lambda) {
    if (final_state.levels() != target.levels())
        throw validation_error("cost_functional: dimension mismatch");
    const double mismatch =
        (final_state.amplitudes - target.amplitudes).squaredNorm();
    return mismatch + lambda * total_energy_envelope(s);
}

struct AdiabaticityReport {
    // |V| >> T^2 |dV/dt|^2 : for hard-switched constant envelopes the
    // interior derivative vanishes, so the criterion holds by construction.
    bool envelope_criterion_by_construction = true;
    double max_interior_envelope_derivative = 0.0;
    // r = max_k |V_k d_k1| / (hbar * smallest gap between distinct carriers);
    // r << 1 is the weak-coupling regime the rotating-wave step needs.
    double rwa_scale_ratio = 0.0;
    double min_carrier_gap = 0.0;
    bool weak_coupling = false;
};

inline AdiabaticityReport adiabaticity_check(const ControlSchedule& s,
                                             const CouplingMatrix& couplings,
                                             const WellSpec& spec,
                                             int sampling = 64) {
    (void)sampling; // the envelopes are constants; any interior resolution
                    // sees a vanishing derivative
    AdiabaticityReport report;
    if (s.modes.empty()) return report;
    report.max_interior_envelope_derivative = 0.0;
    report.envelope_criterion_by_construction = true;

    double max_coupling = 0.0;
    std::vector<double> carriers;
    for (const auto& m : s.modes) {
        max_coupling = std::max(
            max_coupling, std::abs(m.amplitude * couplings(m.level, 1)));
        carriers.push_back(m.carrier);
    }
    std::sort(carriers.begin(), carriers.end());
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < carriers.size(); ++i)
        min_gap = std::min(min_gap, carriers[i] - carriers[i - 1]);
    // single carrier: the carrier frequency itself is the separation scale
    if (carriers.size() < 2) min_gap = carriers[0];
    report.min_carrier_gap = min_gap;
    report.rwa_scale_ratio = max_coupling / (spec.hbar * min_gap);
    report.weak_coupling = report.rwa_scale_ratio < 0.1;
    return report;
}

// SI worked-example helper: the duration for which the strongest-driven
// mode's envelope saturates the available force q E_field,
//   T = pi hbar |a_mode^T| / (q E_field |d_1,mode|).
// Couplings scale linearly with the well width, so the internal (L = 1)
// element converts by multiplying with length_m.
inline double estimate_si_duration(double field_v_per_m, double charge_coulomb,
                                   double length_m,
                                   const SpectralVector& target,
                                   const CouplingMatrix& couplings, int mode) {
    if (!(field_v_per_m > 0.0) || !(charge_coulomb > 0.0) || !(length_m > 0.0))
        throw validation_error("SI inputs must be positive");
    if (mode < 2 || mode > couplings.num_levels() || mode > target.levels())
        throw invalid_mode_error("mode outside basis");
    const double d_internal = couplings(mode, 1);
    const double a = target.a(mode).real();
    if (d_internal == 0.0 || a == 0.0)
        throw invalid_mode_error("mode " + std::to_string(mode) +
                                 " has no drivable weight");
    constexpr double kHbarSi = 1.054571817e-34; // J s
    const double force = charge_coulomb * field_v_per_m;
    return kPi * kHbarSi * std::abs(a) / (force * std::abs(d_internal) * length_m);
}

} // namespace wsq
