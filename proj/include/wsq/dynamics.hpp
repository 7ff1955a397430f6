#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "wsq/control.hpp"
#include "wsq/errors.hpp"
#include "wsq/ode.hpp"
#include "wsq/target.hpp"
#include "wsq/welltrap.hpp"

namespace wsq {

using complexd = std::complex<double>;
inline constexpr complexd kImag{0.0, 1.0};

struct TrajectoryRecord {
    std::string model;
    std::vector<double> times;           // monotone, 0..T
    std::vector<SpectralVector> states;  // one per sample, interaction picture
    IntegratorStats stats;

    int samples() const { return static_cast<int>(times.size()); }
    const SpectralVector& front() const { return states.front(); }
    const SpectralVector& back() const { return states.back(); }
};

namespace detail {

inline std::vector<double> sample_times(double horizon, int samples) {
    if (samples < 2) throw validation_error("need at least 2 samples");
    std::vector<double> t(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i)
        t[static_cast<std::size_t>(i)] = horizon * i / (samples - 1);
    t.back() = horizon;
    return t;
}

inline void require_normalized(const SpectralVector& psi) {
    if (std::abs(psi.norm_sq() - 1.0) > 1e-9)
        throw validation_error("initial state is not normalized");
}

// sin(x)/x with the series branch below x = 1e-6
inline double sinc(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-6) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Full carrier-resolved dynamics.  Interaction-picture amplitudes obey
//   i hbar da_j/dt = S(t) e^{+i E_j t/hbar} sum_k d_jk a_k e^{-i E_k t/hbar},
//   S(t) = sum_p V_p cos(omega_1p t),
// integrated with the adaptive embedded pair.  No renormalization is applied;
// norm drift is a measured quantity.
inline TrajectoryRecord propagate_full(const ControlSchedule& s,
                                       const CouplingMatrix& couplings,
                                       const WellSpec& spec,
                                       const SpectralVector& psi0, double tol,
                                       int samples) {
    spec.validate();
    detail::require_normalized(psi0);
    if (!(tol >= 1e-12 && tol <= 1e-4))
        throw validation_error("tolerance must lie in [1e-12, 1e-4]");
    const int n = spec.num_levels;
    if (psi0.levels() != n || couplings.num_levels() < n)
        throw validation_error("dimension mismatch");

    Eigen::VectorXd energies(n);
    for (int j = 1; j <= n; ++j) energies(j - 1) = eigenenergy(spec, j);
    const double hbar = spec.hbar;

    // fastest scale: largest carrier plus largest level spacing in scope
    double max_carrier = 0.0;
    for (const auto& m : s.modes) max_carrier = std::max(max_carrier, m.carrier);
    const double max_gap = (energies(n - 1) - energies(n - 2)) / hbar;
    const double omega_max = max_carrier + max_gap;
    const double max_step = 1.0 / (20.0 * omega_max);

    const Eigen::MatrixXd& d = couplings.matrix();
    Eigen::VectorXcd phase(n), work(n);

    const auto rhs = [&](double t, const Eigen::VectorXcd& a, Eigen::VectorXcd& dadt) {
        for (int j = 0; j < n; ++j)
            phase(j) = std::polar(1.0, -energies(j) * t / hbar);
        double carrier_sum = 0.0;
        for (const auto& m : s.modes)
            carrier_sum += m.amplitude * std::cos(m.carrier * t);
        work.array() = a.array() * phase.array();
        dadt.noalias() = d.topLeftCorner(n, n) * work;
        dadt.array() *= (-kImag / hbar) * carrier_sum * phase.array().conjugate();
    };

    TrajectoryRecord record;
    record.model = "full";
    record.times = detail::sample_times(s.horizon, samples);
    record.states.reserve(record.times.size());

    SpectralVector first = psi0;
    first.time = 0.0;
    first.model = "full";
    record.states.push_back(first);

    Eigen::VectorXcd y = psi0.amplitudes;
    DormandPrince54 stepper(rhs, tol, max_step);
    std::vector<double> interior(record.times.begin() + 1, record.times.end());
    stepper.integrate(0.0, interior, y,
                      [&](double t, const Eigen::VectorXcd& state) {
                          SpectralVector v;
                          v.amplitudes = state;
                          v.time = t;
                          v.model = "full";
                          record.states.push_back(std::move(v));
                      },
                      record.stats);
    return record;
}

// ---------------------------------------------------------------------------
// Rotating-wave dynamics: only resonance-table couplings survive, so the
// generator G (i hbar da/dt = G a) is constant and real symmetric; the
// propagator is its exact exponential evaluated at the sample times.  Which
// resonances participate is the caller's choice through `table` -- pass the
// full table for every secular term of the drive, or its ground_connected()
// restriction for the paper-style ground-coupled system.
inline Eigen::MatrixXd rwa_generator(const ControlSchedule& s,
                                     const CouplingMatrix& couplings,
                                     const ResonanceTable& table,
                                     const WellSpec& spec) {
    const int n = spec.num_levels;
    if (couplings.num_levels() < n || table.num_levels < n)
        throw validation_error("dimension mismatch");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : s.modes) {
        if (m.level > n) continue;
        for (const auto& [k, j] : table.pairs(m.level)) {
            if (k > n || j > n) continue;
            g(j - 1, k - 1) += 0.5 * m.amplitude * couplings(k, j);
        }
    }
    return g;
}

inline TrajectoryRecord propagate_rwa(const ControlSchedule& s,
                                      const CouplingMatrix& couplings,
                                      const ResonanceTable& table,
                                      const WellSpec& spec,
                                      const SpectralVector& psi0, int samples) {
    spec.validate();
    detail::require_normalized(psi0);
    const int n = spec.num_levels;
    if (psi0.levels() != n) throw validation_error("dimension mismatch");

    const Eigen::MatrixXd g = rwa_generator(s, couplings, table, spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    const Eigen::MatrixXd& q = eig.eigenvectors();
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::VectorXcd c0 = q.transpose() * psi0.amplitudes;

    TrajectoryRecord record;
    record.model = "rwa";
    record.times = detail::sample_times(s.horizon, samples);
    record.states.reserve(record.times.size());
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        const double t = record.times[i];
        SpectralVector v;
        if (i == 0) {
            v.amplitudes = psi0.amplitudes;
        } else {
            Eigen::VectorXcd rotated(n);
            for (int m = 0; m < n; ++m)
                rotated(m) = std::polar(1.0, -lambda(m) * t / spec.hbar) * c0(m);
            v.amplitudes = q * rotated;
        }
        v.time = t;
        v.model = "rwa";
        record.states.push_back(std::move(v));
    }
    return record;
}

namespace detail {

// Exact exponential of the arrowhead (bordered) generator
//   i hbar da_1/dt = sum_k b_k a_k,   i hbar da_k/dt = b_k a_1,
// b_k = V_k d_k1 / 2: the motion lives in span{e_1, u}, u = b/|b|, rotating
// at |b|/hbar, with the -i of the generator convention on the cross terms.
inline Eigen::VectorXcd arrowhead_apply(const Eigen::VectorXd& b, double hbar,
                                        double t, const Eigen::VectorXcd& psi) {
    const double bnorm = b.norm();
    if (bnorm == 0.0) return psi;
    const double angle = bnorm * t / hbar;
    const int n = static_cast<int>(psi.size());
    const Eigen::VectorXd u = b / bnorm;

    complexd p1 = psi(0);
    complexd pu = 0.0;
    for (int k = 2; k <= n; ++k) pu += u(k - 2) * psi(k - 1);

    const double cosa = std::cos(angle);
    const double sina = std::sin(angle);
    Eigen::VectorXcd out = psi;
    out(0) += (cosa - 1.0) * p1 - kImag * sina * pu;
    const complexd excited_scale = (cosa - 1.0) * pu - kImag * sina * p1;
    for (int k = 2; k <= n; ++k) out(k - 1) += excited_scale * u(k - 2);
    return out;
}

inline Eigen::VectorXd arrowhead_couplings(const ControlSchedule& s,
                                           const CouplingMatrix& couplings,
                                           int n) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
    for (const auto& m : s.modes) {
        if (m.level > n) continue;
        b(m.level - 2) = 0.5 * m.amplitude * couplings(m.level, 1);
    }
    return b;
}

} // namespace detail

// Ground-coupled (arrowhead) dynamics via its closed-form exponential; exact
// for any initial state, not just the ground state.
inline TrajectoryRecord propagate_reduced(const ControlSchedule& s,
                                          const CouplingMatrix& couplings,
                                          const WellSpec& spec,
                                          const SpectralVector& psi0,
                                          int samples) {
    spec.validate();
    detail::require_normalized(psi0);
    const int n = spec.num_levels;
    if (psi0.levels() != n) throw validation_error("dimension mismatch");
    const Eigen::VectorXd b = detail::arrowhead_couplings(s, couplings, n);

    TrajectoryRecord record;
    record.model = "reduced";
    record.times = detail::sample_times(s.horizon, samples);
    record.states.reserve(record.times.size());
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        SpectralVector v;
        v.amplitudes = i == 0 ? psi0.amplitudes
                              : detail::arrowhead_apply(b, spec.hbar,
                                                        record.times[i],
                                                        psi0.amplitudes);
        v.time = record.times[i];
        v.model = "reduced";
        record.states.push_back(std::move(v));
    }
    return record;
}

// Closed-form amplitudes from the ground state,
//   a_1(t) = cos(R/hbar),  a_j(t) = -i d_j1 theta_j sin(R/hbar)/R,
// theta_k = B_k t, R = (sum theta_k^2 d_k1^2)^(1/2).  The excited components
// carry the -i of the cosine-carrier rotating generator; sin(R)/R switches to
// its series below R = 1e-6.
inline SpectralVector analytic_amplitudes(const ControlSchedule& s,
                                          const CouplingMatrix& couplings,
                                          const WellSpec& spec, double t) {
    if (t < 0.0 || t > s.horizon)
        throw validation_error("time outside the control interval");
    const int n = spec.num_levels;
    const Eigen::VectorXd b = detail::arrowhead_couplings(s, couplings, n);
    const double r_over_hbar = b.norm() * t / spec.hbar; // R(t)/hbar

    SpectralVector v;
    v.time = t;
    v.model = "analytic";
    v.amplitudes = Eigen::VectorXcd::Zero(n);
    v.amplitudes(0) = std::cos(r_over_hbar);
    const double shape = detail::sinc(r_over_hbar) * t / spec.hbar;
    for (int k = 2; k <= n; ++k)
        v.amplitudes(k - 1) = -kImag * b(k - 2) * shape;
    return v;
}

// First Magnus term of the ground-coupled system: a dense matrix exponential
// of the same arrowhead generator, kept as an independent code path against
// the closed form above.  Exact here because the generator is constant, so
// every commutator term vanishes.
inline SpectralVector magnus_first_order(const ControlSchedule& s,
                                         const CouplingMatrix& couplings,
                                         const WellSpec& spec, double t) {
    if (t < 0.0 || t > s.horizon)
        throw validation_error("time outside the control interval");
    const int n = spec.num_levels;
    const Eigen::VectorXd b = detail::arrowhead_couplings(s, couplings, n);

    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 2; k <= n; ++k) {
        z(0, k - 1) = -kImag * b(k - 2) * t / spec.hbar;
        z(k - 1, 0) = -kImag * b(k - 2) * t / spec.hbar;
    }
    const Eigen::MatrixXcd u = z.exp();

    SpectralVector v;
    v.time = t;
    v.model = "magnus";
    v.amplitudes = u.col(0);
    return v;
}

// ---------------------------------------------------------------------------

struct GridWavefunction {
    Eigen::VectorXd positions;  // uniform, 0..L inclusive
    Eigen::VectorXcd values;
    double time = 0.0;

    int size() const { return static_cast<int>(positions.size()); }
    double spacing() const { return positions(1) - positions(0); }

    double trapezoid_norm_sq() const {
        const double h = spacing();
        double acc = 0.0;
        for (int i = 0; i < size(); ++i) {
            const double w = (i == 0 || i == size() - 1) ? 0.5 : 1.0;
            acc += w * std::norm(values(i));
        }
        return acc * h;
    }
};

// Psi(x, t) = sum_j a_j e^{-i E_j t/hbar} psi_j(x): the free-evolution phases
// removed by the interaction picture are reinstated here, at the sample's
// own time stamp.  Boundary values are exactly zero (hard walls).
inline GridWavefunction reconstruct_wavefunction(const SpectralVector& a,
                                                 const WellSpec& spec,
                                                 int grid_size) {
    if (grid_size < 256)
        throw validation_error("grid too coarse (need M >= 256)");
    if (a.levels() != spec.num_levels)
        throw validation_error("dimension mismatch");
    const int n = spec.num_levels;
    const double L = spec.well_width;

    GridWavefunction g;
    g.time = a.time;
    g.positions.resize(grid_size);
    g.values = Eigen::VectorXcd::Zero(grid_size);
    for (int i = 0; i < grid_size; ++i)
        g.positions(i) = L * i / (grid_size - 1);
    g.positions(grid_size - 1) = L;

    Eigen::VectorXcd weights(n);
    for (int j = 1; j <= n; ++j)
        weights(j - 1) = a.a(j) * std::polar(1.0, -eigenenergy(spec, j) * a.time / spec.hbar);

    for (int i = 1; i + 1 < grid_size; ++i) {
        const double x = g.positions(i);
        complexd acc = 0.0;
        for (int j = 1; j <= n; ++j)
            acc += weights(j - 1) * eigenfunction(spec, j, x);
        g.values(i) = acc;
    }
    return g;
}

} // namespace wsq
