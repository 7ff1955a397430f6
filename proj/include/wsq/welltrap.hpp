#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wsq/errors.hpp"
#include "wsq/quadrature.hpp"

namespace wsq {

inline constexpr double kPi = std::numbers::pi;

// Hard-wall box on [0, L].  Internal computations run in units
// hbar = m = L = 1; SI values enter only through the explicit conversion
// helpers (see estimate_si_duration).
struct WellSpec {
    double well_width = 1.0;    // L
    double particle_mass = 1.0; // m
    double hbar = 1.0;
    int num_levels = 2;         // N, basis truncation

    static WellSpec internal_units(int num_levels) {
        WellSpec s;
        s.num_levels = num_levels;
        s.validate();
        return s;
    }

    void validate() const {
        if (!(well_width > 0.0) || !(particle_mass > 0.0) || !(hbar > 0.0))
            throw validation_error("well parameters must be positive");
        if (num_levels < 2)
            throw validation_error("num_levels must be >= 2");
    }
};

// E_j = j^2 pi^2 hbar^2 / (2 m L^2)
inline double eigenenergy(const WellSpec& spec, int j) {
    if (j < 1) throw invalid_level_error(j);
    const double k = j * kPi / spec.well_width;
    return k * k * spec.hbar * spec.hbar / (2.0 * spec.particle_mass);
}

// psi_j(x) = sqrt(2/L) sin(j pi x / L) inside the box, identically zero on
// and beyond the walls.
inline double eigenfunction(const WellSpec& spec, int j, double x) {
    if (j < 1) throw invalid_level_error(j);
    const double L = spec.well_width;
    if (x <= 0.0 || x >= L) return 0.0;
    return std::sqrt(2.0 / L) * std::sin(j * kPi * x / L);
}

// omega_1j = (E_j - E_1)/hbar, the carrier resonant with the 1 <-> j line.
inline double transition_frequency(const WellSpec& spec, int j) {
    if (j < 2) throw invalid_carrier_error(j);
    return (eigenenergy(spec, j) - eigenenergy(spec, 1)) / spec.hbar;
}

// Spatial profile U_in(x) of the control potential.  The sinusoidal family
// sin(beta x)/beta recovers the linear profile (constant force) as beta -> 0.
class InhomogeneityProfile {
public:
    static InhomogeneityProfile linear() {
        InhomogeneityProfile p;
        p.linear_ = true;
        p.label_ = "linear";
        p.fn_ = [](double x) { return x; };
        return p;
    }

    static InhomogeneityProfile sinusoidal(double beta) {
        if (!(beta > 0.0)) throw validation_error("beta must be positive");
        InhomogeneityProfile p;
        p.beta_ = beta;
        p.label_ = "sinusoidal(beta=" + std::to_string(beta) + ")";
        p.fn_ = [beta](double x) { return std::sin(beta * x) / beta; };
        return p;
    }

    static InhomogeneityProfile custom(std::function<double(double)> fn,
                                       std::string label) {
        InhomogeneityProfile p;
        p.label_ = std::move(label);
        p.fn_ = std::move(fn);
        return p;
    }

    double operator()(double x) const { return fn_(x); }
    bool is_linear() const { return linear_; }
    const std::string& label() const { return label_; }

private:
    bool linear_ = false;
    double beta_ = 0.0;
    std::string label_;
    std::function<double(double)> fn_;
};

// Closed form of d_kj = <psi_k| x |psi_j> for the linear profile:
//   d_kj = -8 L k j / (pi^2 (k^2 - j^2)^2)   for k+j odd,
//   d_kj = 0                                  for k+j even, k != j,
//   d_jj = L/2.
// In particular d_k1 vanishes for odd k and equals -8Lk/(pi^2 (k^2-1)^2)
// for even k.
inline double coupling_element_linear(const WellSpec& spec, int k, int j) {
    if (k < 1) throw invalid_level_error(k);
    if (j < 1) throw invalid_level_error(j);
    const double L = spec.well_width;
    if (k == j) return 0.5 * L;
    if ((k + j) % 2 == 0) return 0.0;
    const double diff = static_cast<double>(k) * k - static_cast<double>(j) * j;
    return -8.0 * L * k * j / (kPi * kPi * diff * diff);
}

// Converged Gauss-Legendre quadrature of <psi_k| U_in |psi_j>.  The panel
// count starts at the integrand's oscillation scale and doubles until the
// value is stable to relative 1e-10.
inline double coupling_element_general(const WellSpec& spec, int k, int j,
                                       const InhomogeneityProfile& profile) {
    if (k < 1) throw invalid_level_error(k);
    if (j < 1) throw invalid_level_error(j);
    const double L = spec.well_width;
    const auto integrand = [&](double x) {
        return eigenfunction(spec, k, x) * profile(x) * eigenfunction(spec, j, x);
    };
    const int panels = std::max(8, k + j);
    return integrate_adaptive(integrand, 0.0, L, 1e-10, panels, 1e-13 * L);
}

// Symmetric matrix of coupling elements for levels 1..N, with accessors in
// physics (1-based) indexing.
class CouplingMatrix {
public:
    static CouplingMatrix build(const WellSpec& spec,
                                const InhomogeneityProfile& profile) {
        spec.validate();
        const int n = spec.num_levels;
        CouplingMatrix m;
        m.profile_label_ = profile.label();
        m.d_.resize(n, n);
        for (int k = 1; k <= n; ++k) {
            for (int j = 1; j <= k; ++j) {
                const double v = profile.is_linear()
                                     ? coupling_element_linear(spec, k, j)
                                     : coupling_element_general(spec, k, j, profile);
                m.d_(k - 1, j - 1) = v;
                m.d_(j - 1, k - 1) = v;
            }
        }
        return m;
    }

    double operator()(int k, int j) const { return d_(k - 1, j - 1); }
    int num_levels() const { return static_cast<int>(d_.rows()); }
    const Eigen::MatrixXd& matrix() const { return d_; }
    const std::string& profile_label() const { return profile_label_; }

private:
    Eigen::MatrixXd d_;
    std::string profile_label_;
};

// Exact-resonance structure of the well: the carrier omega_1p matches the
// k <-> j line iff k^2 - j^2 = +-(p^2 - 1), an integer identity.  Detection
// uses integer arithmetic only; the quadratic spectrum makes floating-point
// energy comparison both unnecessary and fragile.
struct ResonanceTable {
    int num_levels = 0;
    // pairs_for[p - 2] lists ordered (k, j), carriers p = 2..N.
    std::vector<std::vector<std::pair<int, int>>> pairs_for;

    const std::vector<std::pair<int, int>>& pairs(int p) const {
        return pairs_for.at(static_cast<std::size_t>(p - 2));
    }

    // Drops every pair that does not involve the ground level.  What remains
    // is exactly the arrowhead coupling structure of the reduced dynamics;
    // the dropped pairs are the accidental spacing degeneracies among
    // excited levels (e.g. E_8 - E_7 = hbar omega_14).
    ResonanceTable ground_connected() const {
        ResonanceTable out;
        out.num_levels = num_levels;
        out.pairs_for.resize(pairs_for.size());
        for (std::size_t i = 0; i < pairs_for.size(); ++i)
            for (const auto& [k, j] : pairs_for[i])
                if (k == 1 || j == 1) out.pairs_for[i].emplace_back(k, j);
        return out;
    }

    std::size_t total_pairs() const {
        std::size_t n = 0;
        for (const auto& v : pairs_for) n += v.size();
        return n;
    }
};

// Brute-force integer scan over all (k, j, p).
inline ResonanceTable build_resonance_table(const WellSpec& spec) {
    spec.validate();
    const int n = spec.num_levels;
    ResonanceTable table;
    table.num_levels = n;
    table.pairs_for.resize(static_cast<std::size_t>(n - 1));
    for (int p = 2; p <= n; ++p) {
        const long long target = static_cast<long long>(p) * p - 1;
        auto& list = table.pairs_for[static_cast<std::size_t>(p - 2)];
        for (int k = 1; k <= n; ++k) {
            for (int j = 1; j <= n; ++j) {
                const long long diff =
                    static_cast<long long>(k) * k - static_cast<long long>(j) * j;
                if (diff == target || diff == -target) list.emplace_back(k, j);
            }
        }
    }
    return table;
}

} // namespace wsq
