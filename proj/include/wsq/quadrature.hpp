#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "wsq/errors.hpp"

namespace wsq {

// Panel-composite Gauss-Legendre quadrature.  Deterministic: fixed 16-point
// rule per panel, panel count doubled until two successive refinements agree
// to the requested relative tolerance.

namespace detail {

// Abscissas/weights for 16-point Gauss-Legendre on [-1, 1] (positive half;
// the rule is symmetric).
constexpr std::array<double, 8> kGl16Nodes = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kGl16Weights = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

} // namespace detail

template <class F>
double gauss_legendre_panels(F&& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        const double half = 0.5 * h;
        double acc = 0.0;
        for (std::size_t i = 0; i < detail::kGl16Nodes.size(); ++i) {
            const double dx = half * detail::kGl16Nodes[i];
            const double fa = f(mid - dx);
            const double fb = f(mid + dx);
            if (!std::isfinite(fa) || !std::isfinite(fb))
                throw evaluation_error("non-finite integrand value");
            acc += detail::kGl16Weights[i] * (fa + fb);
        }
        total += half * acc;
    }
    return total;
}

// Doubles the panel count until two refinements agree to
// max(rel_tol * |I|, abs_tol).  The absolute term keeps integrals that vanish
// by symmetry from chasing roundoff forever.  `initial_panels` should resolve
// the integrand's fastest oscillation; convergence is still verified by the
// doubling check.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10,
                          int initial_panels = 8, double abs_tol = 1e-14) {
    int panels = initial_panels < 1 ? 1 : initial_panels;
    double prev = gauss_legendre_panels(f, a, b, panels);
    for (int iter = 0; iter < 24; ++iter) {
        panels *= 2;
        const double cur = gauss_legendre_panels(f, a, b, panels);
        if (std::abs(cur - prev) <= std::max(rel_tol * std::abs(cur), abs_tol))
            return cur;
        prev = cur;
    }
    throw numerical_error("quadrature failed to converge");
}

} // namespace wsq
