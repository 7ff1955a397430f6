#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "wsq/errors.hpp"

namespace wsq {

struct IntegratorStats {
    long long steps = 0;
    long long rejected = 0;
    double tolerance = 0.0;
};

// Dormand-Prince 5(4) embedded pair for complex-vector ODEs y' = f(t, y).
//
// The controller scales the embedded error estimate by 1/h (error per unit
// step), so `tol` bounds the accumulated error per unit time rather than per
// step; global error over a span of length T is then ~ tol * T regardless of
// how many steps the carrier oscillations force.  Output times are hit
// exactly by clamping the step, and the step size never exceeds the caller's
// cap (a fraction of the fastest oscillation period, to rule out aliasing).
class DormandPrince54 {
public:
    using Rhs = std::function<void(double, const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

    DormandPrince54(Rhs rhs, double tol, double max_step)
        : rhs_(std::move(rhs)), tol_(tol), max_step_(max_step) {
        if (!(tol > 0.0) || !(max_step > 0.0))
            throw validation_error("integrator tolerance and step cap must be positive");
    }

    // Advances y in place from t0 through each output time in order
    // (monotone; descending runs integrate backwards), invoking
    // on_sample(t, y) at every output time.
    void integrate(double t0, const std::vector<double>& output_times,
                   Eigen::VectorXcd& y,
                   const std::function<void(double, const Eigen::VectorXcd&)>& on_sample,
                   IntegratorStats& stats) {
        stats.tolerance = tol_;
        double t = t0;
        for (const double tout : output_times) {
            advance(t, tout, y, stats);
            t = tout;
            if (on_sample) on_sample(t, y);
        }
    }

private:
    void advance(double t_begin, double t_end, Eigen::VectorXcd& y,
                 IntegratorStats& stats) {
        const double dir = t_end >= t_begin ? 1.0 : -1.0;
        const double span = std::abs(t_end - t_begin);
        if (span == 0.0) return;
        const double h_floor = 64.0 * std::max(std::abs(t_end), 1.0) * 1e-18;

        const int n = static_cast<int>(y.size());
        Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
        Eigen::VectorXcd ytmp(n), y5(n), yerr(n);

        double t = t_begin;
        if (h_ <= 0.0) h_ = std::min(max_step_, span / 16.0);
        rhs_(t, y, k1);

        while (dir * (t_end - t) > 0.0) {
            double h_eff = std::min(h_, max_step_);
            const double remaining = dir * (t_end - t);
            const bool last = remaining <= h_eff * (1.0 + 1e-12);
            if (last) h_eff = remaining;
            const double hs = dir * h_eff;

            ytmp = y + hs * (a21 * k1);
            rhs_(t + c2 * hs, ytmp, k2);
            ytmp = y + hs * (a31 * k1 + a32 * k2);
            rhs_(t + c3 * hs, ytmp, k3);
            ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs_(t + c4 * hs, ytmp, k4);
            ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs_(t + c5 * hs, ytmp, k5);
            ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs_(t + hs, ytmp, k6);
            y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs_(t + hs, y5, k7);
            yerr = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double scale = std::max(1.0, std::max(y.norm(), y5.norm()));
            const double err = yerr.norm() / (scale * std::max(h_eff, h_floor));

            if (err <= tol_) {
                t = last ? t_end : t + hs;
                y.swap(y5);
                k1.swap(k7); // FSAL
                ++stats.steps;
            } else {
                ++stats.rejected;
            }

            const double ratio = err > 0.0 ? std::pow(tol_ / err, 0.2)
                                           : 5.0;
            h_ = h_eff * std::clamp(0.9 * ratio, 0.2, 5.0);
            if (h_ < h_floor)
                throw integration_failure_error("step size underflow (stiffness?)", t);
        }
    }

    Rhs rhs_;
    double tol_;
    double max_step_;
    double h_ = 0.0; // carried across output segments

    // Dormand-Prince RK5(4)7M tableau
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 5th-order weights minus the embedded 4th-order ones
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
    static constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
    static constexpr double e4 = 125.0 / 192 - 393.0 / 640;
    static constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
    static constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
    static constexpr double e7 = -1.0 / 40;
};

} // namespace wsq
