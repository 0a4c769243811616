#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "alflow/errors.hpp"

namespace alflow {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0; // 0 = choose automatically
    double max_step = std::numeric_limits<double>::infinity();
};

// Output grid: multiples of dt_out below t_end, then t_end itself.
inline std::vector<double> sample_times(double t_end, double dt_out) {
    if (t_end < 0.0) throw std::invalid_argument("t_end must be >= 0");
    if (!(dt_out > 0.0)) throw std::invalid_argument("dt_out must be > 0");
    std::vector<double> ts;
    for (double k = 0.0;; k += 1.0) {
        const double t = k * dt_out;
        if (t >= t_end - 1e-12 * std::max(1.0, t_end)) break;
        ts.push_back(t);
    }
    ts.push_back(t_end);
    return ts;
}

// Embedded Dormand-Prince 5(4) step with PI ("Lund") step-size control,
// following the classic DOPRI5 controller constants. `post` runs after every
// accepted step and may adjust y (e.g. project back onto a constraint
// manifold); the first stage is re-evaluated afterwards, so no FSAL reuse.
//
// Integrates from t to t1 (forward only) and returns the step-size proposal
// to seed the next segment.
template <class Rhs, class Post>
double integrate_to(Rhs&& f, double& t, std::vector<double>& y, double t1,
                    const OdeOptions& opt, Post&& post) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    if (t1 < t) throw std::invalid_argument("integrate_to: t1 must be >= t");
    if (!(opt.rtol > 0.0) || !(opt.atol >= 0.0))
        throw std::invalid_argument("integrate_to: bad tolerances");

    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

    f(t, y, k1);

    double h = opt.initial_step;
    if (!(h > 0.0)) {
        double ynorm = 0.0, fnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ynorm = std::max(ynorm, std::abs(y[i]));
            fnorm = std::max(fnorm, std::abs(k1[i]));
        }
        h = 0.01 * (1.0 + ynorm) / (1.0 + fnorm);
    }
    h = std::min({h, opt.max_step, t1 - t});
    if (t1 == t) return h;

    const double safe = 0.9, beta = 0.04;
    const double expo1 = 0.2 - beta * 0.75;
    const double facc1 = 1.0 / 0.2; // max step growth per step: x5..x10 via clamp below
    const double facc2 = 1.0 / 10.0;
    double facold = 1e-4;
    bool reject = false;
    std::size_t nsteps = 0;

    while (t < t1) {
        if (++nsteps > 50'000'000)
            throw NumericalError("integrate_to: step budget exhausted");
        if (h < 100.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw NumericalError("integrate_to: step size underflow");
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                  e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (!std::isfinite(err)) {
            h *= 0.1;
            reject = true;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            t = last ? t1 : t + h;
            y.swap(ynew);
            post(t, y);
            f(t, y, k1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            double hnew = h / fac;
            facold = std::max(err, 1e-4);
            if (reject) hnew = std::min(hnew, h);
            reject = false;
            h = std::min(hnew, opt.max_step);
        } else {
            h = h / std::min(facc1, fac11 / safe);
            reject = true;
        }
    }
    return h;
}

} // namespace alflow
