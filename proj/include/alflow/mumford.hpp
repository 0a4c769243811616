#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "alflow/curve.hpp"
#include "alflow/errors.hpp"
#include "alflow/ode.hpp"
#include "alflow/poly.hpp"

namespace alflow {

// Polynomial coordinates on the g-fold symmetric product of the curve:
// U monic of degree g with the divisor x-coordinates as roots, V of degree
// <= g-1 interpolating the y-coordinates. W = (f + V^2) / U is recovered by
// exact division wherever needed; the division remainder doubles as the
// quality monitor of the whole representation. On the dynamical sheet the
// divisor satisfies y^2 = -f(x) (forced by U | f + V^2).
struct MumfordTriple {
    Poly U;
    Poly V;
    std::shared_ptr<const CurveSpec> curve;

    int genus() const { return curve->genus(); }
};

// max |coeff of ((f + V^2) mod U)| / max |coeff of f|
inline double divisibility_residual(const Poly& U, const Poly& V, const CurveSpec& curve) {
    const DivModResult d = divmod(curve.f + V * V, U);
    return d.remainder.max_abs_coeff() / curve.f.max_abs_coeff();
}

inline double divisibility_residual(const MumfordTriple& T) {
    return divisibility_residual(T.U, T.V, *T.curve);
}

inline MumfordTriple make_triple(Poly U, Poly V, std::shared_ptr<const CurveSpec> curve,
                                 double divisibility_tol = 1e-9) {
    if (!curve) throw std::invalid_argument("make_triple: missing curve");
    const int g = curve->genus();
    if (U.degree() != g)
        throw std::invalid_argument("make_triple: U must have degree " + std::to_string(g));
    if (std::abs(U.leading() - 1.0) > 1e-12)
        throw std::invalid_argument("make_triple: U must be monic");
    U *= 1.0 / U.leading();
    if (V.degree() > g - 1)
        throw std::invalid_argument("make_triple: V must have degree <= " + std::to_string(g - 1));
    const double resid = divisibility_residual(U, V, *curve);
    if (resid > divisibility_tol)
        throw NumericalError("make_triple: (f + V^2) is not divisible by U, residual " +
                             std::to_string(resid));
    return {std::move(U), std::move(V), std::move(curve)};
}

struct WResult {
    Poly W;          // monic, degree g+1
    double residual; // scaled remainder of the division
};

inline WResult w_poly(const MumfordTriple& T, double tol = 1e-7) {
    DivModResult d = divmod(T.curve->f + T.V * T.V, T.U);
    const double resid = d.remainder.max_abs_coeff() / T.curve->f.max_abs_coeff();
    if (resid > tol)
        throw NumericalError("w_poly: triple is off the curve, divisibility residual " +
                             std::to_string(resid));
    return {std::move(d.quotient), resid};
}

// Sum of the divisor x-coordinates, read off U without extracting roots.
inline double wp_gg(const MumfordTriple& T) {
    return -T.U.coeff(T.genus() - 1);
}

struct FlowDerivative {
    Poly dU; // = 2 V
    Poly dV; // = W - (x + 2 wp_gg - beta) U, degree <= g-1 after cancellation
};

namespace detail {

// Derivative of (U, V) without the divisibility gate. Runge-Kutta stages sit
// O(h^2) off the isospectral manifold, so the quotient is taken as-is there;
// accepted steps are gated separately. The leading-term cancellation of
// W - (x + 2 wp_gg - beta) U is state-independent and stays asserted.
inline FlowDerivative flow_rhs_raw(const Poly& U, const Poly& V, const CurveSpec& curve) {
    const int g = curve.genus();
    const Poly W = divmod(curve.f + V * V, U).quotient;
    const Poly lin{-2.0 * U.coeff(g - 1) - curve.beta, 1.0}; // x + 2 wp_gg - beta
    const Poly P = W - lin * U;
    const double scale = std::max(1.0, W.max_abs_coeff());
    if (std::abs(P.coeff(g + 1)) > 1e-10 * scale || std::abs(P.coeff(g)) > 1e-10 * scale)
        throw NumericalError("flow_rhs: leading-term cancellation failed (corrupted triple)");
    std::vector<double> dv(static_cast<std::size_t>(g), 0.0);
    for (int k = 0; k < g; ++k) dv[static_cast<std::size_t>(k)] = P.coeff(k);
    return {2.0 * V, Poly(std::move(dv))};
}

} // namespace detail

// Time derivative of (U, V) under the evolution that matches the physical
// dynamics; time is the last Jacobian coordinate. The x^{g+1} and x^g terms
// of W - (x + 2 wp_gg - beta) U cancel identically, which is asserted before
// they are dropped.
inline FlowDerivative flow_rhs(const MumfordTriple& T) {
    const double resid = divisibility_residual(T);
    if (resid > 1e-7)
        throw NumericalError("flow_rhs: triple is off the curve, divisibility residual " +
                             std::to_string(resid));
    return detail::flow_rhs_raw(T.U, T.V, *T.curve);
}

struct FlowSample {
    double t;
    MumfordTriple triple;
};

// Integrates the coefficient-space flow: state variables are the g free
// coefficients of U (it stays monic by construction) and the g coefficients
// of V. The coefficients evolve smoothly through divisor turning points and
// root near-collisions, where the per-point divisor dynamics is singular;
// that is why this, and not the divisor motion, is the primary evolution.
inline std::vector<FlowSample> integrate_flow(const MumfordTriple& T0, double t_end,
                                              double dt_out, double rtol,
                                              double atol = 1e-12) {
    if (!(rtol >= 1e-13 && rtol <= 1e-6))
        throw std::invalid_argument("rtol must lie in [1e-13, 1e-6]");
    const int g = T0.genus();
    const std::size_t gs = static_cast<std::size_t>(g);
    const std::shared_ptr<const CurveSpec> curve = T0.curve;
    {
        const double r0 = divisibility_residual(T0);
        if (r0 > 1e-7)
            throw NumericalError("integrate_flow: initial divisibility residual " +
                                 std::to_string(r0));
    }
    const std::vector<double> ts = sample_times(t_end, dt_out);

    std::vector<double> y(2 * gs, 0.0);
    for (int k = 0; k < g; ++k) {
        y[static_cast<std::size_t>(k)] = T0.U.coeff(k);
        y[gs + static_cast<std::size_t>(k)] = T0.V.coeff(k);
    }

    auto unpack = [&](const std::vector<double>& yv) {
        std::vector<double> uc(yv.begin(), yv.begin() + static_cast<std::ptrdiff_t>(gs));
        uc.push_back(1.0);
        std::vector<double> vc(yv.begin() + static_cast<std::ptrdiff_t>(gs), yv.end());
        return MumfordTriple{Poly(std::move(uc)), Poly(std::move(vc)), curve};
    };

    auto rhs = [&](double, const std::vector<double>& yv, std::vector<double>& dy) {
        const MumfordTriple T = unpack(yv);
        const FlowDerivative d = detail::flow_rhs_raw(T.U, T.V, *curve);
        for (int k = 0; k < g; ++k) {
            dy[static_cast<std::size_t>(k)] = d.dU.coeff(k);
            dy[gs + static_cast<std::size_t>(k)] = d.dV.coeff(k);
        }
    };
    // Accepted steps must stay on the isospectral manifold: the division
    // residual is the step-control health monitor.
    auto gate = [&](double t_now, std::vector<double>& yv) {
        const MumfordTriple T = unpack(yv);
        const double resid = divisibility_residual(T);
        if (resid > 1e-7)
            throw NumericalError("integrate_flow: divisibility residual " +
                                 std::to_string(resid) + " at t = " + std::to_string(t_now));
    };

    std::vector<FlowSample> out;
    out.reserve(ts.size());
    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = atol;
    double t = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (k > 0) opt.initial_step = integrate_to(rhs, t, y, ts[k], opt, gate);
        out.push_back({ts[k], unpack(y)});
    }
    return out;
}

struct DivisorPoint {
    double x;                 // root of U
    double v;                 // V(x); v^2 = -f(x) on the dynamical sheet
    double on_curve_residual; // |v^2 + f(x)| scaled
};

struct Divisor {
    std::vector<DivisorPoint> points; // sorted by x
};

inline Divisor divisor(const MumfordTriple& T) {
    const std::vector<double> roots = real_roots(T.U);
    if (static_cast<int>(roots.size()) != T.genus())
        throw NumericalError("divisor: U has complex roots (outside the supported real regime)");
    Divisor d;
    d.points.reserve(roots.size());
    for (double x : roots) {
        const double v = T.V(x);
        const double resid = std::abs(v * v + T.curve->f(x)) /
                             std::max(1.0, T.curve->f.eval_scale(x));
        d.points.push_back({x, v, resid});
    }
    return d;
}

namespace detail {

inline void require_simple_roots(const std::vector<double>& roots, double min_gap) {
    for (std::size_t i = 0; i + 1 < roots.size(); ++i)
        if (roots[i + 1] - roots[i] < min_gap)
            throw NumericalError("divisor root collision: gap " +
                                 std::to_string(roots[i + 1] - roots[i]));
}

// U'(x_a) from the root representation: prod_{b != a} (x_a - x_b).
inline double uprime_from_roots(const std::vector<double>& roots, std::size_t a) {
    double acc = 1.0;
    for (std::size_t b = 0; b < roots.size(); ++b)
        if (b != a) acc *= roots[a] - roots[b];
    return acc;
}

} // namespace detail

// Diagnostic only: compares the root velocities xdot_a obtained by finite
// differences of the coefficient flow against -2 V(x_a) / U'(x_a). Points at
// turning configurations (|V(x_a)| <= 1e-3) are skipped, the divisor motion
// is singular there.
inline double divisor_flow_residual(const MumfordTriple& T, double fd_step = 1e-4,
                                    double rtol = 1e-10) {
    const std::vector<FlowSample> s = integrate_flow(T, 2.0 * fd_step, fd_step, rtol);
    const Divisor d0 = divisor(s[0].triple);
    const Divisor d1 = divisor(s[1].triple);
    const Divisor d2 = divisor(s[2].triple);
    std::vector<double> mid;
    for (const DivisorPoint& p : d1.points) mid.push_back(p.x);
    detail::require_simple_roots(mid, 1e-6);

    double worst = 0.0;
    for (std::size_t a = 0; a < mid.size(); ++a) {
        const double vmid = d1.points[a].v;
        if (std::abs(vmid) <= 1e-3) continue; // turning point
        const double fd = (d2.points[a].x - d0.points[a].x) / (2.0 * fd_step);
        const double pred = -2.0 * vmid / detail::uprime_from_roots(mid, a);
        worst = std::max(worst, std::abs(fd - pred));
    }
    return worst;
}

// Kinetic energy as a quadratic form in the divisor velocities,
//   (1/4) sum_{a,b} M_ab xdot_a xdot_b,
//   M_ab = sum_i U(a_i) / ((a_i - x_a)(a_i - x_b) A'(a_i)),
// with xdot_a = -2 V(x_a)/U'(x_a). Equal to sum_i qdot_i^2 and to
// wp_gg - sum c_a. U(a_i) is expanded as prod_b (a_i - x_b) so the near-pole
// factors cancel exactly instead of through subtractive evaluation.
inline double metric_quadratic_form(const MumfordTriple& T) {
    const CurveSpec& cs = *T.curve;
    const std::vector<double> roots = real_roots(T.U);
    if (static_cast<int>(roots.size()) != T.genus())
        throw NumericalError("metric_quadratic_form: U has complex roots");
    detail::require_simple_roots(roots, 1e-6);
    const std::size_t g = roots.size();
    const std::size_t n = cs.a.size();

    std::vector<std::vector<double>> fac(n, std::vector<double>(g));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < g; ++b) {
            fac[i][b] = cs.a[i] - roots[b];
            if (std::abs(fac[i][b]) < 1e-6)
                throw NumericalError("metric_quadratic_form: divisor point at a branch point");
        }

    std::vector<double> xdot(g);
    for (std::size_t a = 0; a < g; ++a)
        xdot[a] = -2.0 * T.V(roots[a]) / detail::uprime_from_roots(roots, a);

    double form = 0.0;
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b) {
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double num = 1.0;
                for (std::size_t bp = 0; bp < g; ++bp) {
                    if (bp == a || bp == b) continue;
                    num *= fac[i][bp];
                }
                if (a == b) num /= fac[i][a];
                m += num * cs.gamma_sq[i];
            }
            form += m * xdot[a] * xdot[b];
        }
    return 0.25 * form;
}

} // namespace alflow
