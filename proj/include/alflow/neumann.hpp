#pragma once

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alflow/curve.hpp"
#include "alflow/errors.hpp"
#include "alflow/ode.hpp"

namespace alflow {

// Point of the constrained phase space: positions on the unit sphere and
// tangent velocities (velocities coincide with the canonical momenta).
struct NeumannState {
    std::vector<double> q;
    std::vector<double> qdot;
};

inline double sphere_residual(const NeumannState& s) {
    double acc = -1.0;
    for (double v : s.q) acc += v * v;
    return std::abs(acc);
}

inline double tangency_residual(const NeumannState& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.q.size(); ++i) acc += s.q[i] * s.qdot[i];
    return std::abs(acc);
}

inline void check_state(std::span<const double> a, const NeumannState& s, double tol = 1e-6) {
    if (s.q.size() != a.size() || s.qdot.size() != a.size())
        throw std::invalid_argument("state dimension does not match the coupling vector");
    if (sphere_residual(s) > tol)
        throw std::invalid_argument("state off the unit sphere: |sum q^2 - 1| = " +
                                    std::to_string(sphere_residual(s)));
    if (tangency_residual(s) > tol)
        throw std::invalid_argument("velocity not tangent: |sum q qdot| = " +
                                    std::to_string(tangency_residual(s)));
}

inline double lagrangian(std::span<const double> a, const NeumannState& s) {
    if (s.q.size() != a.size() || s.qdot.size() != a.size())
        throw std::invalid_argument("state dimension does not match the coupling vector");
    double kin = 0.0, pot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        kin += s.qdot[i] * s.qdot[i];
        pot += a[i] * s.q[i] * s.q[i];
    }
    return 0.5 * kin - 0.5 * pot;
}

inline double hamiltonian(std::span<const double> a, const NeumannState& s) {
    if (s.q.size() != a.size() || s.qdot.size() != a.size())
        throw std::invalid_argument("state dimension does not match the coupling vector");
    double kin = 0.0, pot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        kin += s.qdot[i] * s.qdot[i];
        pot += a[i] * s.q[i] * s.q[i];
    }
    return 0.5 * kin + 0.5 * pot;
}

struct PhaseDerivative {
    std::vector<double> dq;
    std::vector<double> dqdot;
};

// Hamiltonian vector field on the constraint manifold. Computed in the
// multiplier form dqdot_i = -a_i q_i + q_i sum_j (a_j q_j^2 - qdot_j^2) and
// cross-checked against the equation-of-motion form -(2L + a_i) q_i; the two
// are algebraically identical, so any disagreement means a broken build.
inline PhaseDerivative vector_field(std::span<const double> a, const NeumannState& s) {
    check_state(a, s);
    const std::size_t n = a.size();
    double mult = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        mult += a[j] * s.q[j] * s.q[j] - s.qdot[j] * s.qdot[j];

    PhaseDerivative d;
    d.dq = s.qdot;
    d.dqdot.resize(n);
    const double twoL = 2.0 * lagrangian(a, s);
    double maxdiff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d.dqdot[i] = -a[i] * s.q[i] + s.q[i] * mult;
        const double alt = -(twoL + a[i]) * s.q[i];
        maxdiff = std::max(maxdiff, std::abs(d.dqdot[i] - alt));
        scale = std::max(scale, std::abs(d.dqdot[i]));
    }
    if (maxdiff > 1e-12 * (1.0 + scale))
        throw NumericalError("vector_field: the two equation-of-motion forms disagree");
    return d;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<NeumannState> states;
    std::vector<std::map<std::string, double>> residuals; // one map per sample
};

// Adaptive integration of the constrained dynamics. After each accepted step
// the position is renormalized onto the sphere and the radial velocity
// component removed; the per-step displacement this causes is recorded in the
// residuals (key "proj_step") so over-projection stays visible.
inline Trajectory integrate(std::span<const double> a, const NeumannState& s0,
                            double t_end, double dt_out, double rtol,
                            double atol = 1e-12) {
    check_state(a, s0);
    if (!(rtol >= 1e-13 && rtol <= 1e-6))
        throw std::invalid_argument("rtol must lie in [1e-13, 1e-6]");
    const std::size_t n = a.size();
    const std::vector<double> ts = sample_times(t_end, dt_out);

    std::vector<double> y(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = s0.q[i];
        y[n + i] = s0.qdot[i];
    }

    // No manifold gate here: RK stages legitimately sit O(h^2) off the sphere.
    auto rhs = [&a, n](double, const std::vector<double>& yv, std::vector<double>& dy) {
        double mult = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            mult += a[j] * yv[j] * yv[j] - yv[n + j] * yv[n + j];
        for (std::size_t i = 0; i < n; ++i) {
            dy[i] = yv[n + i];
            dy[n + i] = (-a[i] + mult) * yv[i];
        }
    };

    double max_proj = 0.0;
    auto project = [n, &max_proj](double, std::vector<double>& yv) {
        double nq = 0.0;
        for (std::size_t i = 0; i < n; ++i) nq += yv[i] * yv[i];
        nq = std::sqrt(nq);
        if (!(nq > 0.5))
            throw NumericalError("integrate: position collapsed away from the sphere");
        double dot = 0.0, disp = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double qi = yv[i] / nq;
            disp += (qi - yv[i]) * (qi - yv[i]);
            yv[i] = qi;
        }
        for (std::size_t i = 0; i < n; ++i) dot += yv[i] * yv[n + i];
        for (std::size_t i = 0; i < n; ++i) {
            const double vi = yv[n + i] - dot * yv[i];
            disp += (vi - yv[n + i]) * (vi - yv[n + i]);
            yv[n + i] = vi;
        }
        max_proj = std::max(max_proj, std::sqrt(disp));
    };

    Trajectory traj;
    traj.times.reserve(ts.size());
    traj.states.reserve(ts.size());
    traj.residuals.reserve(ts.size());

    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = atol;
    double t = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (k > 0) opt.initial_step = integrate_to(rhs, t, y, ts[k], opt, project);
        NeumannState s;
        s.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        s.qdot.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
        std::map<std::string, double> res;
        res["res_constraint"] = sphere_residual(s);
        res["res_constraint_dot"] = tangency_residual(s);
        res["proj_step"] = max_proj;
        max_proj = 0.0;
        traj.times.push_back(ts[k]);
        traj.states.push_back(std::move(s));
        traj.residuals.push_back(std::move(res));
    }
    return traj;
}

// Uhlenbeck constants m_i = q_i^2 + sum_{j != i} (q_i qdot_j - q_j qdot_i)^2 / (a_i - a_j).
// They sum to 1 (the cross terms cancel in antisymmetric pairs) and equal
// Q(a_i)/A'(a_i) on the spectral side.
inline std::vector<double> uhlenbeck_m(std::span<const double> a, const NeumannState& s) {
    if (s.q.size() != a.size() || s.qdot.size() != a.size())
        throw std::invalid_argument("state dimension does not match the coupling vector");
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a[i] - a[j]) <= kMinBranchGap)
                throw std::invalid_argument("uhlenbeck_m: couplings a[" + std::to_string(i) +
                                            "] and a[" + std::to_string(j) + "] coincide");
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = s.q[i] * s.q[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = s.q[i] * s.qdot[j] - s.q[j] * s.qdot[i];
            acc += w * w / (a[i] - a[j]);
        }
        m[i] = acc;
    }
    return m;
}

// sum_i m_i / (x - a_i); equals Q(x)/A(x) for the spectrum of the state.
inline double m_rational(std::span<const double> a, const NeumannState& s, double x) {
    const std::vector<double> m = uhlenbeck_m(a, s);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(x - a[i]) <= 1e-9 * (1.0 + std::abs(a[i])))
            throw std::invalid_argument("m_rational: x hits the pole at a[" + std::to_string(i) + "]");
        acc += m[i] / (x - a[i]);
    }
    return acc;
}

inline double m_rational(std::span<const double> a, const NeumannState& s, double x,
                         const CurveSpec& curve) {
    const double v = m_rational(a, s, x);
    const double ref = curve.Q(x) / curve.A(x);
    if (std::abs(v - ref) > 1e-8 * (1.0 + std::abs(v)))
        throw NumericalError("m_rational: disagrees with Q(x)/A(x) on the supplied curve");
    return v;
}

} // namespace alflow
