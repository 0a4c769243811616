#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "alflow/alfn.hpp"
#include "alflow/curve.hpp"
#include "alflow/errors.hpp"
#include "alflow/mumford.hpp"
#include "alflow/neumann.hpp"

namespace alflow {

struct SpectralData {
    std::shared_ptr<const CurveSpec> curve;
    MumfordTriple triple;
    std::vector<double> m; // Uhlenbeck constants
    std::map<std::string, double> residuals;
};

// Forward spectral transform: (q, qdot) -> curve + Mumford triple.
//
// U interpolates q_i^2 A'(a_i) (monic because sum q^2 = 1), V interpolates
// q_i qdot_i A'(a_i) (degree drops because sum q qdot = 0), and Q is built
// from the Uhlenbeck constants rather than from a division of f: that route
// has no near-cancellation and makes sum m = 1 the monicity certificate.
inline SpectralData spectrum_from_state(std::span<const double> a, const NeumannState& s) {
    check_state(a, s);
    const std::size_t n = a.size();

    const std::vector<double> m = uhlenbeck_m(a, s);
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(m[i]) < 1e-10)
            throw DegenerateSpectrumError("degenerate spectrum: m[" + std::to_string(i) +
                                          "] vanishes (Q shares the root a[" + std::to_string(i) +
                                          "] with A)");

    const Poly A = Poly::from_roots(a);
    const Poly dA = A.derivative();
    std::vector<double> ap(n), uv(n), vv(n), qv(n);
    for (std::size_t i = 0; i < n; ++i) {
        ap[i] = dA(a[i]);
        uv[i] = s.q[i] * s.q[i] * ap[i];
        vv[i] = s.q[i] * s.qdot[i] * ap[i];
        qv[i] = m[i] * ap[i];
    }

    Poly U = interpolate(a, uv);
    const double monic_defect_u = std::abs(U.coeff(static_cast<int>(n) - 1) - 1.0);
    if (monic_defect_u > 1e-10)
        throw NumericalError("spectrum_from_state: U leading coefficient off by " +
                             std::to_string(monic_defect_u) + " (constraint violated upstream)");
    U *= 1.0 / U.coeff(static_cast<int>(n) - 1);

    Poly V = interpolate(a, vv);
    const double lead_defect_v = std::abs(V.coeff(static_cast<int>(n) - 1));
    if (lead_defect_v > 1e-10)
        throw NumericalError("spectrum_from_state: V degree does not drop, leading coefficient " +
                             std::to_string(lead_defect_v) + " (constraint violated upstream)");
    if (V.degree() >= static_cast<int>(n) - 1) {
        std::vector<double> vc(V.coeffs().begin(), V.coeffs().begin() + static_cast<std::ptrdiff_t>(n - 1));
        V = Poly(std::move(vc));
    }

    Poly Q = interpolate(a, qv);
    const double monic_defect_q = std::abs(Q.coeff(static_cast<int>(n) - 1) - 1.0);
    if (monic_defect_q > 1e-10)
        throw NumericalError("spectrum_from_state: Q leading coefficient off by " +
                             std::to_string(monic_defect_q));
    Q *= 1.0 / Q.coeff(static_cast<int>(n) - 1);

    const std::vector<double> c = real_roots(Q);
    if (c.size() + 1 != n)
        throw NumericalError("spectrum_from_state: Q has complex roots (outside the real "
                             "bounded-motion regime)");

    std::shared_ptr<const CurveSpec> curve;
    try {
        curve = std::make_shared<const CurveSpec>(make_curve(a, c));
    } catch (const std::invalid_argument& e) {
        throw DegenerateSpectrumError(std::string("degenerate spectrum: ") + e.what());
    }

    SpectralData sd{curve, make_triple(U, V, curve, 1e-9), m, {}};

    double m_vs_q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        m_vs_q = std::max(m_vs_q, std::abs(m[i] - curve->Q(a[i]) / curve->aprime[i]));
    double sum_m = -1.0;
    for (double v : m) sum_m += v;
    if (m_vs_q > 1e-10)
        throw NumericalError("spectrum_from_state: m_i vs Q(a_i)/A'(a_i) mismatch " +
                             std::to_string(m_vs_q));
    if (std::abs(sum_m) > 1e-12)
        throw NumericalError("spectrum_from_state: sum m - 1 = " + std::to_string(sum_m));

    sd.residuals["monic_defect_U"] = monic_defect_u;
    sd.residuals["lead_defect_V"] = lead_defect_v;
    sd.residuals["monic_defect_Q"] = monic_defect_q;
    sd.residuals["divisibility"] = divisibility_residual(sd.triple);
    sd.residuals["H_cross"] = std::abs(hamiltonian_from_curve(*curve) - hamiltonian(a, s));
    sd.residuals["m_vs_Q"] = m_vs_q;
    sd.residuals["sum_m_defect"] = std::abs(sum_m);
    return sd;
}

// Conservation report over a trajectory from either path: maximal drift of
// H, of every m_i, of every c_i, and of sum a_i m_i against 2 H(0). Samples
// whose spectrum degenerates are counted under a diagnostic key instead of
// contributing c drifts.
inline std::map<std::string, double> conserved_report(const Trajectory& traj,
                                                      std::span<const double> a) {
    if (traj.states.empty())
        throw std::invalid_argument("conserved_report: empty trajectory");

    const std::vector<double> m0 = uhlenbeck_m(a, traj.states.front());
    const double H0 = hamiltonian(a, traj.states.front());

    bool have_c = true;
    std::vector<double> c0;
    try {
        c0 = spectrum_from_state(a, traj.states.front()).curve->c;
    } catch (const NumericalError&) {
        have_c = false;
    }

    std::map<std::string, double> out;
    out["H"] = 0.0;
    for (std::size_t i = 0; i < m0.size(); ++i) out["m_" + std::to_string(i + 1)] = 0.0;
    if (have_c)
        for (std::size_t j = 0; j < c0.size(); ++j) out["c_" + std::to_string(j + 1)] = 0.0;
    out["sum_am_minus_2H"] = 0.0;
    out["sum_m_minus_1"] = 0.0;
    double degenerate = 0.0;

    for (const NeumannState& s : traj.states) {
        const std::vector<double> m = uhlenbeck_m(a, s);
        double sam = 0.0, sm = -1.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            auto& slot = out["m_" + std::to_string(i + 1)];
            slot = std::max(slot, std::abs(m[i] - m0[i]));
            sam += a[i] * m[i];
            sm += m[i];
        }
        out["H"] = std::max(out["H"], std::abs(hamiltonian(a, s) - H0));
        out["sum_am_minus_2H"] = std::max(out["sum_am_minus_2H"], std::abs(sam - 2.0 * H0));
        out["sum_m_minus_1"] = std::max(out["sum_m_minus_1"], std::abs(sm));
        if (have_c) {
            try {
                const std::vector<double> c = spectrum_from_state(a, s).curve->c;
                for (std::size_t j = 0; j < c0.size(); ++j) {
                    auto& slot = out["c_" + std::to_string(j + 1)];
                    slot = std::max(slot, std::abs(c[j] - c0[j]));
                }
            } catch (const NumericalError&) {
                degenerate += 1.0;
            }
        }
    }
    if (degenerate > 0.0) out["diag_degenerate_samples"] = degenerate;
    return out;
}

struct RoundtripReport {
    double sup_q = 0.0;    // sup-norm discrepancy of positions across paths
    double sup_qdot = 0.0; // same for velocities
    std::map<std::string, double> direct_drifts;
    std::map<std::string, double> algebraic_drifts;
    std::size_t samples = 0;
};

// Runs both evolutions from the same initial state — direct constrained
// integration, and spectral transform + coefficient flow + sign-tracked
// recovery — and reports the sup-norm discrepancy together with the
// conserved-quantity drifts of each path.
inline RoundtripReport roundtrip(std::span<const double> a, const NeumannState& s,
                                 double t_end, double rtol, double dt_out = 1e-2) {
    const SpectralData sd = spectrum_from_state(a, s);
    if (!is_interlaced(*sd.curve))
        throw NumericalError("roundtrip: spectrum is not interlaced (unbounded or non-real regime)");

    const Trajectory direct = integrate(a, s, t_end, dt_out, rtol);
    const std::vector<FlowSample> flow = integrate_flow(sd.triple, t_end, dt_out, rtol);
    const Trajectory algebraic = track_along(flow, SignTracker::from_state(s));

    if (direct.times.size() != algebraic.times.size())
        throw NumericalError("roundtrip: sample grids disagree");

    RoundtripReport rep;
    rep.samples = direct.times.size();
    for (std::size_t k = 0; k < direct.times.size(); ++k) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            rep.sup_q = std::max(rep.sup_q,
                                 std::abs(direct.states[k].q[i] - algebraic.states[k].q[i]));
            rep.sup_qdot = std::max(rep.sup_qdot,
                                    std::abs(direct.states[k].qdot[i] - algebraic.states[k].qdot[i]));
        }
    }
    rep.direct_drifts = conserved_report(direct, a);
    rep.algebraic_drifts = conserved_report(algebraic, a);
    return rep;
}

} // namespace alflow
