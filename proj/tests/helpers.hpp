#pragma once

// Shared fixtures for the test suites.
//
// The hand fixture (g = 1): a = (1, 3), q = (0.6, 0.8), qdot = (-0.4, 0.3).
// Everything below is derivable from it with pencil and paper:
//   A'(a)   = (-2, 2)
//   U       = x - 1.72            V = 0.48 (constant)
//   m       = (0.235, 0.765)      Q = x - 1.47, c = (1.47)
//   f       = x^3 - 5.47 x^2 + 8.88 x - 4.41, beta = 5.47
//   W       = x^2 - 3.75 x + 2.43
//   H       = 1.265, L = -1.015
//   qddot   = (0.618, -0.776)
//   dU/dt   = 2V = 0.96, dV/dt = -1.0616 (constant)

#include <random>
#include <vector>

#include "alflow/alflow.hpp"

namespace fixtures {

inline std::vector<double> hand_a() { return {1.0, 3.0}; }

inline alflow::NeumannState hand_state() {
    return {{0.6, 0.8}, {-0.4, 0.3}};
}

inline alflow::SpectralData hand_spectrum() {
    return alflow::spectrum_from_state(hand_a(), hand_state());
}

// Random tangent state on the sphere.
inline alflow::NeumannState random_state(std::size_t n, std::mt19937& rng) {
    std::normal_distribution<double> gauss;
    alflow::NeumannState s;
    s.q.resize(n);
    s.qdot.resize(n);
    double nq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s.q[i] = gauss(rng);
        nq += s.q[i] * s.q[i];
    }
    nq = std::sqrt(nq);
    for (double& v : s.q) v /= nq;
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s.qdot[i] = gauss(rng);
        dot += s.q[i] * s.qdot[i];
    }
    for (std::size_t i = 0; i < n; ++i) s.qdot[i] -= dot * s.q[i];
    return s;
}

// Random state whose spectrum is safely interlaced: every Uhlenbeck constant
// bounded away from zero and the branch points well separated.
inline alflow::NeumannState random_interlaced_state(const std::vector<double>& a,
                                                    std::mt19937& rng,
                                                    double m_floor = 0.02,
                                                    double gap_floor = 1e-2) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        alflow::NeumannState s = random_state(a.size(), rng);
        const std::vector<double> m = alflow::uhlenbeck_m(a, s);
        bool ok = true;
        for (double v : m) ok = ok && v > m_floor;
        if (!ok) continue;
        try {
            const alflow::SpectralData sd = alflow::spectrum_from_state(a, s);
            if (!alflow::is_interlaced(*sd.curve)) continue;
            double gap = 1e300;
            std::vector<double> all(sd.curve->a);
            all.insert(all.end(), sd.curve->c.begin(), sd.curve->c.end());
            std::sort(all.begin(), all.end());
            for (std::size_t i = 0; i + 1 < all.size(); ++i)
                gap = std::min(gap, all[i + 1] - all[i]);
            if (gap < gap_floor) continue;
            return s;
        } catch (const alflow::NumericalError&) {
            continue;
        }
    }
    throw std::runtime_error("random_interlaced_state: no admissible sample found");
}

// Triple with prescribed divisor x-coordinates on a given curve, taking the
// positive y branch at every point.
inline alflow::MumfordTriple triple_from_divisor(std::shared_ptr<const alflow::CurveSpec> curve,
                                                 const std::vector<double>& xs) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(std::sqrt(std::max(-curve->f(x), 0.0)));
    alflow::Poly U = alflow::Poly::from_roots(xs);
    alflow::Poly V = xs.size() == 1 ? alflow::Poly{ys[0]} : alflow::interpolate(xs, ys);
    return alflow::make_triple(U, V, std::move(curve), 1e-9);
}

} // namespace fixtures
