#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alflow/poly.hpp"

namespace alflow {

// Branch data of the genus-g curve y^2 = f(x) = A(x) Q(x). The a_i are the
// fixed oscillator couplings, the c_j are set by the initial conditions.
// Immutable after construction; freely shareable.
struct CurveSpec {
    std::vector<double> a;        // g+1 entries, caller order
    std::vector<double> c;        // g entries, ascending
    Poly A;                       // prod (x - a_i)
    Poly Q;                       // prod (x - c_j)
    Poly f;                       // A * Q
    double beta = 0.0;            // sum of all 2g+1 branch points
    std::vector<double> aprime;   // A'(a_i)
    std::vector<double> gamma_sq; // 1 / A'(a_i)

    int genus() const { return static_cast<int>(c.size()); }
};

// Minimum admissible branch-point separation. Below this, the 1/A'(a_i)
// factors amplify noise past every downstream tolerance.
inline constexpr double kMinBranchGap = 1e-9;

inline CurveSpec make_curve(std::span<const double> a, std::span<const double> c) {
    if (a.size() < 2)
        throw std::invalid_argument("make_curve: need at least two coupling constants (g >= 1)");
    if (c.size() + 1 != a.size())
        throw std::invalid_argument("make_curve: expected " + std::to_string(a.size() - 1) +
                                    " motion branch points, got " + std::to_string(c.size()));
    for (double v : a)
        if (!std::isfinite(v)) throw std::invalid_argument("make_curve: non-finite entry in a");
    for (double v : c)
        if (!std::isfinite(v)) throw std::invalid_argument("make_curve: non-finite entry in c");

    // All 2g+1 branch points must be pairwise separated.
    const auto label = [&](std::size_t k) {
        return k < a.size() ? "a[" + std::to_string(k) + "]"
                            : "c[" + std::to_string(k - a.size()) + "]";
    };
    std::vector<double> all(a.begin(), a.end());
    all.insert(all.end(), c.begin(), c.end());
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
            if (std::abs(all[i] - all[j]) <= kMinBranchGap)
                throw std::invalid_argument("make_curve: branch points " + label(i) + "=" +
                                            std::to_string(all[i]) + " and " + label(j) + "=" +
                                            std::to_string(all[j]) + " are closer than 1e-9");

    CurveSpec s;
    s.a.assign(a.begin(), a.end());
    s.c.assign(c.begin(), c.end());
    std::sort(s.c.begin(), s.c.end());
    s.A = Poly::from_roots(s.a);
    s.Q = Poly::from_roots(s.c);
    s.f = s.A * s.Q;
    s.beta = 0.0;
    for (double v : s.a) s.beta += v;
    for (double v : s.c) s.beta += v;
    const Poly dA = s.A.derivative();
    s.aprime.reserve(s.a.size());
    s.gamma_sq.reserve(s.a.size());
    for (double ai : s.a) {
        const double d = dA(ai);
        s.aprime.push_back(d);
        s.gamma_sq.push_back(1.0 / d);
    }
    return s;
}

// True iff the branch points interlace: a_1 < c_1 < a_2 < ... < c_g < a_{g+1}
// (on the sorted a). This is the regime of real bounded motion, equivalent to
// all Uhlenbeck constants being positive.
inline bool is_interlaced(const CurveSpec& s) {
    std::vector<double> as(s.a);
    std::sort(as.begin(), as.end());
    for (std::size_t i = 0; i < s.c.size(); ++i)
        if (!(as[i] < s.c[i] && s.c[i] < as[i + 1])) return false;
    return true;
}

// H = (sum a_i - sum c_j) / 2; manifestly conserved, the curve does not move.
inline double hamiltonian_from_curve(const CurveSpec& s) {
    double sa = 0.0, sc = 0.0;
    for (double v : s.a) sa += v;
    for (double v : s.c) sc += v;
    return 0.5 * (sa - sc);
}

} // namespace alflow
