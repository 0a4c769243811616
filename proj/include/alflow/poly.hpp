#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "alflow/errors.hpp"

namespace alflow {

// Dense univariate real polynomial, coefficients stored in ascending degree
// order. Degrees in this library stay below ~10 (2g+1 for small genus), so a
// plain coefficient vector is the right representation. The zero polynomial
// has an empty coefficient vector and degree() == -1.
//
// Every mutating operation re-normalizes: leading coefficients with
// |c| <= 1e-13 * max|coeff| are dropped.
class Poly {
public:
    Poly() = default;
    explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
    Poly(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }

    // prod_i (x - roots[i])
    static Poly from_roots(std::span<const double> roots) {
        Poly p{1.0};
        for (double r : roots) p *= Poly{-r, 1.0};
        return p;
    }

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }

    double coeff(int k) const {
        if (k < 0 || k >= static_cast<int>(c_.size())) return 0.0;
        return c_[static_cast<std::size_t>(k)];
    }
    double leading() const { return c_.empty() ? 0.0 : c_.back(); }
    const std::vector<double>& coeffs() const { return c_; }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    // Horner evaluation.
    double operator()(double x) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    // sum_k |c_k| |x|^k; the natural magnitude against which a residual at x
    // should be measured.
    double eval_scale(double x) const {
        double acc = 0.0;
        const double ax = std::abs(x);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * ax + std::abs(*it);
        return acc;
    }

    Poly derivative() const {
        if (c_.size() <= 1) return Poly{};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k)
            d[k - 1] = static_cast<double>(k) * c_[k];
        return Poly(std::move(d));
    }

    Poly& operator+=(const Poly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
        trim();
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
        trim();
        return *this;
    }
    Poly& operator*=(double s) {
        for (double& v : c_) v *= s;
        trim();
        return *this;
    }
    Poly& operator*=(const Poly& o) {
        *this = *this * o;
        return *this;
    }

    friend Poly operator+(Poly a, const Poly& b) { a += b; return a; }
    friend Poly operator-(Poly a, const Poly& b) { a -= b; return a; }
    friend Poly operator-(Poly a) {
        for (double& v : a.c_) v = -v;
        return a;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly{};
        std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j)
                r[i + j] += a.c_[i] * b.c_[j];
        return Poly(std::move(r));
    }
    friend Poly operator*(Poly a, double s) { a *= s; return a; }
    friend Poly operator*(double s, Poly a) { a *= s; return a; }

private:
    void trim() {
        const double tol = 1e-13 * max_abs_coeff();
        while (!c_.empty() && std::abs(c_.back()) <= tol) c_.pop_back();
    }

    std::vector<double> c_;
};

struct DivModResult {
    Poly quotient;
    Poly remainder;
};

// Euclidean division: num = quotient * den + remainder, deg rem < deg den.
// A nonzero remainder is never an error here; callers that require exact
// divisibility inspect the remainder themselves.
inline DivModResult divmod(const Poly& num, const Poly& den) {
    if (den.is_zero())
        throw std::invalid_argument("divmod: division by the zero polynomial");
    const int dn = num.degree();
    const int dd = den.degree();
    if (dn < dd) return {Poly{}, num};
    std::vector<double> r(num.coeffs());
    std::vector<double> q(static_cast<std::size_t>(dn - dd) + 1, 0.0);
    const double lead = den.leading();
    for (int k = dn - dd; k >= 0; --k) {
        const double t = r[static_cast<std::size_t>(k + dd)] / lead;
        q[static_cast<std::size_t>(k)] = t;
        for (int j = 0; j <= dd; ++j)
            r[static_cast<std::size_t>(k + j)] -= t * den.coeff(j);
    }
    r.resize(static_cast<std::size_t>(dd));
    return {Poly(std::move(q)), Poly(std::move(r))};
}

namespace detail {

inline Poly newton_interpolant(std::span<const double> nodes, std::span<const double> values) {
    const int n = static_cast<int>(nodes.size());
    std::vector<double> dd(values.begin(), values.end());
    for (int j = 1; j < n; ++j)
        for (int i = n - 1; i >= j; --i)
            dd[static_cast<std::size_t>(i)] =
                (dd[static_cast<std::size_t>(i)] - dd[static_cast<std::size_t>(i - 1)]) /
                (nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(i - j)]);
    Poly p{dd[static_cast<std::size_t>(n - 1)]};
    for (int k = n - 2; k >= 0; --k)
        p = p * Poly{-nodes[static_cast<std::size_t>(k)], 1.0} + Poly{dd[static_cast<std::size_t>(k)]};
    return p;
}

} // namespace detail

// Unique polynomial of degree <= n-1 through n points: Newton divided
// differences expanded to monomial coefficients, plus one pass of iterative
// refinement, which holds the node residuals at roundoff even for the wider
// node sets the tests throw at it. Nodes here are branch points or divisor
// coordinates, which validation keeps well separated.
inline Poly interpolate(std::span<const double> nodes, std::span<const double> values) {
    if (nodes.empty() || nodes.size() != values.size())
        throw std::invalid_argument("interpolate: nodes and values must be nonempty and equal-length");
    const int n = static_cast<int>(nodes.size());
    double xscale = 0.0;
    for (double x : nodes) xscale = std::max(xscale, std::abs(x));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)]) <= 1e-12 * (1.0 + xscale))
                throw std::invalid_argument("interpolate: duplicate nodes at indices " +
                                            std::to_string(i) + " and " + std::to_string(j));
    Poly p = detail::newton_interpolant(nodes, values);
    std::vector<double> resid(static_cast<std::size_t>(n));
    double rmax = 0.0;
    for (int i = 0; i < n; ++i) {
        resid[static_cast<std::size_t>(i)] =
            values[static_cast<std::size_t>(i)] - p(nodes[static_cast<std::size_t>(i)]);
        rmax = std::max(rmax, std::abs(resid[static_cast<std::size_t>(i)]));
    }
    if (rmax > 0.0) p += detail::newton_interpolant(nodes, resid);
    return p;
}

// All real roots, ascending, multiplicity by repetition. Aberth-Ehrlich on
// the monic normalization locates all complex roots simultaneously; real
// candidates are then polished by Newton on the real axis and kept only if
// the scaled residual certifies them. Degrees here are tiny, so the O(n^2)
// sweep is irrelevant.
inline std::vector<double> real_roots(const Poly& p) {
    const int deg = p.degree();
    if (deg < 1)
        throw std::invalid_argument("real_roots: polynomial degree must be >= 1");

    std::vector<std::complex<double>> a(static_cast<std::size_t>(deg) + 1);
    for (int k = 0; k <= deg; ++k)
        a[static_cast<std::size_t>(k)] = p.coeff(k) / p.leading();

    const Poly dp = p.derivative();

    std::vector<double> out;
    if (deg == 1) {
        out.push_back(-a[0].real());
        return out;
    }

    // Cauchy-bound circle, rotated off the real axis so symmetric
    // configurations do not stall.
    double radius = 0.0;
    for (int k = 0; k < deg; ++k) radius = std::max(radius, std::abs(a[static_cast<std::size_t>(k)]));
    radius = 1.0 + radius;
    std::vector<std::complex<double>> z(static_cast<std::size_t>(deg));
    for (int k = 0; k < deg; ++k)
        z[static_cast<std::size_t>(k)] =
            std::polar(radius, 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.354) / deg);

    const auto eval2 = [&](std::complex<double> x,
                           std::complex<double>& val, std::complex<double>& der) {
        val = a[static_cast<std::size_t>(deg)];
        der = 0.0;
        for (int k = deg - 1; k >= 0; --k) {
            der = der * x + val;
            val = val * x + a[static_cast<std::size_t>(k)];
        }
    };
    const auto scale_at = [&](std::complex<double> x) {
        double acc = 0.0;
        const double ax = std::abs(x);
        for (int k = deg; k >= 0; --k) acc = acc * ax + std::abs(a[static_cast<std::size_t>(k)]);
        return acc;
    };

    // Residual-level acceptance keeps clustered (multiple) roots from
    // stalling the correction-size test.
    bool converged = false;
    for (int sweep = 0; sweep < 200 && !converged; ++sweep) {
        double worst = 0.0;
        for (int j = 0; j < deg; ++j) {
            std::complex<double> pv, pd;
            eval2(z[static_cast<std::size_t>(j)], pv, pd);
            if (std::abs(pv) <= 8.0 * std::numeric_limits<double>::epsilon() *
                                  scale_at(z[static_cast<std::size_t>(j)]))
                continue;
            if (std::abs(pd) == 0.0) {
                z[static_cast<std::size_t>(j)] += std::complex<double>(1e-6, 1e-6);
                worst = 1.0;
                continue;
            }
            const std::complex<double> newton = pv / pd;
            std::complex<double> s = 0.0;
            for (int k = 0; k < deg; ++k) {
                if (k == j) continue;
                const std::complex<double> d = z[static_cast<std::size_t>(j)] - z[static_cast<std::size_t>(k)];
                if (std::abs(d) > 1e-300) s += 1.0 / d;
            }
            const std::complex<double> denom = 1.0 - newton * s;
            const std::complex<double> delta = (std::abs(denom) > 1e-300) ? newton / denom : newton;
            z[static_cast<std::size_t>(j)] -= delta;
            worst = std::max(worst, std::abs(delta) / (1.0 + std::abs(z[static_cast<std::size_t>(j)])));
        }
        converged = worst < 1e-14;
    }
    if (!converged)
        throw NumericalError("real_roots: Aberth iteration did not converge");

    for (int j = 0; j < deg; ++j) {
        const std::complex<double> zj = z[static_cast<std::size_t>(j)];
        if (std::abs(zj.imag()) > 1e-3 * (1.0 + std::abs(zj.real()))) continue;
        double x = zj.real();
        for (int it = 0; it < 30; ++it) {
            const double pv = p(x);
            const double pd = dp(x);
            if (pd == 0.0 || !std::isfinite(pv)) break;
            const double step = pv / pd;
            if (!std::isfinite(step) || std::abs(step) > 0.5 * (1.0 + std::abs(x))) break;
            x -= step;
            if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
        }
        // A genuinely complex pair close to the axis fails this residual
        // gate and is dropped; a true real root (simple or multiple) passes.
        if (std::abs(p(x)) <= 1e-12 * p.eval_scale(x)) out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace alflow
