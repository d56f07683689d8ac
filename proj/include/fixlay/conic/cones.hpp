#pragma once

#include "fixlay/common.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace fixlay::conic {

/// Cone block kinds for the variable partition of a standard-form program
/// min c'x s.t. Ax = b, x in K. `Zero` pins its variables to zero (its dual
/// slack is free); the remaining kinds are the usual symmetric cones.
enum class ConeKind { Zero, NonNeg, SecondOrder, Psd };

struct Cone {
    ConeKind kind;
    int size; ///< vector length for Zero/NonNeg/SecondOrder, matrix side for Psd

    /// Number of variable-vector entries the block occupies.
    int dim() const { return kind == ConeKind::Psd ? size * (size + 1) / 2 : size; }
    /// Barrier degree contribution (0 for Zero blocks).
    int degree() const {
        switch (kind) {
        case ConeKind::Zero: return 0;
        case ConeKind::NonNeg: return size;
        case ConeKind::SecondOrder: return 1;
        case ConeKind::Psd: return size;
        }
        return 0;
    }
};

inline const char* to_string(ConeKind k) {
    switch (k) {
    case ConeKind::Zero: return "zero";
    case ConeKind::NonNeg: return "nonneg";
    case ConeKind::SecondOrder: return "soc";
    case ConeKind::Psd: return "psd";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// svec packing: a symmetric p x p matrix is stored as the upper triangle in
// column-major order with off-diagonal entries scaled by sqrt(2), so that
// <X, Y>_F = svec(X) . svec(Y).
// ---------------------------------------------------------------------------

inline int svec_len(int side) { return side * (side + 1) / 2; }

/// Index of entry (i, j), i <= j, within the svec layout.
inline int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

inline const double kSqrt2 = std::sqrt(2.0);

inline Vec svec(const Mat& x) {
    const int p = static_cast<int>(x.rows());
    Vec v(svec_len(p));
    int idx = 0;
    for (int j = 0; j < p; ++j)
        for (int i = 0; i <= j; ++i, ++idx)
            v(idx) = (i == j) ? x(i, j) : kSqrt2 * x(i, j);
    return v;
}

inline Mat smat(const Vec& v, int side) {
    Mat x(side, side);
    int idx = 0;
    for (int j = 0; j < side; ++j)
        for (int i = 0; i <= j; ++i, ++idx) {
            const double val = (i == j) ? v(idx) : v(idx) / kSqrt2;
            x(i, j) = val;
            x(j, i) = val;
        }
    return x;
}

// ---------------------------------------------------------------------------
// Jordan-algebra helpers for the second-order cone.
// ---------------------------------------------------------------------------

/// u o v = (u.v ; u0 * v_tail + v0 * u_tail)
inline Vec soc_product(const Vec& u, const Vec& v) {
    Vec r(u.size());
    r(0) = u.dot(v);
    r.tail(u.size() - 1) = u(0) * v.tail(v.size() - 1) + v(0) * u.tail(u.size() - 1);
    return r;
}

/// Solve lambda o u = v for u (arrow-matrix inverse).
inline Vec soc_divide(const Vec& lambda, const Vec& v) {
    const auto n = lambda.size();
    const double a = lambda(0);
    const auto bbar = lambda.tail(n - 1);
    const double det = a * a - bbar.squaredNorm();
    Vec u(n);
    u(0) = (a * v(0) - bbar.dot(v.tail(n - 1))) / det;
    u.tail(n - 1) = (v.tail(n - 1) - u(0) * bbar) / a;
    return u;
}

/// u0^2 - ||u_tail||^2, the cone's quadratic form.
inline double soc_quad(const Vec& u) {
    return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

/// Largest step alpha with u + alpha*d staying in the second-order cone
/// (u strictly interior). Returns +inf when the ray never leaves.
inline double soc_max_step(const Vec& u, const Vec& d) {
    const double a0 = soc_quad(u);
    const double a1 = u(0) * d(0) - u.tail(u.size() - 1).dot(d.tail(d.size() - 1));
    const double a2 = soc_quad(d);
    const double inf = std::numeric_limits<double>::infinity();
    // roots of a2 t^2 + 2 a1 t + a0 = 0
    if (std::abs(a2) < 1e-300) {
        if (a1 >= 0)
            return inf;
        return -a0 / (2 * a1);
    }
    const double disc = a1 * a1 - a0 * a2;
    if (a2 > 0) {
        if (disc < 0)
            return inf;
        const double sq = std::sqrt(disc);
        const double r1 = (-a1 - sq) / a2;
        const double r2 = (-a1 + sq) / a2;
        double best = inf;
        if (r1 > 0)
            best = std::min(best, r1);
        if (r2 > 0)
            best = std::min(best, r2);
        return best;
    }
    // a2 < 0: parabola opens downward with f(0) > 0, so exactly one
    // positive crossing
    const double sq = std::sqrt(disc);
    const double r1 = (-a1 - sq) / a2;
    const double r2 = (-a1 + sq) / a2;
    return r1 > 0 ? r1 : r2;
}

} // namespace fixlay::conic
