#pragma once

// Independent reference computations shared by the unit tests. Nothing here
// calls into the library's numerics.

#include <cmath>
#include <random>
#include <vector>

#include "mnmimo/types.hpp"

namespace oracle {

using mnmimo::CMatrix;
using mnmimo::Complex;
using mnmimo::CVector;
using mnmimo::kPi;

inline CVector dft(const CVector& x, int sign = -1) {
    const auto n = x.size();
    CVector out = CVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index t = 0; t < n; ++t)
            out(k) += x(t) * std::polar(1.0, sign * 2.0 * kPi * static_cast<double>((k * t) % n) /
                                                 static_cast<double>(n));
    return out;
}

inline CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    CVector v(n);
    for (auto& x : v) x = Complex(g(rng), g(rng));
    return v;
}

inline CMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    CMatrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) m.col(j) = random_vector(r, rng);
    return m;
}

// Dominant eigenpair of a Hermitian PSD matrix by power iteration.
inline std::pair<double, CVector> power_iteration(const CMatrix& a, int iters = 5000) {
    CVector v = CVector::Ones(a.rows()).normalized();
    double lambda = 0.0;
    for (int i = 0; i < iters; ++i) {
        CVector w = a * v;
        lambda = w.norm();
        if (lambda == 0.0) break;
        v = w / lambda;
    }
    return {lambda, v};
}

// Gaussian elimination with partial pivoting, A x = b.
inline CVector solve(CMatrix a, CVector b) {
    const auto n = a.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        a.row(c).swap(a.row(piv));
        std::swap(b(c), b(piv));
        for (Eigen::Index r = c + 1; r < n; ++r) {
            const Complex f = a(r, c) / a(c, c);
            a.row(r) -= f * a.row(c);
            b(r) -= f * b(c);
        }
    }
    CVector x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        Complex s = b(r);
        for (Eigen::Index c = r + 1; c < n; ++c) s -= a(r, c) * x(c);
        x(r) = s / a(r, r);
    }
    return x;
}

// Angle between two complex directions, insensitive to a common phase.
inline double angle(const CVector& a, const CVector& b) {
    const CVector u = a.normalized();
    const Complex proj = u.dot(b);
    return std::atan2((b - proj * u).norm(), std::abs(proj));
}

// Row-vector times column-vector without conjugation.
inline Complex apply(const CVector& h, const CVector& p) {
    Complex s = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) s += h(i) * p(i);
    return s;
}

} // namespace oracle
