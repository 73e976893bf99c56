#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>

namespace hfc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTol = 1e-10;

inline RVector singular_values(const CMatrix& a) {
    if (a.size() == 0) return RVector();
    return Eigen::BDCSVD<CMatrix>(a).singularValues();
}

inline int numerical_rank(const CMatrix& a, double rel = kRankTol) {
    RVector s = singular_values(a);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cut = rel * s(0);
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > cut) ++r;
    return r;
}

/// Orthonormal basis of the numerical kernel (columns).
inline CMatrix null_space(const CMatrix& a, double rel = kRankTol) {
    Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullV);
    const RVector& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (smax > 0.0 && s(i) > rel * smax) ++r;
    return svd.matrixV().rightCols(a.cols() - r);
}

/// Orthonormal basis of the numerical column space.
inline CMatrix column_space(const CMatrix& a, double rel = kRankTol) {
    Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullU);
    const RVector& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (smax > 0.0 && s(i) > rel * smax) ++r;
    return svd.matrixU().leftCols(r);
}

/// Orthogonal projector onto span of the columns of an orthonormal q.
inline CMatrix orth_projector(const CMatrix& q, Eigen::Index dim) {
    if (q.cols() == 0) return CMatrix::Zero(dim, dim);
    return q * q.adjoint();
}

inline double norm2(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    RVector s = singular_values(a);
    return s(0);
}

inline double smallest_singular(const CMatrix& a) {
    if (a.cols() == 0) return std::numeric_limits<double>::infinity();
    RVector s = singular_values(a);
    if (s.size() < a.cols()) return 0.0;
    return s(s.size() - 1);
}

/// Power iteration on A*A through matrix-free products.
inline double power_norm(const std::function<CVector(const CVector&)>& apply,
                         const std::function<CVector(const CVector&)>& apply_adj,
                         Eigen::Index dim, int iters = 100, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CVector x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = cplx(nd(rng), nd(rng));
    x.normalize();
    double est = 0.0;
    for (int it = 0; it < iters; ++it) {
        CVector y = apply(x);
        est = y.norm();
        if (est == 0.0) return 0.0;
        CVector z = apply_adj(y);
        const double zn = z.norm();
        if (zn == 0.0) return est;
        x = z / zn;
    }
    return apply(x).norm();
}

inline double power_norm(const CMatrix& a, int iters = 100, std::uint64_t seed = 1) {
    return power_norm([&](const CVector& v) -> CVector { return a * v; },
                      [&](const CVector& v) -> CVector { return a.adjoint() * v; }, a.cols(),
                      iters, seed);
}

inline CMatrix random_complex(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    CMatrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
}

} // namespace hfc
