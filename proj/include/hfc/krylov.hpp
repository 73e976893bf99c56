#pragma once

#include "hfc/linalg.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace hfc {

using LinearMap = std::function<CVector(const CVector&)>;

struct GmresOptions {
    double tol = 1e-10;
    int restart = 50;
    int max_iter = 5000;
};

struct GmresResult {
    CVector x;
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

/// Restarted GMRES with right preconditioning: solves A M^{-1} y = b, x = M^{-1} y.
/// The reported residual is the true residual ||b - A x|| / ||b||.
inline GmresResult gmres(const LinearMap& a, const LinearMap& minv, const CVector& b,
                         const GmresOptions& opt = {}) {
    GmresResult res;
    const Eigen::Index n = b.size();
    res.x = CVector::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    const int m = std::max(1, opt.restart);
    CVector r = b;
    int total = 0;
    while (total < opt.max_iter) {
        const double beta = r.norm();
        res.rel_residual = beta / bnorm;
        if (res.rel_residual <= opt.tol) {
            res.converged = true;
            break;
        }
        std::vector<CVector> v;
        std::vector<CVector> z;
        v.reserve(m + 1);
        z.reserve(m);
        v.push_back(r / beta);
        CMatrix h = CMatrix::Zero(m + 1, m);
        std::vector<cplx> cs(m), sn(m);
        CVector g = CVector::Zero(m + 1);
        g(0) = beta;
        int k = 0;
        for (; k < m && total < opt.max_iter; ++k, ++total) {
            z.push_back(minv ? minv(v[k]) : v[k]);
            CVector w = a(z[k]);
            for (int j = 0; j <= k; ++j) {
                h(j, k) = v[j].dot(w);
                w -= h(j, k) * v[j];
            }
            // one reorthogonalization pass keeps the basis clean at tight tolerances
            for (int j = 0; j <= k; ++j) {
                const cplx c = v[j].dot(w);
                h(j, k) += c;
                w -= c * v[j];
            }
            const double wn = w.norm();
            h(k + 1, k) = wn;
            for (int j = 0; j < k; ++j) {
                const cplx t = std::conj(cs[j]) * h(j, k) + std::conj(sn[j]) * h(j + 1, k);
                h(j + 1, k) = -sn[j] * h(j, k) + cs[j] * h(j + 1, k);
                h(j, k) = t;
            }
            const cplx hk = h(k, k);
            const double den = std::sqrt(std::norm(hk) + wn * wn);
            if (den == 0.0) {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hk / den;
                sn[k] = cplx(wn / den, 0.0);
            }
            h(k, k) = std::conj(cs[k]) * hk + std::conj(sn[k]) * cplx(wn);
            h(k + 1, k) = 0.0;
            g(k + 1) = -sn[k] * g(k);
            g(k) = std::conj(cs[k]) * g(k);
            if (wn > 0.0) v.push_back(w / wn);
            if (std::abs(g(k + 1)) / bnorm <= opt.tol * 0.5 || wn == 0.0) {
                ++k;
                ++total;
                break;
            }
        }
        CVector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        for (int j = 0; j < k; ++j) res.x += y(j) * z[j];
        r = b - a(res.x);
        res.iterations = total;
        res.rel_residual = r.norm() / bnorm;
        if (res.rel_residual <= opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.iterations = total;
    return res;
}

} // namespace hfc
