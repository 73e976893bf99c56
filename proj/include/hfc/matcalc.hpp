#pragma once

#include "hfc/error.hpp"
#include "hfc/linalg.hpp"
#include "hfc/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace hfc {

/// Eigenvalues of modulus below this fraction of the operator norm count as zero.
inline constexpr double kZeroEigTol = 1e-10;

struct BisectorParams {
    double omega = 0.0;
    double kappa = std::numeric_limits<double>::infinity();
    double big_m = 0.0;
};

struct ContourSpec {
    double theta_prime = std::numbers::pi / 4;
    double r_inner = 0.5;
    double r_outer = 2.0;
    int nodes_per_segment = 256;
};

struct SpectralSplit {
    CMatrix p_ker;
    CMatrix p_ran;
};

/// A quadrature node of (1/2 pi i) * contour integral: sum_j w_j g(z_j).
struct ContourNode {
    cplx z;
    cplx w;
};

inline void require_square(const CMatrix& t, const char* who) {
    if (t.rows() != t.cols() || t.rows() < 1)
        throw Error(ErrorKind::ShapeMismatch, std::string(who) + ": matrix must be square, N >= 1");
    if (!t.allFinite()) throw Error(ErrorKind::InvalidArgument, std::string(who) + ": non-finite entry");
}

/// Eigenvalues with multiplicity, ordered by modulus then argument.
inline std::vector<cplx> spectrum(const CMatrix& t) {
    require_square(t, "spectrum");
    const Eigen::Index n = t.rows();
    Eigen::ComplexSchur<CMatrix> schur;
    schur.setMaxIterations(100 * n * n);
    schur.compute(t, false);
    if (schur.info() != Eigen::Success)
        throw Error(ErrorKind::NoConvergence, "spectrum: Schur iteration hit the cap of 100*N^2 steps");
    std::vector<cplx> ev(n);
    for (Eigen::Index i = 0; i < n; ++i) ev[i] = schur.matrixT()(i, i);
    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    std::sort(ev.begin(), ev.end(), [scale](cplx a, cplx b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (std::abs(ma - mb) > 1e-12 * scale) return ma < mb;
        return std::arg(a) < std::arg(b);
    });
    return ev;
}

/// Dense invariant-subspace construction of the kernel/range projections.
inline SpectralSplit split_by_bases(const CMatrix& t) {
    const Eigen::Index n = t.rows();
    CMatrix k = null_space(t);
    CMatrix r = column_space(t);
    if (k.cols() + r.cols() != n)
        throw Error(ErrorKind::SplitUndefined, "kernel and range dimensions do not add up");
    CMatrix basis(n, n);
    basis << k, r;
    Eigen::PartialPivLU<CMatrix> lu(basis);
    if (smallest_singular(basis) < 1e-10)
        throw Error(ErrorKind::SplitUndefined, "kernel and range are not complementary");
    CMatrix sel = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < k.cols(); ++i) sel(i, i) = 1.0;
    SpectralSplit s;
    s.p_ker = basis * sel * lu.inverse();
    s.p_ran = CMatrix::Identity(n, n) - s.p_ker;
    return s;
}

/// Projections onto ker(T) along ran(T). The kernel projection is the residue at 0
/// of the resolvent, taken on a small circle; the basis construction is a cross-check.
inline SpectralSplit spectral_split(const CMatrix& t) {
    require_square(t, "spectral_split");
    const Eigen::Index n = t.rows();
    const int r1 = numerical_rank(t);
    SpectralSplit s;
    if (r1 == 0) {
        s.p_ker = CMatrix::Identity(n, n);
        s.p_ran = CMatrix::Zero(n, n);
        return s;
    }
    if (r1 == n) {
        s.p_ker = CMatrix::Zero(n, n);
        s.p_ran = CMatrix::Identity(n, n);
        return s;
    }
    const int r2 = numerical_rank(t * t);
    if (r2 < r1) {
        std::ostringstream os;
        os << "rank(T^2) = " << r2 << " < rank(T) = " << r1 << ": ker T^2 != ker T";
        throw Error(ErrorKind::SplitUndefined, os.str());
    }
    const std::vector<cplx> ev = spectrum(t);
    // the n - r1 smallest eigenvalues are the zero cluster
    const double kappa = std::abs(ev[n - r1]);
    const double zero_max = std::abs(ev[n - r1 - 1]);
    if (!(zero_max < 0.25 * kappa))
        throw Error(ErrorKind::SplitUndefined, "zero eigenvalue cluster is not isolated");
    const double rad = 0.5 * kappa;
    const int m = 128;
    CMatrix acc = CMatrix::Zero(n, n);
    const CMatrix id = CMatrix::Identity(n, n);
    for (int j = 0; j < m; ++j) {
        const cplx z = std::polar(rad, 2.0 * std::numbers::pi * (j + 0.5) / m);
        // (1/2 pi i) dz = z / m for the equispaced circle rule
        acc += (z / double(m)) * (z * id - t).partialPivLu().inverse();
    }
    s.p_ker = acc;
    s.p_ran = id - acc;
    const SpectralSplit oracle = split_by_bases(t);
    if ((oracle.p_ker - s.p_ker).norm() > 1e-6 * std::max(1.0, oracle.p_ker.norm()))
        throw Error(ErrorKind::SplitUndefined, "contour and basis splittings disagree");
    return s;
}

/// omega: max deviation of nonzero eigenvalues from the real axis; kappa: min nonzero modulus;
/// big_m: operator 2-norm.
inline BisectorParams bisector_params(const CMatrix& t) {
    require_square(t, "bisector_params");
    BisectorParams bp;
    bp.big_m = norm2(t);
    const double zero = kZeroEigTol * bp.big_m;
    for (const cplx& l : spectrum(t)) {
        const double a = std::abs(l);
        if (a <= zero || a == 0.0) continue;
        bp.kappa = std::min(bp.kappa, a);
        bp.omega = std::max(bp.omega, std::atan2(std::abs(l.imag()), std::abs(l.real())));
    }
    if (bp.omega >= std::numbers::pi / 2 - 1e-10) {
        std::ostringstream os;
        os << "spectrum reaches the imaginary axis (omega = " << bp.omega << ")";
        throw Error(ErrorKind::NotBisectorial, os.str());
    }
    return bp;
}

/// theta' at the midpoint of (omega, pi/2), radii kappa/2 and 2M.
inline ContourSpec default_contour(const BisectorParams& bp, int nodes = 256) {
    ContourSpec c;
    c.theta_prime = 0.5 * (bp.omega + std::numbers::pi / 2);
    c.r_inner = 0.5 * bp.kappa;
    c.r_outer = 2.0 * bp.big_m;
    c.nodes_per_segment = nodes;
    return c;
}

inline void validate(const ContourSpec& c) {
    if (!(c.theta_prime > 0.0 && c.theta_prime < std::numbers::pi / 2))
        throw Error(ErrorKind::InvalidArgument, "contour: theta' must lie in (0, pi/2)");
    if (!(c.r_inner > 0.0 && c.r_inner < c.r_outer) || !std::isfinite(c.r_outer))
        throw Error(ErrorKind::InvalidArgument, "contour: need 0 < r_inner < r_outer < inf");
    if (c.nodes_per_segment < 8)
        throw Error(ErrorKind::InvalidArgument, "contour: nodes_per_segment must be >= 8");
}

/// Positively oriented boundary of S_theta' ∩ {r_in <= |z| <= r_out}: two annular sectors,
/// each bounded by two radial segments and two arcs, Gauss-Legendre on every piece.
inline std::vector<ContourNode> bisector_contour(const ContourSpec& c) {
    validate(c);
    const GaussRule gl = gauss_legendre(c.nodes_per_segment);
    const double th = c.theta_prime;
    const double lr = std::log(c.r_outer / c.r_inner);
    const cplx i1(0.0, 1.0);
    const cplx to_unit = 1.0 / (2.0 * std::numbers::pi * i1);
    std::vector<ContourNode> right;
    right.reserve(4 * gl.x.size());
    auto arc = [&](double r, double a0, double a1) {
        for (size_t j = 0; j < gl.x.size(); ++j) {
            const double a = a0 + (a1 - a0) * gl.x[j];
            const cplx z = std::polar(r, a);
            right.push_back({z, to_unit * gl.w[j] * i1 * z * (a1 - a0)});
        }
    };
    auto ray = [&](double ang, bool outward) {
        for (size_t j = 0; j < gl.x.size(); ++j) {
            const double s = outward ? gl.x[j] : 1.0 - gl.x[j];
            const cplx z = std::polar(c.r_inner * std::exp(lr * s), ang);
            right.push_back({z, to_unit * gl.w[j] * z * (outward ? lr : -lr)});
        }
    };
    arc(c.r_outer, -th, th);
    ray(th, false);
    arc(c.r_inner, th, -th);
    ray(-th, true);
    std::vector<ContourNode> all = right;
    for (const ContourNode& nd : right) all.push_back({-nd.z, -nd.w});
    return all;
}

/// Distance from z to the boundary of the truncated bisector, negative when z lies outside.
inline double signed_margin(cplx z, const ContourSpec& c) {
    const cplx w = z.real() >= 0.0 ? z : -z;
    const double r = std::abs(w);
    const double a = std::abs(std::arg(w));
    const double d_ray = a < c.theta_prime ? r * std::sin(c.theta_prime - a) : -r * std::sin(std::min(a - c.theta_prime, std::numbers::pi / 2));
    return std::min({r - c.r_inner, c.r_outer - r, d_ray});
}

inline void check_inside(const std::vector<cplx>& ev, double zero, const ContourSpec& c, double margin) {
    for (const cplx& l : ev) {
        if (std::abs(l) <= zero) continue;
        const double d = signed_margin(l, c);
        if (d < margin) {
            std::ostringstream os;
            os << "eigenvalue " << l << " lies within " << margin << " of the contour (margin " << d << ")";
            throw Error(ErrorKind::ContourTooClose, os.str());
        }
    }
}

/// f(T) = f(0) p_ker + (1/2 pi i) \oint f(z) (z - T)^{-1} dz.
/// f_at_zero overrides f(0) for functions with a removable or excluded value at 0.
template <class F>
CMatrix contour_fc(const CMatrix& t, F&& f, const ContourSpec& spec,
                   std::optional<cplx> f_at_zero = std::nullopt, double margin_rel = 1e-6) {
    require_square(t, "contour_fc");
    const Eigen::Index n = t.rows();
    const double big_m = norm2(t);
    const std::vector<cplx> ev = spectrum(t);
    check_inside(ev, kZeroEigTol * big_m, spec, margin_rel * spec.r_outer);
    const SpectralSplit sp = spectral_split(t);
    CMatrix acc = CMatrix::Zero(n, n);
    if (sp.p_ker.norm() > 0.0) {
        const cplx f0 = f_at_zero ? *f_at_zero : cplx(f(cplx(0.0)));
        if (f0 != cplx(0.0)) acc += f0 * sp.p_ker;
    }
    const CMatrix id = CMatrix::Identity(n, n);
    for (const ContourNode& nd : bisector_contour(spec)) {
        const cplx fz = f(nd.z);
        if (!std::isfinite(fz.real()) || !std::isfinite(fz.imag()))
            throw Error(ErrorKind::InvalidArgument, "contour_fc: f is not finite on the contour");
        acc += (fz * nd.w) * (nd.z * id - t).partialPivLu().inverse();
    }
    return acc;
}

template <class F>
CMatrix contour_fc(const CMatrix& t, F&& f, int nodes = 256, std::optional<cplx> f_at_zero = std::nullopt) {
    return contour_fc(t, std::forward<F>(f), default_contour(bisector_params(t), nodes), f_at_zero);
}

/// (lambda I - T)^{-1} by dense LU with a residual check.
inline CMatrix resolvent(const CMatrix& t, cplx lambda, double margin_rel = 1e-12) {
    require_square(t, "resolvent");
    const Eigen::Index n = t.rows();
    const double scale = std::max(1.0, norm2(t));
    for (const cplx& l : spectrum(t)) {
        if (std::abs(lambda - l) <= margin_rel * scale) {
            std::ostringstream os;
            os << "lambda = " << lambda << " is within " << margin_rel * scale << " of eigenvalue " << l;
            throw Error(ErrorKind::NearSingular, os.str());
        }
    }
    const CMatrix a = lambda * CMatrix::Identity(n, n) - t;
    const CMatrix x = a.partialPivLu().inverse();
    const double res = (a * x - CMatrix::Identity(n, n)).norm();
    if (!(res <= 1e-10)) {
        std::ostringstream os;
        os << "residual " << res << " exceeds 1e-10";
        throw Error(ErrorKind::NearSingular, os.str());
    }
    return x;
}

/// sup of ||lambda (lambda - T)^{-1}|| over lambda on the rays |arg(+-lambda)| = theta,
/// radii log-spaced over [1e-3 kappa, 1e3 M].
inline double resolvent_bound(const CMatrix& t, double theta, int samples = 200) {
    const BisectorParams bp = bisector_params(t);
    if (!(theta > bp.omega && theta < std::numbers::pi / 2))
        throw Error(ErrorKind::InvalidArgument, "resolvent_bound: theta must lie in (omega, pi/2)");
    const double lo = std::isfinite(bp.kappa) ? 1e-3 * bp.kappa : 1e-3;
    const double hi = 1e3 * std::max(bp.big_m, lo * 10.0);
    double sup = 0.0;
    const int per = std::max(1, samples / 4);
    for (int s = 0; s < 4; ++s) {
        const double ang = (s < 2 ? theta : std::numbers::pi - theta) * (s % 2 == 0 ? 1.0 : -1.0);
        for (int j = 0; j < per; ++j) {
            const double r = lo * std::pow(hi / lo, double(j) / std::max(1, per - 1));
            const cplx l = std::polar(r, ang);
            sup = std::max(sup, std::abs(l) * norm2(resolvent(t, l)));
        }
    }
    return sup;
}

} // namespace hfc
