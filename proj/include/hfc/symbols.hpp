#pragma once

#include "hfc/error.hpp"
#include "hfc/linalg.hpp"
#include "hfc/matcalc.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hfc {

using MultiIndex = std::vector<int>;

inline int order(const MultiIndex& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

inline double monomial(const MultiIndex& a, const RVector& xi) {
    double v = 1.0;
    for (size_t j = 0; j < a.size(); ++j)
        for (int p = 0; p < a[j]; ++p) v *= xi(Eigen::Index(j));
    return v;
}

/// D(xi) = sum_theta D_theta xi^theta with |theta| = k.
struct HomogeneousSymbol {
    int n = 1;
    int big_n = 1;
    int k = 1;
    std::vector<std::pair<MultiIndex, CMatrix>> coeffs;

    void validate() const {
        if (n < 1 || big_n < 1 || k < 1)
            throw Error(ErrorKind::InvalidArgument, "symbol: need n, N, k >= 1");
        if (big_n > 64) throw Error(ErrorKind::InvalidArgument, "symbol: N > 64 is not supported");
        for (const auto& [theta, m] : coeffs) {
            if (int(theta.size()) != n || order(theta) != k)
                throw Error(ErrorKind::InvalidArgument, "symbol: multi-index has wrong length or order");
            for (int v : theta)
                if (v < 0) throw Error(ErrorKind::InvalidArgument, "symbol: negative multi-index entry");
            if (m.rows() != big_n || m.cols() != big_n)
                throw Error(ErrorKind::ShapeMismatch, "symbol: coefficient is not N x N");
            if (!m.allFinite()) throw Error(ErrorKind::InvalidArgument, "symbol: non-finite coefficient");
        }
    }

    CMatrix eval(const RVector& xi) const {
        if (xi.size() != n) throw Error(ErrorKind::ShapeMismatch, "symbol: xi has wrong dimension");
        CMatrix out = CMatrix::Zero(big_n, big_n);
        for (const auto& [theta, m] : coeffs) out += monomial(theta, xi) * m;
        return out;
    }

    HomogeneousSymbol operator+(const HomogeneousSymbol& o) const {
        if (o.n != n || o.big_n != big_n || o.k != k)
            throw Error(ErrorKind::ShapeMismatch, "symbol sum: shapes differ");
        HomogeneousSymbol s = *this;
        for (const auto& c : o.coeffs) s.coeffs.push_back(c);
        return s;
    }
};

struct HodgeDiracSymbolPair {
    HomogeneousSymbol gamma;
    HomogeneousSymbol gamma_tilde;

    HomogeneousSymbol pi() const { return gamma + gamma_tilde; }
    CMatrix eval_pi(const RVector& xi) const { return gamma.eval(xi) + gamma_tilde.eval(xi); }
    int n() const { return gamma.n; }
    int big_n() const { return gamma.big_n; }

    void validate() const {
        gamma.validate();
        gamma_tilde.validate();
        if (gamma.k != 1 || gamma_tilde.k != 1)
            throw Error(ErrorKind::InvalidArgument, "Hodge-Dirac pair: both symbols must be first order");
        if (gamma.n != gamma_tilde.n || gamma.big_n != gamma_tilde.big_n)
            throw Error(ErrorKind::ShapeMismatch, "Hodge-Dirac pair: shapes differ");
    }
};

struct SphereSample {
    std::vector<RVector> points;
    size_t count() const { return points.size(); }
};

/// Deterministic unit-sphere sample: equispaced circle for n = 2, Fibonacci lattice for n = 3,
/// seeded Gaussian directions beyond; always includes +-e_j.
inline SphereSample sphere_sample(int n, int count = 2048, std::uint64_t seed = 0) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "sphere_sample: n < 1");
    SphereSample s;
    auto push = [&](RVector v) {
        v.normalize();
        for (const auto& p : s.points)
            if ((p - v).norm() < 1e-12) return;
        s.points.push_back(std::move(v));
    };
    for (int j = 0; j < n; ++j)
        for (double sg : {1.0, -1.0}) {
            RVector e = RVector::Zero(n);
            e(j) = sg;
            push(e);
        }
    if (n == 2) {
        for (int i = 0; i < count; ++i) {
            const double a = 2.0 * std::numbers::pi * (i + 0.5) / count;
            RVector v(2);
            v << std::cos(a), std::sin(a);
            push(v);
        }
    } else if (n == 3) {
        const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / count;
            const double r = std::sqrt(1.0 - z * z);
            RVector v(3);
            v << r * std::cos(ga * i), r * std::sin(ga * i), z;
            push(v);
        }
    } else if (n > 3) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        for (int i = 0; i < count; ++i) {
            RVector v(n);
            for (int j = 0; j < n; ++j) v(j) = nd(rng);
            push(v);
        }
    }
    return s;
}

struct SymbolCheck {
    bool pass = false;
    BisectorParams params;
    double eig_min = std::numeric_limits<double>::infinity(); // smallest nonzero |lambda|
    double eig_max = 0.0;
    std::string failed_condition;
    RVector failed_xi;
    std::string message;
};

/// Coercivity constant on the range: smallest singular value of T restricted to ran(T).
inline double range_coercivity(const CMatrix& t) {
    const CMatrix q = column_space(t);
    if (q.cols() == 0) return std::numeric_limits<double>::infinity();
    return smallest_singular(t * q);
}

inline SymbolCheck verify_D1_D2(const HomogeneousSymbol& s, const SphereSample& sample) {
    s.validate();
    SymbolCheck out;
    auto fail = [&](const char* cond, const RVector& xi, const std::string& msg) {
        out.pass = false;
        out.failed_condition = cond;
        out.failed_xi = xi;
        out.message = msg;
        return out;
    };
    for (const RVector& xi : sample.points) {
        const CMatrix t = s.eval(xi);
        try {
            spectral_split(t);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::SplitUndefined) return fail("D1", xi, e.what());
            throw;
        }
        const double kap = range_coercivity(t);
        out.params.kappa = std::min(out.params.kappa, kap);
        BisectorParams bp;
        try {
            bp = bisector_params(t);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NotBisectorial) return fail("D2", xi, e.what());
            throw;
        }
        out.params.omega = std::max(out.params.omega, bp.omega);
        out.params.big_m = std::max(out.params.big_m, bp.big_m);
        for (const cplx& l : spectrum(t)) {
            const double a = std::abs(l);
            if (a <= kZeroEigTol * bp.big_m) continue;
            out.eig_min = std::min(out.eig_min, a);
            out.eig_max = std::max(out.eig_max, a);
        }
    }
    if (!(out.params.kappa > kRankTol * out.params.big_m)) return fail("D1", RVector(), "coercivity constant is zero");
    out.pass = out.params.omega < std::numbers::pi / 2;
    return out;
}

struct HodgeSymbolCheck {
    bool pass = false;
    SymbolCheck pi_check;
    double nilpotence_residual = 0.0; // max ||Gamma^2|| / ||Gamma||^2 over both symbols
    double pi3_max_sin_angle = 0.0;
    int kernel_dim_min = 0;
    int kernel_dim_max = 0;
    std::string failed_condition;
    RVector failed_xi;
    std::string message;
};

inline HodgeSymbolCheck verify_hodge_symbols(const HodgeDiracSymbolPair& p, const SphereSample& sample) {
    p.validate();
    HodgeSymbolCheck out;
    out.kernel_dim_min = p.big_n();
    auto fail = [&](const std::string& cond, const RVector& xi, const std::string& msg) {
        out.pass = false;
        out.failed_condition = cond;
        out.failed_xi = xi;
        out.message = msg;
        return out;
    };
    for (const RVector& xi : sample.points) {
        const CMatrix g = p.gamma.eval(xi), gt = p.gamma_tilde.eval(xi);
        const double ng = g.norm(), ngt = gt.norm();
        const double rg = ng > 0 ? (g * g).norm() / (ng * ng) : 0.0;
        const double rgt = ngt > 0 ? (gt * gt).norm() / (ngt * ngt) : 0.0;
        out.nilpotence_residual = std::max({out.nilpotence_residual, rg, rgt});
        if (rg > 1e-10) return fail("nilpotent(Gamma)", xi, "Gamma(xi)^2 != 0");
        if (rgt > 1e-10) return fail("nilpotent(GammaTilde)", xi, "GammaTilde(xi)^2 != 0");
    }
    out.pi_check = verify_D1_D2(p.pi(), sample);
    if (!out.pi_check.pass) {
        const std::string c = out.pi_check.failed_condition == "D2" ? "Pi2" : "Pi1";
        return fail(c, out.pi_check.failed_xi, out.pi_check.message);
    }
    const int nn = p.big_n();
    for (const RVector& xi : sample.points) {
        const CMatrix g = p.gamma.eval(xi), gt = p.gamma_tilde.eval(xi);
        const CMatrix kpi = null_space(g + gt);
        CMatrix stacked(2 * nn, nn);
        stacked << g, gt;
        const CMatrix kint = null_space(stacked);
        out.kernel_dim_min = std::min<int>(out.kernel_dim_min, int(kpi.cols()));
        out.kernel_dim_max = std::max<int>(out.kernel_dim_max, int(kpi.cols()));
        if (kpi.cols() != kint.cols()) {
            std::ostringstream os;
            os << "dim ker Pi(xi) = " << kpi.cols() << " but dim(ker Gamma ∩ ker GammaTilde) = " << kint.cols();
            return fail("Pi3", xi, os.str());
        }
        const double sa = norm2(orth_projector(kpi, nn) - orth_projector(kint, nn));
        out.pi3_max_sin_angle = std::max(out.pi3_max_sin_angle, sa);
        if (sa >= 1e-8) return fail("Pi3", xi, "kernel subspaces differ");
    }
    out.pass = true;
    return out;
}

/// m(xi) = D(xi)^{-1} on ran D(xi), zero on the kernel.
inline CMatrix range_pseudoinverse(const HomogeneousSymbol& s, const RVector& xi) {
    if (xi.norm() == 0.0) throw Error(ErrorKind::DegenerateFrequency, "range_pseudoinverse at xi = 0");
    const CMatrix t = s.eval(xi);
    const SpectralSplit sp = spectral_split(t);
    return (t + sp.p_ker).partialPivLu().solve(sp.p_ran);
}

/// sigma_t(xi) = t^2 xi^theta D (I + t^2 D^2)^{-1}, assembled as (xi^theta m)(I - P_t).
inline CMatrix sigma_t(const HomogeneousSymbol& s, const MultiIndex& theta, double t, const RVector& xi) {
    if (int(theta.size()) != s.n || order(theta) != s.k)
        throw Error(ErrorKind::InvalidArgument, "sigma_t: |theta| must equal k");
    const Eigen::Index nn = s.big_n;
    if (t == 0.0) return CMatrix::Zero(nn, nn);
    const CMatrix d = s.eval(xi);
    const CMatrix id = CMatrix::Identity(nn, nn);
    const CMatrix pt = (id + t * t * d * d).partialPivLu().inverse();
    return (monomial(theta, xi) * range_pseudoinverse(s, xi)) * (id - pt);
}

inline CMatrix sigma_t_direct(const HomogeneousSymbol& s, const MultiIndex& theta, double t, const RVector& xi) {
    const Eigen::Index nn = s.big_n;
    const CMatrix d = s.eval(xi);
    const CMatrix id = CMatrix::Identity(nn, nn);
    return t * t * monomial(theta, xi) * d * (id + t * t * d * d).partialPivLu().inverse();
}

// Resolvent-family symbols of a Hodge-Dirac pair, complex tau allowed.
inline CMatrix r_symbol(const CMatrix& pi, cplx tau) {
    const Eigen::Index nn = pi.rows();
    Eigen::PartialPivLU<CMatrix> lu(CMatrix::Identity(nn, nn) + cplx(0, 1) * tau * pi);
    return lu.inverse();
}
inline CMatrix p_symbol(const CMatrix& pi, cplx tau) {
    const Eigen::Index nn = pi.rows();
    return (CMatrix::Identity(nn, nn) + tau * tau * pi * pi).partialPivLu().inverse();
}
inline CMatrix q_symbol(const CMatrix& pi, cplx tau) { return tau * pi * p_symbol(pi, tau); }

using SymbolFamily = std::function<CMatrix(const RVector& xi, double tau)>;

struct MikhlinRow {
    MultiIndex alpha;
    double tau = 0.0;
    double value = 0.0;      // sup over the sample at step h
    double value_half = 0.0; // same at step h/2
    bool stable = true;
};

struct MikhlinTable {
    std::vector<MikhlinRow> rows;
    double h = 1e-4;
    bool all_stable = true;

    /// sup over tau of the row values for one alpha.
    double sup(const MultiIndex& alpha) const {
        double s = 0.0;
        for (const auto& r : rows)
            if (r.alpha == alpha) s = std::max(s, r.value);
        return s;
    }
};

/// All alpha with components <= 1 and |alpha| <= max_order (max_order defaults to n).
inline std::vector<MultiIndex> default_alphas(int n, int max_order = -1, bool allow_repeat = false) {
    if (max_order < 0) max_order = n;
    std::vector<MultiIndex> out;
    MultiIndex a(n, 0);
    const int cap = allow_repeat ? max_order : 1;
    std::function<void(int)> rec = [&](int j) {
        if (j == n) {
            if (order(a) <= max_order) out.push_back(a);
            return;
        }
        for (int v = 0; v <= cap; ++v) {
            a[j] = v;
            rec(j + 1);
        }
        a[j] = 0;
    };
    rec(0);
    return out;
}

namespace detail {

inline CMatrix nested_difference(const SymbolFamily& m, const RVector& xi, double tau, const MultiIndex& alpha,
                                 int j, double h) {
    const int n = int(alpha.size());
    while (j < n && alpha[j] == 0) ++j;
    if (j == n) return m(xi, tau);
    MultiIndex rest = alpha;
    RVector xp = xi, xm = xi;
    xp(j) += h;
    xm(j) -= h;
    if (rest[j] == 1) {
        rest[j] = 0;
        return (nested_difference(m, xp, tau, rest, j + 1, h) - nested_difference(m, xm, tau, rest, j + 1, h)) /
               (2.0 * h);
    }
    rest[j] -= 2;
    return (nested_difference(m, xp, tau, rest, j, h) - 2.0 * nested_difference(m, xi, tau, rest, j, h) +
            nested_difference(m, xm, tau, rest, j, h)) /
           (h * h);
}

} // namespace detail

/// sup over the sample of |xi|^{|alpha|} ||d^alpha m_tau(xi)|| by nested central differences.
inline MikhlinTable mikhlin_probe(const SymbolFamily& m, const std::vector<MultiIndex>& alphas,
                                  const SphereSample& sample, const std::vector<double>& taus, double h = 1e-4) {
    MikhlinTable tab;
    tab.h = h;
    for (const MultiIndex& a : alphas)
        for (double tau : taus) {
            MikhlinRow row;
            row.alpha = a;
            row.tau = tau;
            for (const RVector& xi : sample.points) {
                const double scale = std::pow(xi.norm(), order(a));
                try {
                    row.value = std::max(row.value, scale * norm2(detail::nested_difference(m, xi, tau, a, 0, h)));
                    row.value_half =
                        std::max(row.value_half, scale * norm2(detail::nested_difference(m, xi, tau, a, 0, h / 2)));
                } catch (const Error& e) {
                    std::ostringstream os;
                    os << "mikhlin_probe: family failed at xi = " << xi.transpose() << ", tau = " << tau << ": "
                       << e.what();
                    throw Error(e.kind(), os.str());
                }
            }
            // an exact zero shows up as truncation noise shrinking with h, which is not divergence
            row.stable = std::abs(row.value - row.value_half) <= 1e-7 ||
                         (row.value_half > 0 && row.value / row.value_half <= 2.0 &&
                          row.value / row.value_half >= 0.5);
            tab.all_stable = tab.all_stable && row.stable;
            tab.rows.push_back(row);
        }
    return tab;
}

} // namespace hfc
