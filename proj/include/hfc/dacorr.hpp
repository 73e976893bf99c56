#pragma once

#include "hfc/error.hpp"
#include "hfc/hodge.hpp"
#include "hfc/krylov.hpp"
#include "hfc/matcalc.hpp"
#include "hfc/symbols.hpp"
#include "hfc/torus.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace hfc {

using ScalarFn = std::function<cplx(cplx)>;

struct NamedFunction {
    std::string name;
    ScalarFn f;
};

/// The fixed test family: lambda/(1+lambda^2), lambda^2/(1+lambda^2)^2, lambda (lambda^2 + 0.01)^{-1/2}.
inline std::vector<NamedFunction> test_functions() {
    return {
        {"q", [](cplx z) { return z / (1.0 + z * z); }},
        {"q2", [](cplx z) { return z * z / ((1.0 + z * z) * (1.0 + z * z)); }},
        {"sign", [](cplx z) { return z / std::sqrt(z * z + 0.01); }},
    };
}

inline NamedFunction function_by_name(const std::string& name) {
    if (name == "zero") return {"zero", [](cplx) { return cplx(0.0); }};
    for (auto& nf : test_functions())
        if (nf.name == name) return nf;
    throw Error(ErrorKind::InvalidArgument, "unknown function name: " + name + " (expected q, q2, sign or zero)");
}

// ---------------------------------------------------------------- first-order D and DA

struct FirstOrderD {
    HomogeneousSymbol symbol;

    void validate() const {
        symbol.validate();
        if (symbol.k != 1) throw Error(ErrorKind::InvalidArgument, "FirstOrderD: symbol must be first order");
    }
    int n() const { return symbol.n; }
    int big_n() const { return symbol.big_n; }
};

/// (H1) on a sphere sample: range coercivity and spectrum in a bisector.
inline SymbolCheck check_H1(const FirstOrderD& d, int samples = 512, std::uint64_t seed = 0) {
    return verify_D1_D2(d.symbol, sphere_sample(d.n(), samples, seed));
}

/// The operator u -> D(A u) on grid fields.
struct DAOp {
    FirstOrderD d;
    MatrixField a;
    MultiplierOp dm;

    static DAOp make(const FirstOrderD& d, const MatrixField& a) {
        d.validate();
        if (a.big_n != d.big_n() || a.grid.n != d.n()) throw Error(ErrorKind::ShapeMismatch, "DA: coefficient shape");
        return {d, a, MultiplierOp::of_symbol(a.grid, d.symbol)};
    }
    const TorusGrid& grid() const { return a.grid; }
    Eigen::Index dim() const { return grid().cells() * d.big_n(); }
    CVector apply(const CVector& v) const { return dm.apply_values(a.apply_values(v)); }
    CMatrix dense() const { return assemble_dense([&](const CVector& v) { return apply(v); }, dim()); }
};

namespace detail {

inline HomogeneousSymbol embed(const HomogeneousSymbol& s, int blocks, int row, int col) {
    HomogeneousSymbol out;
    out.n = s.n;
    out.k = s.k;
    out.big_n = blocks * s.big_n;
    for (const auto& [theta, m] : s.coeffs) {
        CMatrix big = CMatrix::Zero(out.big_n, out.big_n);
        big.block(row * s.big_n, col * s.big_n, s.big_n, s.big_n) = m;
        out.coeffs.push_back({theta, big});
    }
    return out;
}

inline MatrixField block_diag(const std::vector<MatrixField>& parts) {
    const int nn = parts.front().big_n;
    const int k = int(parts.size());
    MatrixField out = MatrixField::constant(parts.front().grid, CMatrix::Zero(k * nn, k * nn));
    for (size_t c = 0; c < out.cells.size(); ++c)
        for (int i = 0; i < k; ++i) out.cells[c].block(i * nn, i * nn, nn, nn) = parts[size_t(i)].cells[c];
    return out;
}

} // namespace detail

/// Block Hodge-Dirac operator on C^N (+) C^N: Pi_B = [[0, A D A], [D, 0]].
inline VariableOp build_block(const FirstOrderD& d, const MatrixField& a, BConditionReport* report = nullptr) {
    d.validate();
    const SymbolCheck h1 = check_H1(d);
    if (!h1.pass) throw Error(ErrorKind::Precondition, "(H1) fails: " + h1.message);
    const TorusGrid& gr = a.grid;
    const int nn = d.big_n();
    HodgeDiracSymbolPair pair{detail::embed(d.symbol, 2, 1, 0), detail::embed(d.symbol, 2, 0, 1)};
    const MatrixField zero = MatrixField::constant(gr, CMatrix::Zero(nn, nn));
    VariableOp op = VariableOp::make(pair, {detail::block_diag({a, zero}), detail::block_diag({zero, a})}, gr);
    const BConditionReport b = check_B_conditions(op, 2.0, 3);
    if (report) *report = b;
    if (!b.pass) {
        std::ostringstream os;
        os << "(H2)/(H3) fail: coercivity on ran D is " << b.c_primal << ", dual " << b.c_dual;
        throw Error(ErrorKind::Precondition, os.str());
    }
    // Pi_B (u, v) must equal (A D A v, D u).
    const DAOp da = DAOp::make(d, a);
    const GridField w = random_trig_field(gr, 2 * nn, std::max(1, gr.g / 4 - 1), 7);
    const CVector got = op.apply(w.values);
    CVector want(got.size());
    CVector u(gr.cells() * nn), v(gr.cells() * nn);
    for (Eigen::Index c = 0; c < gr.cells(); ++c) {
        u.segment(c * nn, nn) = w.values.segment(c * 2 * nn, nn);
        v.segment(c * nn, nn) = w.values.segment(c * 2 * nn + nn, nn);
    }
    const CVector top = a.apply_values(da.apply(v)), bottom = da.dm.apply_values(u);
    for (Eigen::Index c = 0; c < gr.cells(); ++c) {
        want.segment(c * 2 * nn, nn) = top.segment(c * nn, nn);
        want.segment(c * 2 * nn + nn, nn) = bottom.segment(c * nn, nn);
    }
    if ((got - want).norm() > 1e-10 * std::max(1.0, want.norm()))
        throw Error(ErrorKind::ShapeMismatch, "block operator does not match [[0, ADA], [D, 0]]");
    return op;
}

/// Interleave per-cell (u, v) into a block field and back.
inline CVector join_blocks(const CVector& u, const CVector& v, int nn) {
    const Eigen::Index cells = u.size() / nn;
    CVector w(2 * u.size());
    for (Eigen::Index c = 0; c < cells; ++c) {
        w.segment(c * 2 * nn, nn) = u.segment(c * nn, nn);
        w.segment(c * 2 * nn + nn, nn) = v.segment(c * nn, nn);
    }
    return w;
}

inline std::pair<CVector, CVector> split_blocks(const CVector& w, int nn) {
    const Eigen::Index cells = w.size() / (2 * nn);
    CVector u(cells * nn), v(cells * nn);
    for (Eigen::Index c = 0; c < cells; ++c) {
        u.segment(c * nn, nn) = w.segment(c * 2 * nn, nn);
        v.segment(c * nn, nn) = w.segment(c * 2 * nn + nn, nn);
    }
    return {u, v};
}

// ---------------------------------------------------------------- operator contour calculus

/// T = Q H Q* once, then each shifted solve (z - T) x = b costs O(n^2) on the Hessenberg form.
class HessenbergResolvent {
public:
    explicit HessenbergResolvent(const CMatrix& t) {
        require_square(t, "HessenbergResolvent");
        Eigen::HessenbergDecomposition<CMatrix> hd(t);
        h_ = hd.matrixH();
        q_ = hd.matrixQ();
    }

    /// (z - T)^{-1} B
    CMatrix solve(cplx z, const CMatrix& b) const {
        const Eigen::Index n = h_.rows();
        CMatrix a = -h_;
        a.diagonal().array() += z;
        CMatrix y = q_.adjoint() * b;
        for (Eigen::Index k = 0; k + 1 < n; ++k) {
            if (std::abs(a(k + 1, k)) > std::abs(a(k, k))) {
                a.row(k).tail(n - k).swap(a.row(k + 1).tail(n - k));
                y.row(k).swap(y.row(k + 1));
            }
            if (a(k, k) == cplx(0.0)) throw Error(ErrorKind::NearSingular, "shifted Hessenberg solve hit a zero pivot");
            const cplx l = a(k + 1, k) / a(k, k);
            if (l != cplx(0.0)) {
                a.row(k + 1).tail(n - k) -= l * a.row(k).tail(n - k);
                y.row(k + 1) -= l * y.row(k);
            }
        }
        if (a(n - 1, n - 1) == cplx(0.0)) throw Error(ErrorKind::NearSingular, "shifted Hessenberg solve hit a zero pivot");
        a.triangularView<Eigen::Upper>().solveInPlace(y);
        return q_ * y;
    }

private:
    CMatrix h_, q_;
};

struct OperatorContourInfo {
    ContourSpec spec;
    double kappa = 0.0;
    double omega = 0.0;
    double norm = 0.0;
};

/// Contour from measured constants: theta' midway between omega and pi/2, r_in = kappa/4,
/// r_out = 4 M (1 + ||B||^2). Accepts several operators and encloses all of their nonzero spectra.
inline OperatorContourInfo operator_contour(const std::vector<CMatrix>& ts, double coeff_sup, int nodes = 128) {
    OperatorContourInfo info;
    info.kappa = std::numeric_limits<double>::infinity();
    for (const CMatrix& t : ts) {
        const double m = norm2(t);
        info.norm = std::max(info.norm, m);
        for (const cplx& l : spectrum(t)) {
            const double a = std::abs(l);
            if (a <= 1e-8 * std::max(m, 1.0)) continue;
            info.kappa = std::min(info.kappa, a);
            info.omega = std::max(info.omega, std::atan2(std::abs(l.imag()), std::abs(l.real())));
        }
    }
    if (!std::isfinite(info.kappa)) throw Error(ErrorKind::SplitUndefined, "operator_contour: no nonzero spectrum");
    if (info.omega >= std::numbers::pi / 2 - 1e-8) {
        std::ostringstream os;
        os << "operator spectrum reaches the imaginary axis (omega = " << info.omega << ")";
        throw Error(ErrorKind::NotBisectorial, os.str());
    }
    info.spec.theta_prime = 0.5 * (info.omega + std::numbers::pi / 2);
    info.spec.r_inner = info.kappa / 4.0;
    info.spec.r_outer = 4.0 * info.norm * (1.0 + coeff_sup * coeff_sup);
    info.spec.nodes_per_segment = nodes;
    for (const CMatrix& t : ts) check_inside(spectrum(t), 1e-8 * std::max(info.norm, 1.0), info.spec, 1e-6 * info.kappa);
    return info;
}

inline void require_zero_at_origin(const std::vector<ScalarFn>& fs) {
    for (const auto& f : fs)
        if (std::abs(f(cplx(0.0))) > 0.0)
            throw Error(ErrorKind::InvalidArgument, "operator calculus here needs f(0) = 0 (no kernel projection)");
}

/// f_j(T) B for each f_j, one resolvent per node shared by all f.
inline std::vector<CMatrix> dense_fc_apply(const CMatrix& t, const std::vector<ScalarFn>& fs, const ContourSpec& spec,
                                           const CMatrix& rhs) {
    require_zero_at_origin(fs);
    const HessenbergResolvent hr(t);
    std::vector<CMatrix> out(fs.size(), CMatrix::Zero(t.rows(), rhs.cols()));
    for (const ContourNode& nd : bisector_contour(spec)) {
        const CMatrix x = hr.solve(nd.z, rhs);
        for (size_t j = 0; j < fs.size(); ++j) out[j] += (fs[j](nd.z) * nd.w) * x;
    }
    return out;
}

/// Matrix-free variant with GMRES at each node.
inline std::vector<CVector> krylov_fc_apply(const LinearMap& t, const std::vector<ScalarFn>& fs, const ContourSpec& spec,
                                            const CVector& b, double tol = 1e-12) {
    require_zero_at_origin(fs);
    std::vector<CVector> out(fs.size(), CVector::Zero(b.size()));
    const LinearMap id = [](const CVector& v) { return v; };
    for (const ContourNode& nd : bisector_contour(spec)) {
        const LinearMap a = [&](const CVector& v) -> CVector { return nd.z * v - t(v); };
        const GmresResult g = gmres(a, id, b, {tol, 50, 5000});
        if (!g.converged) {
            std::ostringstream os;
            os << "GMRES stalled at node z = " << nd.z << " (relative residual " << g.rel_residual << ")";
            throw Error(ErrorKind::NoConvergence, os.str());
        }
        for (size_t j = 0; j < fs.size(); ++j) out[j] += (fs[j](nd.z) * nd.w) * g.x;
    }
    return out;
}

// ---------------------------------------------------------------- block correspondence

struct IntertwineReport {
    std::vector<std::string> names;
    std::vector<double> residuals;       // || f(Pi_B)(Au, u) - (A f(DA) u, f(DA) u) || / ||(Au, u)||
    std::vector<double> richardson;      // || f(DA) u at nodes - at 2 nodes || / ||u||
    double max_residual = 0.0;
    OperatorContourInfo contour;
};

inline IntertwineReport intertwine_check(const FirstOrderD& d, const MatrixField& a, const std::vector<NamedFunction>& fs,
                                         int trials, int nodes = 128, std::uint64_t seed = 1) {
    const VariableOp block = build_block(d, a);
    const DAOp da = DAOp::make(d, a);
    const int nn = d.big_n();
    const TorusGrid& gr = a.grid;
    const CMatrix pib = dense_operator(block), tda = da.dense();
    IntertwineReport rep;
    rep.contour = operator_contour({pib, tda}, a.sup_norm(), nodes);
    ContourSpec fine = rep.contour.spec;
    fine.nodes_per_segment = 2 * nodes;
    std::vector<ScalarFn> fv;
    for (const auto& nf : fs) {
        rep.names.push_back(nf.name);
        fv.push_back(nf.f);
    }
    CMatrix us(da.dim(), trials), ws(block.dim(), trials);
    for (int i = 0; i < trials; ++i) {
        const GridField u = random_trig_field(gr, nn, std::max(1, gr.g / 4 - 1), seed + std::uint64_t(i));
        us.col(i) = u.values;
        ws.col(i) = join_blocks(a.apply_values(u.values), u.values, nn);
    }
    const auto lhs = dense_fc_apply(pib, fv, rep.contour.spec, ws);
    const auto half = dense_fc_apply(tda, fv, rep.contour.spec, us);
    const auto half_fine = dense_fc_apply(tda, fv, fine, us);
    for (size_t j = 0; j < fv.size(); ++j) {
        double worst = 0.0, rich = 0.0;
        for (int i = 0; i < trials; ++i) {
            const CVector fu = half[j].col(i);
            const CVector rhs = join_blocks(a.apply_values(fu), fu, nn);
            worst = std::max(worst, (lhs[j].col(i) - rhs).norm() / ws.col(i).norm());
            rich = std::max(rich, (half_fine[j].col(i) - fu).norm() / us.col(i).norm());
        }
        rep.residuals.push_back(worst);
        rep.richardson.push_back(rich);
        rep.max_residual = std::max(rep.max_residual, worst);
    }
    return rep;
}

/// (I + i t Pi_B)^{-1} (a, b) through
///   [[I, -it ADA], [0, I]] diag(I, (I + t^2 (DA)^2)^{-1}) [[I, 0], [-it D, I]],
/// with the middle factor solved by GMRES.
inline CVector three_factor_resolvent(const DAOp& da, double t, const CVector& w, double tol = 1e-12) {
    const int nn = da.d.big_n();
    auto [a, b] = split_blocks(w, nn);
    const cplx it(0.0, t);
    const CVector r = b - it * da.dm.apply_values(a);
    // constant-coefficient preconditioner with the cell average of A
    CMatrix abar = CMatrix::Zero(nn, nn);
    for (const auto& c : da.a.cells) abar += c;
    abar /= double(da.a.cells.size());
    const CMatrix id = CMatrix::Identity(nn, nn);
    const MultiplierOp pre = MultiplierOp::from_function(
        da.grid(), nn, nn,
        [&](const RVector& xi) {
            const CMatrix m = da.d.symbol.eval(xi) * abar;
            return CMatrix((id + t * t * m * m).partialPivLu().inverse());
        },
        id);
    const LinearMap op = [&](const CVector& v) -> CVector { return v + t * t * da.apply(da.apply(v)); };
    const LinearMap m = [&](const CVector& v) -> CVector { return pre.apply_values(v); };
    const GmresResult g = gmres(op, m, r, {tol, 50, 5000});
    if (!g.converged) throw Error(ErrorKind::NotInvertible, "three-factor resolvent: GMRES stalled on I + t^2 (DA)^2");
    const CVector y = g.x;
    const CVector x = a - it * da.a.apply_values(da.apply(y));
    return join_blocks(x, y, nn);
}

// ---------------------------------------------------------------- S_A and T_A

struct SATA {
    VariableOp op;      // Pi_A = Gamma + A1 GammaTilde A2
    CMatrix s;          // 3d x d
    CMatrix t;          // d x 3d
    CMatrix da;         // D A on the 3-fold space
    CMatrix p0, p_gamma, p_gamma_tilde;
    double ts_residual = 0.0;          // || T S - I ||_max
    double intertwine_residual = 0.0;  // || S Pi_A - (DA) S || on random fields, relative
};

/// D = [[0, 0, 0], [0, 0, GammaTilde], [0, Gamma, 0]], A = diag(0, A1, A2);
///   S_A u = (P0 u, A1^{-1} P_GammaTilde_A u, P_Gamma u),  T_A (u, v, w) = P0 u + P_Gamma w + P_GammaTilde_A A1 v.
inline SATA build_SA_TA(const VariableOp& op, const VarProjectionOptions& opt = {}, std::uint64_t seed = 1) {
    const Eigen::Index d = op.dim();
    VarProjectionOptions o = opt;
    o.dense_limit = std::max(o.dense_limit, d);
    const auto limit = hodge_projections_var(op, o);
    // The squared-solve limits carry an O(t^-2) bias; the explicit-basis projections are exact and must agree.
    const DenseProjections pr = hodge_projections_dense_oracle(op);
    const double gap = std::max({(limit.p0 - pr.p0).cwiseAbs().maxCoeff(),
                                 (limit.p_gamma - pr.p_gamma).cwiseAbs().maxCoeff(),
                                 (limit.p_gamma_tilde - pr.p_gamma_tilde).cwiseAbs().maxCoeff()});
    if (gap > 10.0 * o.accept) {
        std::ostringstream os;
        os << "build_SA_TA: limit projections and explicit-basis projections differ by " << gap;
        throw Error(ErrorKind::HodgeDecompositionUncertain, os.str());
    }
    SATA out{op, CMatrix::Zero(3 * d, d), CMatrix::Zero(d, 3 * d), CMatrix(), pr.p0, pr.p_gamma, pr.p_gamma_tilde};
    const CMatrix ainv = restricted_inverse_times(op, pr.p_gamma_tilde);
    const CMatrix a1 = op.coeffs.b1.dense();
    const int nn = op.big_n();
    const Eigen::Index cells = op.grid.cells();
    // 3-fold fields are cell-major with (u, v, w) per cell.
    auto place = [&](CMatrix& m, int slot, const CMatrix& blk, bool rows) {
        for (Eigen::Index c = 0; c < cells; ++c)
            for (Eigen::Index c2 = 0; c2 < cells; ++c2) {
                if (rows)
                    m.block(c * 3 * nn + slot * nn, c2 * nn, nn, nn) = blk.block(c * nn, c2 * nn, nn, nn);
                else
                    m.block(c * nn, c2 * 3 * nn + slot * nn, nn, nn) = blk.block(c * nn, c2 * nn, nn, nn);
            }
    };
    place(out.s, 0, pr.p0, true);
    place(out.s, 1, ainv, true);
    place(out.s, 2, pr.p_gamma, true);
    place(out.t, 0, pr.p0, false);
    place(out.t, 1, CMatrix(pr.p_gamma_tilde * a1), false);
    place(out.t, 2, pr.p_gamma, false);
    const HomogeneousSymbol d3 = detail::embed(op.pair.gamma_tilde, 3, 1, 2) + detail::embed(op.pair.gamma, 3, 2, 1);
    const MultiplierOp dm = MultiplierOp::of_symbol(op.grid, d3);
    const MatrixField zero = MatrixField::constant(op.grid, CMatrix::Zero(nn, nn));
    const MatrixField a3 = detail::block_diag({zero, op.coeffs.b1, op.coeffs.b2});
    out.da = assemble_dense([&](const CVector& v) { return dm.apply_values(a3.apply_values(v)); }, 3 * d);
    out.ts_residual = (out.t * out.s - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
    const GridField u = random_trig_field(op.grid, nn, std::max(1, op.grid.g / 4 - 1), seed);
    const CVector lhs = out.s * op.apply(u.values), rhs = out.da * (out.s * u.values);
    out.intertwine_residual = (lhs - rhs).norm() / std::max(u.values.norm(), 1e-300);
    return out;
}

struct Cor94Report {
    double algebraic_residual = 0.0; // three-term sum vs T_A f S_A u - T_B f S_B u
    double fc_residual = 0.0;        // three-term sum vs f(Pi_A) u - f(Pi_B) u
    double difference_norm = 0.0;
};

inline Cor94Report three_term_check(const SATA& a, const SATA& b, const ScalarFn& f, const CVector& u, int nodes = 128) {
    const double sup = std::max({a.op.coeffs.b1.sup_norm(), a.op.coeffs.b2.sup_norm(), b.op.coeffs.b1.sup_norm(),
                                 b.op.coeffs.b2.sup_norm()});
    const CMatrix pa = dense_operator(a.op), pb = dense_operator(b.op);
    const ContourSpec spec = operator_contour({a.da, b.da, pa, pb}, sup, nodes).spec;
    const CVector sa = a.s * u, sb = b.s * u;
    CMatrix rhs3(a.da.rows(), 2);
    rhs3 << sa, sb;
    const CMatrix fa = dense_fc_apply(a.da, {f}, spec, rhs3).front(); // f(DA) S_A u, f(DA) S_B u
    const CMatrix fb = dense_fc_apply(b.da, {f}, spec, rhs3).front(); // f(DB) S_A u, f(DB) S_B u
    const CVector fda_sa = fa.col(0), fdb_sa = fb.col(0), fdb_sb = fb.col(1);
    const CVector three = (a.t - b.t) * fda_sa + b.t * (fda_sa - fdb_sa) + b.t * (fb.col(0) - fdb_sb);
    const CVector direct = a.t * fda_sa - b.t * fdb_sb;
    CMatrix uu(u.size(), 1);
    uu.col(0) = u;
    const CVector fpa = dense_fc_apply(pa, {f}, spec, uu).front().col(0);
    const CVector fpb = dense_fc_apply(pb, {f}, spec, uu).front().col(0);
    Cor94Report r;
    r.difference_norm = (fpa - fpb).norm();
    r.algebraic_residual = (three - direct).norm() / u.norm();
    r.fc_residual = (three - (fpa - fpb)).norm() / u.norm();
    return r;
}

// ---------------------------------------------------------------- holomorphy and Lipschitz

struct CoefficientPath {
    MatrixField base;
    MatrixField direction;
    MatrixField at(cplx z) const { return base + direction * z; }
};

/// Half the largest radius 2^-k (k = 0..20) at which the block built from every A_z on an m-node circle
/// passes check_B_conditions.
inline double holomorphy_radius(const CoefficientPath& path, const FirstOrderD& d, int m = 8) {
    for (int k = 0; k <= 20; ++k) {
        const double r = std::ldexp(1.0, -k);
        bool ok = true;
        for (int j = 0; j < m && ok; ++j) {
            try {
                build_block(d, path.at(std::polar(r, 2.0 * std::numbers::pi * j / m)));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Precondition) throw;
                ok = false;
            }
        }
        if (ok) return r / 2.0;
    }
    throw Error(ErrorKind::Precondition, "holomorphy_radius: (H2)/(H3) fail at every scale down to 2^-20");
}

struct HolomorphyReport {
    double residual = 0.0; // || mean over circle - center || / || center ||
    double center_norm = 0.0;
    int nodes = 0;
    double radius = 0.0;
    OperatorContourInfo contour;
};

/// Trapezoid rule for (1/2 pi i) \oint f(D A_z) u dz / z on |z| = r against f(D A_0) u.
inline HolomorphyReport holomorphy_probe(const CoefficientPath& path, const FirstOrderD& d, const ScalarFn& f, double r,
                                         int m, const CVector& u, int nodes = 128) {
    if (m < 2) throw Error(ErrorKind::InvalidArgument, "holomorphy_probe: need at least two circle nodes");
    std::vector<CMatrix> ops;
    double sup = path.base.sup_norm();
    ops.push_back(DAOp::make(d, path.base).dense());
    for (int j = 0; j < m; ++j) {
        const cplx z = std::polar(r, 2.0 * std::numbers::pi * j / m);
        const MatrixField az = path.at(z);
        for (const auto& c : az.cells) {
            if (smallest_singular(c) < 1e-6) {
                std::ostringstream os;
                os << "coefficient A_z is singular at circle node z = " << z;
                throw Error(ErrorKind::Precondition, os.str());
            }
        }
        sup = std::max(sup, az.sup_norm());
        ops.push_back(DAOp::make(d, az).dense());
    }
    HolomorphyReport rep;
    rep.nodes = m;
    rep.radius = r;
    try {
        rep.contour = operator_contour(ops, sup, nodes);
    } catch (const Error& e) {
        throw Error(ErrorKind::Precondition, std::string("holomorphy probe aborted: ") + e.what());
    }
    CMatrix b(u.size(), 1);
    b.col(0) = u;
    const CVector center = dense_fc_apply(ops.front(), {f}, rep.contour.spec, b).front().col(0);
    CVector mean = CVector::Zero(u.size());
    for (int j = 0; j < m; ++j) mean += dense_fc_apply(ops[size_t(j + 1)], {f}, rep.contour.spec, b).front().col(0);
    mean /= double(m);
    rep.center_norm = center.norm();
    rep.residual = (mean - center).norm() / std::max(center.norm(), 1e-300);
    return rep;
}

struct LipschitzReport {
    double ratio = 0.0;
    double delta = 0.0;
    double f_sup = 0.0;
    double max_numerator = 0.0; // max ||f(DA)u - f(DA~)u||_p / ||u||_p
};

inline LipschitzReport lipschitz_probe(const FirstOrderD& d, const MatrixField& a, const MatrixField& a_tilde,
                                       const ScalarFn& f, int trials, double p = 2.0, std::uint64_t seed = 1,
                                       int nodes = 128) {
    const DAOp x = DAOp::make(d, a), y = DAOp::make(d, a_tilde);
    const CMatrix tx = x.dense(), ty = y.dense();
    const auto info = operator_contour({tx, ty}, std::max(a.sup_norm(), a_tilde.sup_norm()), nodes);
    LipschitzReport rep;
    rep.delta = (a - a_tilde).sup_norm();
    for (const ContourNode& nd : bisector_contour(info.spec)) rep.f_sup = std::max(rep.f_sup, std::abs(f(nd.z)));
    const TorusGrid& gr = a.grid;
    const int nn = d.big_n();
    CMatrix us(x.dim(), trials);
    for (int i = 0; i < trials; ++i)
        us.col(i) = random_trig_field(gr, nn, std::max(1, gr.g / 4 - 1), seed + std::uint64_t(i)).values;
    const CMatrix fx = dense_fc_apply(tx, {f}, info.spec, us).front();
    const CMatrix fy = dense_fc_apply(ty, {f}, info.spec, us).front();
    for (int i = 0; i < trials; ++i) {
        const GridField diff(gr, nn, fx.col(i) - fy.col(i)), u(gr, nn, us.col(i));
        rep.max_numerator = std::max(rep.max_numerator, lp_norm(diff, p) / lp_norm(u, p));
    }
    if (rep.delta > 0.0 && rep.f_sup > 0.0) rep.ratio = rep.max_numerator / (rep.delta * rep.f_sup);
    return rep;
}

} // namespace hfc
