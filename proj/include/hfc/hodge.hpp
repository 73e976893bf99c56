#pragma once

#include "hfc/error.hpp"
#include "hfc/field_io.hpp"
#include "hfc/krylov.hpp"
#include "hfc/linalg.hpp"
#include "hfc/symbols.hpp"
#include "hfc/torus.hpp"

#include <Eigen/QR>

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace hfc {

struct CoefficientPair {
    MatrixField b1;
    MatrixField b2;

    static CoefficientPair identity(const TorusGrid& gr, int nn) {
        return {MatrixField::identity(gr, nn), MatrixField::identity(gr, nn)};
    }
};

/// Pi_B = Gamma + B1 GammaTilde B2 on the grid.
struct VariableOp {
    HodgeDiracSymbolPair pair;
    CoefficientPair coeffs;
    TorusGrid grid;
    MultiplierOp gamma;
    MultiplierOp gamma_tilde;

    static VariableOp make(const HodgeDiracSymbolPair& p, const CoefficientPair& c, const TorusGrid& gr) {
        p.validate();
        if (p.n() != gr.n) throw Error(ErrorKind::ShapeMismatch, "VariableOp: symbol and grid dimensions differ");
        if (!(c.b1.grid == gr) || !(c.b2.grid == gr) || c.b1.big_n != p.big_n() || c.b2.big_n != p.big_n())
            throw Error(ErrorKind::ShapeMismatch, "VariableOp: coefficient shapes");
        VariableOp op;
        op.pair = p;
        op.coeffs = c;
        op.grid = gr;
        op.gamma = MultiplierOp::of_symbol(gr, p.gamma);
        op.gamma_tilde = MultiplierOp::of_symbol(gr, p.gamma_tilde);
        return op;
    }

    int big_n() const { return pair.big_n(); }
    Eigen::Index dim() const { return grid.cells() * big_n(); }

    CVector apply_gamma(const CVector& v) const { return gamma.apply_values(v); }
    /// B1 GammaTilde B2 v
    CVector apply_gamma_tilde_b(const CVector& v) const {
        return coeffs.b1.apply_values(gamma_tilde.apply_values(coeffs.b2.apply_values(v)));
    }
    CVector apply(const CVector& v) const { return apply_gamma(v) + apply_gamma_tilde_b(v); }
    CVector apply_adjoint(const CVector& v) const {
        return gamma.adjoint().apply_values(v) +
               coeffs.b2.adjoint().apply_values(gamma_tilde.adjoint().apply_values(coeffs.b1.adjoint().apply_values(v)));
    }
    bool constant_identity() const {
        for (size_t c = 0; c < coeffs.b1.cells.size(); ++c)
            if (!coeffs.b1.cells[c].isIdentity(0.0) || !coeffs.b2.cells[c].isIdentity(0.0)) return false;
        return true;
    }
};

inline GridField apply_PiB(const VariableOp& op, const GridField& u) {
    if (!(u.grid == op.grid) || u.big_n != op.big_n()) throw Error(ErrorKind::ShapeMismatch, "apply_PiB: shapes");
    return {op.grid, op.big_n(), op.apply(u.values)};
}

/// Underline operator GammaTilde + B2 Gamma B1: swap the pair and the coefficients.
inline VariableOp underline_op(const VariableOp& op) {
    HodgeDiracSymbolPair sw{op.pair.gamma_tilde, op.pair.gamma};
    return VariableOp::make(sw, {op.coeffs.b2, op.coeffs.b1}, op.grid);
}

inline HomogeneousSymbol adjoint_symbol(const HomogeneousSymbol& s) {
    HomogeneousSymbol a = s;
    for (auto& c : a.coeffs) c.second = c.second.adjoint().eval();
    return a;
}

/// The L^2 adjoint Gamma* + B2* GammaTilde* B1*, again of Hodge-Dirac form.
inline VariableOp adjoint_op(const VariableOp& op) {
    HodgeDiracSymbolPair ad{adjoint_symbol(op.pair.gamma), adjoint_symbol(op.pair.gamma_tilde)};
    return VariableOp::make(ad, {op.coeffs.b2.adjoint(), op.coeffs.b1.adjoint()}, op.grid);
}

// ---------------------------------------------------------------- coefficients

/// Parses "identity", "c*identity", "identity+eps*random(seed)" or a matrix-field file path.
inline MatrixField parse_coefficient(const std::string& expr, const TorusGrid& gr, int nn,
                                     const std::string& base_dir = ".") {
    std::smatch m;
    static const std::regex ident(R"(^\s*identity\s*$)");
    static const std::regex scaled(R"(^\s*([-+0-9.eE]+)\s*\*\s*identity\s*$)");
    static const std::regex pert(R"(^\s*identity\s*\+\s*([-+0-9.eE]+)\s*\*\s*random\(\s*([0-9]+)\s*\)\s*$)");
    if (std::regex_match(expr, ident)) return MatrixField::identity(gr, nn);
    if (std::regex_match(expr, m, scaled))
        return MatrixField::identity(gr, nn) * cplx(std::stod(m[1].str()), 0.0);
    if (std::regex_match(expr, m, pert)) {
        const double eps = std::stod(m[1].str());
        const auto seed = std::stoull(m[2].str());
        return MatrixField::identity(gr, nn) + random_diagonal_field(gr, nn, seed) * cplx(eps, 0.0);
    }
    std::filesystem::path p(expr);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p))
        throw Error(ErrorKind::InvalidArgument, "coefficient expression not understood and no such file: " + expr);
    MatrixField f = read_matrix_field(p.string());
    if (!(f.grid == gr) || f.big_n != nn) throw Error(ErrorKind::ShapeMismatch, "coefficient file shape: " + expr);
    return f;
}

// ---------------------------------------------------------------- (B1) / (B2)

struct BConditionReport {
    double b1_residual = 0.0; // max ||GammaTilde B2 B1 GammaTilde v|| / ||v||
    bool b1_pass = false;
    double c_primal = 0.0;    // min ||B1 u||_p / ||u||_p over u in ran GammaTilde
    double c_dual = 0.0;      // min ||B2* u||_p' / ||u||_p' over u in ran GammaTilde*
    double b1_sup = 0.0;
    double b2_sup = 0.0;
    bool b2_pass = false;
    bool pass = false;
};

inline BConditionReport check_B_conditions(const VariableOp& op, double p, int trials, std::uint64_t seed = 1,
                                           double floor = 1e-6, int band = -1) {
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "check_B_conditions: trials < 1");
    const TorusGrid& gr = op.grid;
    const int nn = op.big_n();
    if (band < 0) band = std::max(1, gr.g / 4);
    const double pd = p / (p - 1.0);
    BConditionReport r;
    r.c_primal = r.c_dual = std::numeric_limits<double>::infinity();
    r.b1_sup = op.coeffs.b1.sup_norm();
    r.b2_sup = op.coeffs.b2.sup_norm();
    const MultiplierOp gt_adj = op.gamma_tilde.adjoint();
    for (int t = 0; t < trials; ++t) {
        const GridField v = random_trig_field(gr, nn, band, seed + std::uint64_t(t));
        const CVector gv = op.gamma_tilde.apply_values(v.values);
        const CVector back = op.gamma_tilde.apply_values(op.coeffs.b2.apply_values(op.coeffs.b1.apply_values(gv)));
        r.b1_residual = std::max(r.b1_residual, back.norm() / v.values.norm());
        const GridField u(gr, nn, gv);
        const double nu = lp_norm(u, p);
        if (nu > 0) r.c_primal = std::min(r.c_primal, lp_norm(op.coeffs.b1.apply(u), p) / nu);
        const GridField ud(gr, nn, gt_adj.apply_values(v.values));
        const double nud = lp_norm(ud, pd);
        if (nud > 0) r.c_dual = std::min(r.c_dual, lp_norm(op.coeffs.b2.adjoint().apply(ud), pd) / nud);
    }
    r.b1_pass = r.b1_residual <= 1e-8;
    r.b2_pass = r.c_primal >= floor && r.c_dual >= floor;
    r.pass = r.b1_pass && r.b2_pass;
    return r;
}

// ---------------------------------------------------------------- resolvents

struct ResolventOptions {
    double tol = 1e-10;
    int restart = 50;
    int max_iter = 5000;
};

struct ResolventResult {
    GridField x;
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Constant-coefficient R_tau multiplier, used as the preconditioner.
inline MultiplierOp r_multiplier(const HodgeDiracSymbolPair& pair, const TorusGrid& gr, cplx tau) {
    const int nn = pair.big_n();
    const CMatrix id = CMatrix::Identity(nn, nn);
    return MultiplierOp::from_function(
        gr, nn, nn, [&](const RVector& xi) { return r_symbol(pair.eval_pi(xi), tau); }, id);
}

/// Solves (I + i tau Pi_B) x = u by preconditioned GMRES.
inline ResolventResult resolvent_PiB(const VariableOp& op, cplx tau, const GridField& u,
                                     const ResolventOptions& opt = {}) {
    if (!(u.grid == op.grid) || u.big_n != op.big_n()) throw Error(ErrorKind::ShapeMismatch, "resolvent_PiB: shapes");
    if (tau == cplx(0.0)) return {u, 0, 0.0};
    const MultiplierOp pre = r_multiplier(op.pair, op.grid, tau);
    const cplx it = cplx(0, 1) * tau;
    LinearMap a = [&](const CVector& v) -> CVector { return v + it * op.apply(v); };
    LinearMap m = [&](const CVector& v) -> CVector { return pre.apply_values(v); };
    const GmresResult g = gmres(a, m, u.values, {opt.tol, opt.restart, opt.max_iter});
    if (!g.converged) {
        std::ostringstream os;
        os << "GMRES stalled at relative residual " << g.rel_residual << " after " << g.iterations
           << " iterations (tau = " << tau << ")";
        throw Error(ErrorKind::NotInvertible, os.str());
    }
    return {GridField(op.grid, op.big_n(), g.x), g.iterations, g.rel_residual};
}

inline ResolventResult resolvent_PiB(const VariableOp& op, double t, const GridField& u,
                                     const ResolventOptions& opt = {}) {
    return resolvent_PiB(op, cplx(t, 0.0), u, opt);
}

inline CMatrix dense_operator(const VariableOp& op) {
    return assemble_dense([&](const CVector& v) { return op.apply(v); }, op.dim());
}
inline CMatrix dense_gamma(const VariableOp& op) {
    return assemble_dense([&](const CVector& v) { return op.apply_gamma(v); }, op.dim());
}
inline CMatrix dense_gamma_tilde_b(const VariableOp& op) {
    return assemble_dense([&](const CVector& v) { return op.apply_gamma_tilde_b(v); }, op.dim());
}

/// Dense LU reference for (I + i tau Pi_B)^{-1} u.
inline GridField resolvent_PiB_dense(const VariableOp& op, cplx tau, const GridField& u) {
    const CMatrix a = CMatrix::Identity(op.dim(), op.dim()) + cplx(0, 1) * tau * dense_operator(op);
    return {op.grid, op.big_n(), a.partialPivLu().solve(u.values)};
}

// ---------------------------------------------------------------- projections

struct ConstHodgeProjections {
    MultiplierOp p0;
    MultiplierOp p_gamma;
    MultiplierOp p_gamma_tilde;
};

/// Per-frequency projections from the basis [ker Pi | ran Gamma | ran GammaTilde].
inline ConstHodgeProjections hodge_projections_const(const HodgeDiracSymbolPair& pair, const TorusGrid& gr) {
    pair.validate();
    const int nn = pair.big_n();
    ConstHodgeProjections out;
    out.p0 = MultiplierOp::identity(gr, nn);
    out.p_gamma = out.p0 * 0.0;
    out.p_gamma_tilde = out.p0 * 0.0;
    for (Eigen::Index c = 1; c < gr.cells(); ++c) {
        const RVector xi = gr.frequency(c);
        const CMatrix g = pair.gamma.eval(xi), gt = pair.gamma_tilde.eval(xi);
        const CMatrix k = null_space(g + gt), rg = column_space(g), rt = column_space(gt);
        if (k.cols() + rg.cols() + rt.cols() != nn) {
            std::ostringstream os;
            os << "subspace dimensions " << k.cols() << "+" << rg.cols() << "+" << rt.cols() << " != " << nn
               << " at xi = " << xi.transpose();
            throw Error(ErrorKind::HodgeDecompositionUncertain, os.str());
        }
        CMatrix basis(nn, nn);
        basis << k, rg, rt;
        if (smallest_singular(basis) < 1e-10) {
            std::ostringstream os;
            os << "basis matrix is singular at xi = " << xi.transpose();
            throw Error(ErrorKind::HodgeDecompositionUncertain, os.str());
        }
        const CMatrix inv = basis.inverse();
        auto sel = [&](Eigen::Index from, Eigen::Index count) {
            CMatrix s = CMatrix::Zero(nn, nn);
            for (Eigen::Index i = from; i < from + count; ++i) s(i, i) = 1.0;
            return CMatrix(basis * s * inv);
        };
        out.p0.symbol[size_t(c)] = sel(0, k.cols());
        out.p_gamma.symbol[size_t(c)] = sel(k.cols(), rg.cols());
        out.p_gamma_tilde.symbol[size_t(c)] = sel(k.cols() + rg.cols(), rt.cols());
    }
    return out;
}

struct VarProjectionOptions {
    std::vector<double> ts = {1024.0, 4096.0, 16384.0};
    double accept = 1e-6;
    Eigen::Index dense_limit = 1024;
    int probes = 3;
    double krylov_tol = 1e-12;
};

/// Hodge projections of Pi_B from the large-t limits
///   P0 = lim (I + t^2 Pi_B^2)^{-1},  P_Gamma = lim Gamma t^2 Pi_B (I + t^2 Pi_B^2)^{-1}
/// and likewise for B1 GammaTilde B2. With z solving (t^{-2} + Pi_B^2) z = Pi_B u,
/// the three are u - Pi_B z, Gamma z and B1 GammaTilde B2 z.
/// Dense matrices on small grids, matrix-free otherwise.
struct VarHodgeProjections {
    std::vector<double> ts;
    std::vector<double> cauchy_diffs; // between consecutive t
    bool dense = false;
    CMatrix p0, p_gamma, p_gamma_tilde;
    std::shared_ptr<const VariableOp> op;
    double t_final = 0.0;
    double krylov_tol = 1e-12;

    struct Parts {
        GridField p0, p_gamma, p_gamma_tilde;
    };

    Parts apply_all(const GridField& u) const {
        if (dense)
            return {{u.grid, u.big_n, p0 * u.values},
                    {u.grid, u.big_n, p_gamma * u.values},
                    {u.grid, u.big_n, p_gamma_tilde * u.values}};
        const CVector z = solve_z(u.values);
        return {{u.grid, u.big_n, u.values - op->apply(z)},
                {u.grid, u.big_n, op->apply_gamma(z)},
                {u.grid, u.big_n, op->apply_gamma_tilde_b(z)}};
    }
    GridField apply_p0(const GridField& u) const { return apply_all(u).p0; }
    GridField apply_p_gamma(const GridField& u) const { return apply_all(u).p_gamma; }
    GridField apply_p_gamma_tilde(const GridField& u) const { return apply_all(u).p_gamma_tilde; }

private:
    CVector solve_z(const CVector& u) const {
        const double s = 1.0 / (t_final * t_final);
        const int nn = op->big_n();
        const CMatrix id = CMatrix::Identity(nn, nn);
        const MultiplierOp pre = MultiplierOp::from_function(
            op->grid, nn, nn,
            [&](const RVector& xi) {
                const CMatrix pi = op->pair.eval_pi(xi);
                return CMatrix((s * id + pi * pi).partialPivLu().inverse());
            },
            id / s);
        LinearMap a = [&](const CVector& v) -> CVector { return s * v + op->apply(op->apply(v)); };
        LinearMap m = [&](const CVector& v) -> CVector { return pre.apply_values(v); };
        const GmresResult g = gmres(a, m, op->apply(u), {krylov_tol, 50, 5000});
        if (!g.converged) {
            std::ostringstream os;
            os << "GMRES stalled at relative residual " << g.rel_residual << " for t = " << t_final;
            throw Error(ErrorKind::NotInvertible, os.str());
        }
        return g.x;
    }
};

inline VarHodgeProjections hodge_projections_var(const VariableOp& op, const VarProjectionOptions& opt = {}) {
    if (opt.ts.size() < 2) throw Error(ErrorKind::InvalidArgument, "hodge_projections_var: need at least two t values");
    VarHodgeProjections out;
    out.ts = opt.ts;
    out.op = std::make_shared<const VariableOp>(op);
    out.t_final = opt.ts.back();
    out.krylov_tol = opt.krylov_tol;
    const Eigen::Index d = op.dim();
    if (d <= opt.dense_limit) {
        out.dense = true;
        const CMatrix a = dense_operator(op), g = dense_gamma(op), gtb = dense_gamma_tilde_b(op);
        const CMatrix id = CMatrix::Identity(d, d);
        CMatrix prev0, prevg, prevt;
        for (size_t k = 0; k < opt.ts.size(); ++k) {
            const double t = opt.ts[k];
            const CMatrix z = (id / (t * t) + a * a).partialPivLu().solve(a);
            CMatrix q0 = id - a * z, qg = g * z, qt = gtb * z;
            if (k > 0)
                out.cauchy_diffs.push_back(
                    std::max({norm2(q0 - prev0), norm2(qg - prevg), norm2(qt - prevt)}));
            prev0 = std::move(q0);
            prevg = std::move(qg);
            prevt = std::move(qt);
        }
        out.p0 = prev0;
        out.p_gamma = prevg;
        out.p_gamma_tilde = prevt;
    } else {
        std::vector<GridField> probes;
        for (int i = 0; i < opt.probes; ++i)
            probes.push_back(random_trig_field(op.grid, op.big_n(), std::max(1, op.grid.g / 4), 9001 + std::uint64_t(i)));
        std::vector<std::vector<GridField>> prev;
        for (size_t k = 0; k < opt.ts.size(); ++k) {
            VarHodgeProjections at = out;
            at.t_final = opt.ts[k];
            std::vector<GridField> cur;
            for (const auto& v : probes) {
                auto parts = at.apply_all(v);
                cur.push_back(std::move(parts.p0));
                cur.push_back(std::move(parts.p_gamma));
                cur.push_back(std::move(parts.p_gamma_tilde));
            }
            if (k > 0) {
                double dmax = 0.0;
                for (size_t i = 0; i < cur.size(); ++i)
                    dmax = std::max(dmax, (cur[i] - prev.back()[i]).values.norm() / probes[i / 3].values.norm());
                out.cauchy_diffs.push_back(dmax);
            }
            prev.push_back(std::move(cur));
        }
    }
    if (!(out.cauchy_diffs.back() <= opt.accept)) {
        std::ostringstream os;
        os << "limit formulas did not settle; Cauchy differences:";
        for (double c : out.cauchy_diffs) os << " " << c;
        throw Error(ErrorKind::HodgeDecompositionUncertain, os.str());
    }
    return out;
}

struct DenseProjections {
    CMatrix p0, p_gamma, p_gamma_tilde;
};

/// Reference projections from explicit bases of ker Pi_B, ran Gamma and ran B1 GammaTilde B2.
inline DenseProjections hodge_projections_dense_oracle(const VariableOp& op) {
    const Eigen::Index d = op.dim();
    const CMatrix k = null_space(dense_operator(op), 1e-9);
    const CMatrix rg = column_space(dense_gamma(op), 1e-9);
    const CMatrix rt = column_space(dense_gamma_tilde_b(op), 1e-9);
    if (k.cols() + rg.cols() + rt.cols() != d) {
        std::ostringstream os;
        os << "dense subspace dimensions " << k.cols() << "+" << rg.cols() << "+" << rt.cols() << " != " << d;
        throw Error(ErrorKind::HodgeDecompositionUncertain, os.str());
    }
    CMatrix basis(d, d);
    basis << k, rg, rt;
    const CMatrix inv = basis.partialPivLu().inverse();
    auto sel = [&](Eigen::Index from, Eigen::Index count) {
        return CMatrix(basis.middleCols(from, count) * inv.middleRows(from, count));
    };
    return {sel(0, k.cols()), sel(k.cols(), rg.cols()), sel(k.cols() + rg.cols(), rt.cols())};
}

// ---------------------------------------------------------------- perturbation

struct PerturbSplitResult {
    CMatrix p0_new, p1_new;
    double d0 = 0.0; // ||p0_new - p0||
    double d1 = 0.0;
    double t_norm = 0.0;
};

/// New splitting X = X0 (+) (I - T) X1 with U = (I - T P1)^{-1}.
inline PerturbSplitResult perturb_split(const CMatrix& p0, const CMatrix& p1, const CMatrix& t_op) {
    const Eigen::Index d = p0.rows();
    if (p1.rows() != d || t_op.rows() != d || p0.cols() != d || p1.cols() != d || t_op.cols() != d)
        throw Error(ErrorKind::ShapeMismatch, "perturb_split: shapes");
    PerturbSplitResult r;
    r.t_norm = norm2(t_op);
    const double lim = 1.0 / (2.0 * std::max(norm2(p1), 1e-300));
    if (!(r.t_norm < lim)) {
        std::ostringstream os;
        os << "||T|| = " << r.t_norm << " is not below 1/(2||P1||) = " << lim;
        throw Error(ErrorKind::PerturbationTooLarge, os.str());
    }
    const CMatrix id = CMatrix::Identity(d, d);
    const CMatrix a = id - t_op * p1;
    Eigen::PartialPivLU<CMatrix> lu(a);
    const CMatrix u = lu.inverse();
    if (!u.allFinite() || (a * u - id).norm() > 1e-8)
        throw Error(ErrorKind::PerturbationTooLarge, "I - T P1 could not be inverted");
    r.p0_new = p0 * u;
    r.p1_new = a * p1 * u;
    r.d0 = norm2(r.p0_new - p0);
    r.d1 = norm2(r.p1_new - p1);
    return r;
}

/// B1^{-1} restricted to ran(B1 GammaTilde B2), mapped back into ran(GammaTilde), composed with P.
inline CMatrix restricted_inverse_times(const VariableOp& op, const CMatrix& p_gamma_tilde) {
    const CMatrix rt = column_space(dense_gamma_tilde_b(VariableOp::make(
        op.pair, CoefficientPair::identity(op.grid, op.big_n()), op.grid)), 1e-9);
    const CMatrix a1rt = op.coeffs.b1.dense() * rt;
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(a1rt);
    return rt * cod.pseudoInverse() * p_gamma_tilde;
}

struct PerturbHodgeReport {
    double delta = 0.0;
    double diff_p0 = 0.0, diff_p_gamma = 0.0, diff_p_gamma_tilde = 0.0;
    double diff_restricted = 0.0; // || A1^{-1} P^A - B1^{-1} P^B ||
    std::optional<double> ratio_p0, ratio_p_gamma, ratio_p_gamma_tilde, ratio_restricted;
    std::optional<double> ratio_sum;
};

inline PerturbHodgeReport perturb_hodge(const VariableOp& a, const VariableOp& b, const VarProjectionOptions& opt = {}) {
    if (!(a.grid == b.grid) || a.big_n() != b.big_n()) throw Error(ErrorKind::ShapeMismatch, "perturb_hodge: shapes");
    PerturbHodgeReport r;
    r.delta = (b.coeffs.b1 - a.coeffs.b1).sup_norm() + (b.coeffs.b2 - a.coeffs.b2).sup_norm();
    VarProjectionOptions o = opt;
    o.dense_limit = std::max(o.dense_limit, a.dim());
    const auto pa = hodge_projections_var(a, o), pb = hodge_projections_var(b, o);
    r.diff_p0 = power_norm(CMatrix(pa.p0 - pb.p0));
    r.diff_p_gamma = power_norm(CMatrix(pa.p_gamma - pb.p_gamma));
    r.diff_p_gamma_tilde = power_norm(CMatrix(pa.p_gamma_tilde - pb.p_gamma_tilde));
    r.diff_restricted = power_norm(CMatrix(restricted_inverse_times(a, pa.p_gamma_tilde) -
                                           restricted_inverse_times(b, pb.p_gamma_tilde)));
    if (r.delta > 0.0) {
        r.ratio_p0 = r.diff_p0 / r.delta;
        r.ratio_p_gamma = r.diff_p_gamma / r.delta;
        r.ratio_p_gamma_tilde = r.diff_p_gamma_tilde / r.delta;
        r.ratio_restricted = r.diff_restricted / r.delta;
        r.ratio_sum = (r.diff_p0 + r.diff_p_gamma + r.diff_p_gamma_tilde) / r.delta;
    }
    return r;
}

} // namespace hfc
