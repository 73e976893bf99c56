#pragma once

#include "hfc/error.hpp"
#include "hfc/hodge.hpp"
#include "hfc/matcalc.hpp"
#include "hfc/torus.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <vector>

namespace hfc {

struct DyadicScales {
    int k_min = -20;
    int k_max = 20;

    void validate() const {
        if (k_min > k_max) throw Error(ErrorKind::InvalidArgument, "DyadicScales: k_min > k_max");
        if (k_max - k_min + 1 > 64) throw Error(ErrorKind::InvalidArgument, "DyadicScales: more than 64 scales");
    }
    int count() const { return k_max - k_min + 1; }
    static double t(int k) { return std::ldexp(1.0, k); }
};

struct RademacherEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int samples = 0;
    double mean_sq = 0.0; // E || sum ||^2
    double std_error_sq = 0.0;

    double ci95() const { return 1.96 * std_error; }
};

/// Monte-Carlo E || sum_k eps_k v_k ||_p over `samples` sign vectors.
inline RademacherEstimate rademacher_norm(const std::vector<GridField>& v, double p, int samples, std::uint64_t seed = 1) {
    if (v.empty()) throw Error(ErrorKind::InvalidArgument, "rademacher_norm: empty family");
    if (samples < 1) throw Error(ErrorKind::InvalidArgument, "rademacher_norm: samples < 1");
    for (const auto& f : v) v.front().check(f);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    double s1 = 0, s2 = 0, s4 = 0;
    GridField acc(v.front().grid, v.front().big_n);
    for (int s = 0; s < samples; ++s) {
        acc.values.setZero();
        for (const auto& f : v) {
            if (coin(rng)) acc.values += f.values;
            else acc.values -= f.values;
        }
        const double x = lp_norm(acc, p);
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    RademacherEstimate r;
    r.samples = samples;
    r.mean = s1 / samples;
    r.mean_sq = s2 / samples;
    if (samples > 1) {
        const double var = std::max(0.0, (s2 - samples * r.mean * r.mean) / (samples - 1));
        const double var_sq = std::max(0.0, (s4 - samples * r.mean_sq * r.mean_sq) / (samples - 1));
        r.std_error = std::sqrt(var / samples);
        r.std_error_sq = std::sqrt(var_sq / samples);
    }
    return r;
}

using FieldOp = std::function<GridField(const GridField&)>;

inline RademacherEstimate rademacher_norm(const std::vector<FieldOp>& ops, const std::vector<GridField>& u, double p,
                                          int samples, std::uint64_t seed = 1) {
    if (ops.size() != u.size()) throw Error(ErrorKind::ShapeMismatch, "rademacher_norm: family and fields differ in length");
    std::vector<GridField> v;
    v.reserve(u.size());
    for (size_t k = 0; k < u.size(); ++k) v.push_back(ops[k](u[k]));
    return rademacher_norm(v, p, samples, seed);
}

// ---------------------------------------------------------------- scale families

/// t -> Q_t as an operator on fields.
using ScaleOp = std::function<GridField(double, const GridField&)>;

inline MultiplierOp q_multiplier(const HodgeDiracSymbolPair& pair, const TorusGrid& gr, double t) {
    const int nn = pair.big_n();
    return MultiplierOp::from_function(
        gr, nn, nn, [&](const RVector& xi) { return q_symbol(pair.eval_pi(xi), cplx(t, 0.0)); }, CMatrix::Zero(nn, nn));
}

/// Constant-coefficient Q_t with the multipliers cached per t.
inline ScaleOp q_family(const HodgeDiracSymbolPair& pair, const TorusGrid& gr) {
    struct Cache {
        std::mutex mu;
        std::map<double, std::shared_ptr<const MultiplierOp>> ops;
    };
    auto cache = std::make_shared<Cache>();
    return [pair, gr, cache](double t, const GridField& u) {
        std::shared_ptr<const MultiplierOp> m;
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->ops.find(t);
            if (it == cache->ops.end())
                it = cache->ops.emplace(t, std::make_shared<const MultiplierOp>(q_multiplier(pair, gr, t))).first;
            m = it->second;
        }
        return apply_multiplier(*m, u);
    };
}

/// Q_t^B u = t R_t R_{-t} Pi_B u, two resolvent solves and no cancellation at small t.
inline ScaleOp q_family(const VariableOp& op, double tol = 1e-10) {
    auto shared = std::make_shared<const VariableOp>(op);
    return [shared, tol](double t, const GridField& u) {
        if (t == 0.0) return GridField(u.grid, u.big_n);
        ResolventOptions o;
        o.tol = tol;
        GridField v = apply_PiB(*shared, u);
        v = resolvent_PiB(*shared, -t, v, o).x;
        return resolvent_PiB(*shared, t, v, o).x * cplx(t, 0.0);
    };
}

// ---------------------------------------------------------------- reproducing formula

/// (3/2) sum_{k = k_min}^{k_max} Q_{2^k} Q_{2^{k+1}} u
inline GridField reproducing_sum(const HodgeDiracSymbolPair& pair, const GridField& u, const DyadicScales& sc) {
    sc.validate();
    pair.validate();
    GridField acc(u.grid, u.big_n);
    const ScaleOp q = q_family(pair, u.grid);
    for (int k = sc.k_min; k <= sc.k_max; ++k) acc = acc + q(DyadicScales::t(k), q(DyadicScales::t(k + 1), u));
    return acc * 1.5;
}

/// The scalar telescoping value p(2^{k_min} x) - p(2^{k_max + 1} x) with p(x) = 1/(1 + x^2).
inline double telescoping_scalar(double x, const DyadicScales& sc) {
    auto p = [](double y) { return 1.0 / (1.0 + y * y); };
    return p(DyadicScales::t(sc.k_min) * x) - p(DyadicScales::t(sc.k_max + 1) * x);
}

// ---------------------------------------------------------------- eta and the Schur probe

inline double eta(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "eta: x must be positive and finite");
    const double lo = std::min(x, 1.0 / x), hi = std::max(x, 1.0 / x);
    return lo * (1.0 + std::log(hi));
}

/// f(Pi(xi)) per frequency. Uses homogeneity: f(|xi| T) with T = Pi(xi / |xi|) keeps the contour fixed in size.
inline MultiplierOp function_multiplier(const HodgeDiracSymbolPair& pair, const TorusGrid& gr,
                                        const std::function<cplx(cplx)>& f, int nodes = 128) {
    const int nn = pair.big_n();
    const cplx f0 = f(cplx(0.0));
    return MultiplierOp::from_function(
        gr, nn, nn,
        [&](const RVector& xi) {
            const double r = xi.norm();
            const CMatrix t = pair.eval_pi(xi / r);
            return contour_fc(t, [&](cplx z) { return f(r * z); }, nodes, f0);
        },
        f0 * CMatrix::Identity(nn, nn));
}

struct SchurProbe {
    double max_ratio = 0.0;    // sampled L^p estimate
    double max_ratio_l2 = 0.0; // exact L^2 multiplier norm over eta
    double worst_t = 0.0, worst_s = 0.0;
};

/// max over (t, s) of ||Q_t f(Pi) Q_s|| / eta(s / t), estimated on `trials` random band-limited inputs.
inline SchurProbe schur_bound_probe(const HodgeDiracSymbolPair& pair, const TorusGrid& gr, const MultiplierOp& f_pi,
                                    const std::vector<double>& ts, const std::vector<double>& ss, int trials, double p = 2.0,
                                    std::uint64_t seed = 1, int band = -1) {
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "schur_bound_probe: trials < 1");
    const int nn = pair.big_n();
    if (band < 0) band = std::max(1, gr.g / 4 - 1);
    std::vector<GridField> inputs;
    std::vector<double> norms;
    for (int i = 0; i < trials; ++i) {
        inputs.push_back(random_trig_field(gr, nn, band, seed + std::uint64_t(i)));
        norms.push_back(lp_norm(inputs.back(), p));
    }
    std::map<double, MultiplierOp> qs;
    auto q = [&](double t) -> const MultiplierOp& {
        auto it = qs.find(t);
        if (it == qs.end()) it = qs.emplace(t, q_multiplier(pair, gr, t)).first;
        return it->second;
    };
    SchurProbe out;
    for (double t : ts)
        for (double s : ss) {
            const MultiplierOp m = q(t) * f_pi * q(s);
            const double e = eta(s / t);
            double best = 0.0;
            for (int i = 0; i < trials; ++i)
                if (norms[size_t(i)] > 0) best = std::max(best, lp_norm(apply_multiplier(m, inputs[size_t(i)]), p) / norms[size_t(i)]);
            if (best / e > out.max_ratio) {
                out.max_ratio = best / e;
                out.worst_t = t;
                out.worst_s = s;
            }
            out.max_ratio_l2 = std::max(out.max_ratio_l2, m.l2_norm() / e);
        }
    return out;
}

// ---------------------------------------------------------------- quadratic estimates

struct QuadEstimate {
    RademacherEstimate est;
    double u_norm = 0.0;
    double ratio = 0.0;    // mean / ||u||_p, 0 when u = 0
    double constant = 0.0; // max(ratio, 1/ratio): the two-sided constant this input witnesses
};

inline QuadEstimate quadratic_estimate(const ScaleOp& q, const GridField& u, const DyadicScales& sc, double p,
                                       int samples, std::uint64_t seed = 1) {
    sc.validate();
    std::vector<GridField> v;
    for (int k = sc.k_min; k <= sc.k_max; ++k) v.push_back(q(DyadicScales::t(k), u));
    QuadEstimate r;
    r.est = rademacher_norm(v, p, samples, seed);
    r.u_norm = lp_norm(u, p);
    if (r.u_norm > 0) r.ratio = r.est.mean / r.u_norm;
    r.constant = r.ratio > 0 ? std::max(r.ratio, 1.0 / r.ratio) : std::numeric_limits<double>::infinity();
    return r;
}

inline QuadEstimate quadratic_estimate(const HodgeDiracSymbolPair& pair, const GridField& u, const DyadicScales& sc,
                                       double p, int samples, std::uint64_t seed = 1) {
    return quadratic_estimate(q_family(pair, u.grid), u, sc, p, samples, seed);
}

inline QuadEstimate quadratic_estimate(const VariableOp& op, const GridField& u, const DyadicScales& sc, double p,
                                       int samples, std::uint64_t seed = 1) {
    return quadratic_estimate(q_family(op), u, sc, p, samples, seed);
}

/// E || sum_k eps_k Q_{2^k} u ||_2^2 for constant coefficients, frequency by frequency.
inline double quadest_l2_expectation(const HodgeDiracSymbolPair& pair, const GridField& u, const DyadicScales& sc) {
    const TorusGrid& gr = u.grid;
    const CVector hat = fft_forward(gr, u.big_n, u.values);
    double sum = 0.0;
    for (Eigen::Index c = 1; c < gr.cells(); ++c) {
        const CMatrix pi = pair.eval_pi(gr.frequency(c));
        const CVector uc = hat.segment(c * u.big_n, u.big_n);
        for (int k = sc.k_min; k <= sc.k_max; ++k) sum += (q_symbol(pi, DyadicScales::t(k)) * uc).squaredNorm();
    }
    // Parseval on the grid: ||u||^2 = vol * sum |u(x)|^2 = vol / g^n * sum |hat|^2
    return sum * gr.cell_volume() / double(gr.cells());
}

inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

struct TranslatedEstimate {
    RademacherEstimate est;
    double u_norm = 0.0;
    double raw = 0.0;   // mean / ||u||_p
    double ratio = 0.0; // raw / (1 + log+ |z|)
};

/// E || sum_k eps_k tau_{2^k z} Q_{2^k} u ||_p against (1 + log+ |z|) ||u||_p.
inline TranslatedEstimate translated_quadest(const HodgeDiracSymbolPair& pair, const GridField& u, const RVector& z,
                                             const DyadicScales& sc, double p, int samples, std::uint64_t seed = 1) {
    sc.validate();
    const ScaleOp q = q_family(pair, u.grid);
    std::vector<GridField> v;
    for (int k = sc.k_min; k <= sc.k_max; ++k) {
        const double t = DyadicScales::t(k);
        v.push_back(translate(q(t, u), t * z));
    }
    TranslatedEstimate r;
    r.est = rademacher_norm(v, p, samples, seed);
    r.u_norm = lp_norm(u, p);
    if (r.u_norm > 0) r.raw = r.est.mean / r.u_norm;
    r.ratio = r.raw / (1.0 + log_plus(z.norm()));
    return r;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidArgument, "fit_slope: need two or more points");
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

// ---------------------------------------------------------------- principal part

/// Cube side at dyadic level j: 2^j cells. Valid when 2^j divides g.
inline double cube_scale(const TorusGrid& gr, int j) {
    if (j < 0 || gr.g % (1 << j) != 0) throw Error(ErrorKind::InvalidArgument, "cube_scale: 2^j must divide g");
    return std::ldexp(gr.h(), j);
}

inline int cube_cells(const TorusGrid& gr, double t) {
    const double m = t / gr.h();
    const int mi = int(std::lround(m));
    if (std::abs(m - mi) > 1e-9 * std::max(1.0, m) || !is_power_of_two(mi) || gr.g % mi != 0) {
        std::ostringstream os;
        os << "scale t = " << t << " is not a dyadic multiple of the cell size dividing the grid";
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
    return mi;
}

struct PrincipalPart {
    GridField gamma_w;       // sum over cubes of Q_t^B (w 1_Q)
    double direct_diff = 0;  // || gamma_w - Q_t^B (w 1) || / max(||w 1||, tiny)
};

inline PrincipalPart principal_part(const ScaleOp& q, const TorusGrid& gr, double t, const CVector& w) {
    const int m = cube_cells(gr, t);
    const int nn = int(w.size());
    const int nb = gr.g / m;
    const Eigen::Index cubes = Eigen::Index(std::pow(nb, gr.n));
    PrincipalPart out{GridField(gr, nn), 0.0};
    for (Eigen::Index b = 0; b < cubes; ++b) {
        GridField ind(gr, nn);
        for (Eigen::Index c = 0; c < gr.cells(); ++c) {
            auto idx = gr.unflatten(c);
            Eigen::Index id = 0;
            for (int a = 0; a < gr.n; ++a) id = id * nb + idx[a] / m;
            if (id == b) ind.at(c) = w;
        }
        out.gamma_w = out.gamma_w + q(t, ind);
    }
    const GridField full = constant_field(gr, w);
    const GridField direct = q(t, full);
    out.direct_diff = (out.gamma_w - direct).values.norm() / std::max(full.values.norm(), 1e-300);
    return out;
}

inline PrincipalPart principal_part(const VariableOp& op, double t, const CVector& w) {
    return principal_part(q_family(op), op.grid, t, w);
}

/// gamma_t(x) as a matrix field, column j from w = e_j.
inline MatrixField principal_part_matrix(const ScaleOp& q, const TorusGrid& gr, int nn, double t) {
    MatrixField g = MatrixField::constant(gr, CMatrix::Zero(nn, nn));
    for (int j = 0; j < nn; ++j) {
        const GridField col = principal_part(q, gr, t, CVector::Unit(nn, j)).gamma_w;
        for (Eigen::Index c = 0; c < gr.cells(); ++c) g.cells[size_t(c)].col(j) = col.at(c);
    }
    return g;
}

// ---------------------------------------------------------------- off-diagonal decay

inline double torus_distance(const TorusGrid& gr, const RVector& x, const RVector& y) {
    double s = 0.0;
    for (int a = 0; a < gr.n; ++a) {
        double d = std::fmod(std::abs(x(a) - y(a)), gr.length);
        d = std::min(d, gr.length - d);
        s += d * d;
    }
    return std::sqrt(s);
}

using CellMask = std::vector<bool>;

inline double mask_distance(const TorusGrid& gr, const CellMask& e, const CellMask& f) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < gr.cells(); ++a) {
        if (!e[size_t(a)]) continue;
        for (Eigen::Index b = 0; b < gr.cells(); ++b)
            if (f[size_t(b)]) best = std::min(best, torus_distance(gr, gr.position(a), gr.position(b)));
    }
    return best;
}

inline GridField restrict_to(const GridField& u, const CellMask& m) {
    GridField out = u;
    for (Eigen::Index c = 0; c < u.grid.cells(); ++c)
        if (!m[size_t(c)]) out.at(c).setZero();
    return out;
}

/// max over trials of || 1_E Q_t 1_F u ||_p / || 1_F u ||_p.
inline double offdiag_ratio(const ScaleOp& q, const TorusGrid& gr, int nn, double t, const CellMask& e, const CellMask& f,
                            int trials, double p, std::uint64_t seed = 1) {
    for (Eigen::Index c = 0; c < gr.cells(); ++c)
        if (e[size_t(c)] && f[size_t(c)]) throw Error(ErrorKind::Precondition, "offdiag: E and F overlap");
    double best = 0.0;
    for (int i = 0; i < trials; ++i) {
        std::mt19937_64 rng(seed + std::uint64_t(i));
        const GridField u = restrict_to(GridField(gr, nn, random_complex(gr.cells() * nn, 1, rng)), f);
        const double nu = lp_norm(u, p);
        if (nu > 0) best = std::max(best, lp_norm(restrict_to(q(t, u), e), p) / nu);
    }
    return best;
}

struct OffdiagRow {
    double rho = 0.0;
    double distance = 0.0;
    double ratio = 0.0;
};

struct OffdiagTable {
    std::vector<OffdiagRow> rows;
    double decay_exponent = 0.0; // M-hat from log ratio against log(1 + rho)
};

/// F = ball of radius L/8 around the origin; E = cells at torus distance >= L/8 + rho t from the origin.
inline OffdiagTable offdiag_probe(const ScaleOp& q, const TorusGrid& gr, int nn, double t, const std::vector<double>& rhos,
                                  int trials, double p = 2.0, std::uint64_t seed = 1) {
    OffdiagTable out;
    const RVector origin = RVector::Zero(gr.n);
    const double rf = gr.length / 8.0;
    CellMask f(size_t(gr.cells()));
    for (Eigen::Index c = 0; c < gr.cells(); ++c) f[size_t(c)] = torus_distance(gr, gr.position(c), origin) <= rf;
    std::vector<double> lx, ly;
    for (double rho : rhos) {
        if (!(rho > 0.0)) throw Error(ErrorKind::Precondition, "offdiag_probe: separation must be positive");
        CellMask e(size_t(gr.cells()));
        bool any = false;
        for (Eigen::Index c = 0; c < gr.cells(); ++c) {
            e[size_t(c)] = torus_distance(gr, gr.position(c), origin) >= rf + rho * t;
            any = any || e[size_t(c)];
        }
        if (!any) {
            std::ostringstream os;
            os << "offdiag_probe: no cells at separation rho = " << rho << " for t = " << t;
            throw Error(ErrorKind::Precondition, os.str());
        }
        OffdiagRow row{rho, mask_distance(gr, e, f), offdiag_ratio(q, gr, nn, t, e, f, trials, p, seed)};
        out.rows.push_back(row);
        if (row.ratio > 0) {
            lx.push_back(std::log1p(rho));
            ly.push_back(std::log(row.ratio));
        }
    }
    if (lx.size() >= 2) out.decay_exponent = -fit_slope(lx, ly);
    return out;
}

// ---------------------------------------------------------------- calculus bound

/// max over trials of ||f(Pi) u||_p / (||f||_inf ||u||_p), with ||f||_inf taken on the multiplier symbols.
inline double fc_bound_probe(const MultiplierOp& f_pi, const TorusGrid& gr, int nn, int trials, double p,
                             std::uint64_t seed = 1, int band = -1) {
    if (band < 0) band = std::max(1, gr.g / 4 - 1);
    double fsup = 0.0;
    for (const auto& s : f_pi.symbol) fsup = std::max(fsup, norm2(s));
    if (fsup == 0.0) return 0.0;
    double best = 0.0;
    for (int i = 0; i < trials; ++i) {
        const GridField u = random_trig_field(gr, nn, band, seed + std::uint64_t(i));
        best = std::max(best, lp_norm(apply_multiplier(f_pi, u), p) / lp_norm(u, p));
    }
    return best / fsup;
}

} // namespace hfc
