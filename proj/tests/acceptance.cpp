// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "fixtures.hpp"
#include "oracles.hpp"
#include "hfc/suites.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

using namespace hfc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void need(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!ok) detail += (detail.empty() ? "failed: " : "; ") + what;
    }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double band(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

// 1. contour_fc against the eigendecomposition oracle
Outcome spectral_core() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> dim(2, 8);
    std::uniform_real_distribution<double> rad(0.5, 2.0), ang(-std::numbers::pi / 4, std::numbers::pi / 4);
    std::bernoulli_distribution side(0.5);
    const auto fs = test_functions();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<cplx> l(size_t(dim(rng)));
        for (auto& x : l) x = std::polar(rad(rng), ang(rng)) * (side(rng) ? 1.0 : -1.0);
        const CMatrix t = oracle::random_diagonalizable(l, rng);
        const auto& f = fs[size_t(trial) % fs.size()].f;
        const CMatrix got = contour_fc(t, f, 256);
        const CMatrix want = oracle::eig_fc(t, f);
        worst = std::max(worst, (got - want).norm() / want.norm());
    }
    const double secs = seconds_since(t0);
    o.need(worst <= 1e-8, fmt("max rel err %.2e > 1e-8", worst));
    o.need(secs < 10.0, fmt("runtime %.1f s", secs));
    if (o.pass) o.detail = fmt("max rel err %.2e", worst) + fmt(", %.2f s", secs);
    return o;
}

// 2. symbol conditions
Outcome symbol_conditions() {
    Outcome o;
    const auto h = verify_hodge_symbols(fx::dirac(), sphere_sample(1));
    const auto& bp = h.pi_check.params;
    o.need(h.pass, "Dirac pair fails " + h.failed_condition);
    o.need(bp.omega <= 1e-8, fmt("omega %.2e", bp.omega));
    o.need(std::abs(bp.kappa - 1.0) <= 1e-8, fmt("kappa %.12f", bp.kappa));
    o.need(std::abs(bp.big_m - 1.0) <= 1e-8, fmt("M %.12f", bp.big_m));
    const auto pe = verify_hodge_symbols(fx::load_pair("pair_equal"), sphere_sample(1));
    o.need(!pe.pass && pe.failed_condition == "Pi1", "pair_equal reported " + pe.failed_condition);
    const auto km = verify_hodge_symbols(fx::load_pair("kernel_mismatch"), sphere_sample(1));
    o.need(!km.pass && km.failed_condition == "Pi3", "kernel_mismatch reported " + km.failed_condition);
    for (const auto& [file, cond] : {std::pair{"nilpotent", "D1"}, std::pair{"imag_scalar", "D2"}}) {
        const auto f = load_symbol_file(fx::data_path(std::string("symbols/") + file + ".json"));
        const auto r = verify_D1_D2(std::get<HomogeneousSymbol>(f.content), sphere_sample(1));
        o.need(!r.pass && r.failed_condition == cond, std::string(file) + " reported " + r.failed_condition);
    }
    if (o.pass)
        o.detail = fmt("omega %.1e", bp.omega) + fmt(", kappa %.12f", bp.kappa) + fmt(", M %.12f", bp.big_m) +
                   ", counterexamples fail Pi1/Pi3/D1/D2";
    return o;
}

// 3. Mikhlin probes for P, Q, R of the Dirac pair
Outcome mikhlin() {
    Outcome o;
    const auto pair = fx::dirac();
    std::vector<double> taus;
    for (int e = -4; e <= 4; ++e) taus.push_back(std::ldexp(1.0, e));
    double worst_rel = 0.0, worst_stab = 1.0;
    for (char w : {'P', 'Q', 'R'}) {
        const SymbolFamily fam = [&pair, w](const RVector& xi, double t) -> CMatrix {
            const CMatrix pi = pair.eval_pi(xi);
            return w == 'P' ? p_symbol(pi, t) : w == 'Q' ? q_symbol(pi, t) : r_symbol(pi, t);
        };
        const auto tab = mikhlin_probe(fam, default_alphas(1, 2, true), sphere_sample(1), taus);
        for (const auto& r : tab.rows) {
            const int a = r.alpha[0];
            const double want = w == 'P' ? oracle::dirac_p_deriv(a, r.tau)
                              : w == 'Q' ? oracle::dirac_q_deriv(a, r.tau)
                                         : oracle::dirac_r_deriv(a, r.tau);
            // exact zeros of the closed form are compared absolutely
            const double err = std::abs(r.value - want) / std::max(want, 1e-4);
            worst_rel = std::max(worst_rel, err);
            if (r.value > 1e-6 && r.value_half > 1e-6)
                worst_stab = std::max({worst_stab, r.value / r.value_half, r.value_half / r.value});
        }
        o.need(tab.all_stable, std::string(1, w) + " table unstable under h/2");
    }
    o.need(worst_rel <= 0.01, fmt("closed-form deviation %.2e", worst_rel));
    o.need(worst_stab <= 2.0, fmt("h/2 ratio %.3f", worst_stab));
    if (o.pass) o.detail = fmt("max closed-form deviation %.2e", worst_rel) + fmt(", h/2 ratio <= %.4f", worst_stab);
    return o;
}

// 4. reproducing formula
Outcome reproducing() {
    Outcome o;
    const auto t0 = Clock::now();
    const TorusGrid gr(1, 256);
    const auto pair = fx::dirac();
    // zero mean: ker Pi(xi) is trivial off xi = 0, so P_ran u = u
    const GridField u = random_trig_field(gr, 2, 64, 44, 1);
    double prev = std::numeric_limits<double>::infinity(), last = 0.0;
    bool monotone = true;
    for (int w = 2; w <= 20; w += 2) {
        last = (reproducing_sum(pair, u, {-w, w}) - u).values.norm() / u.values.norm();
        monotone = monotone && last <= 1.1 * prev;
        prev = last;
    }
    const double secs = seconds_since(t0);
    o.need(last <= 1e-5, fmt("residual %.2e", last));
    o.need(monotone, "residual not monotone in window width");
    o.need(secs < 5.0, fmt("runtime %.1f s", secs));
    if (o.pass) o.detail = fmt("residual at [-20, 20] %.2e", last) + fmt(", monotone, %.2f s", secs);
    return o;
}

// 5. Hodge decomposition, constant and variable coefficients
Outcome hodge() {
    Outcome o;
    double worst_const = 0.0;
    for (const auto& [name, n] : {std::pair{"dirac1d", 1}, std::pair{"grad_div_2d", 2}}) {
        const auto pair = fx::load_pair(name);
        const TorusGrid gr(n, 256);
        const auto pr = hodge_projections_const(pair, gr);
        const CMatrix id = CMatrix::Identity(pair.big_n(), pair.big_n());
        for (Eigen::Index c = 0; c < gr.cells(); ++c) {
            const CMatrix &a = pr.p0.symbol[size_t(c)], &b = pr.p_gamma.symbol[size_t(c)],
                          &t = pr.p_gamma_tilde.symbol[size_t(c)];
            double w = std::max({max_abs(a + b + t - id), max_abs(a * a - a), max_abs(b * b - b), max_abs(t * t - t)});
            if (c > 0) {
                const RVector xi = gr.frequency(c);
                w = std::max({w, max_abs(pair.eval_pi(xi) * a), max_abs(pair.gamma.eval(xi) * b),
                              max_abs(pair.gamma_tilde.eval(xi) * t)});
            }
            worst_const = std::max(worst_const, w);
        }
    }
    o.need(worst_const <= 1e-10, fmt("constant-case identities %.2e", worst_const));
    const TorusGrid gr(1, 16);
    const MatrixField b = MatrixField::identity(gr, 2) + random_diagonal_field(gr, 2, 29) * cplx(0.05);
    const VariableOp op = VariableOp::make(fx::dirac(), {b, b}, gr);
    const auto pv = hodge_projections_var(op);
    const auto dn = hodge_projections_dense_oracle(op);
    const double var = std::max({max_abs(pv.p0 - dn.p0), max_abs(pv.p_gamma - dn.p_gamma),
                                 max_abs(pv.p_gamma_tilde - dn.p_gamma_tilde)});
    o.need(var <= 1e-6, fmt("variable case vs oracle %.2e", var));
    if (o.pass) o.detail = fmt("constant identities %.2e", worst_const) + fmt(", variable vs dense oracle %.2e", var);
    return o;
}

// 6. perturbation scaling
Outcome perturbation() {
    Outcome o;
    const TorusGrid gr(2, 8);
    const auto pair = fx::load_pair("grad_div_2d");
    const VariableOp a = VariableOp::make(pair, CoefficientPair::identity(gr, 4), gr);
    const MatrixField e = random_diagonal_field(gr, 4, 41);
    std::vector<double> ratios;
    for (double d : {0.04, 0.02, 0.01}) {
        const MatrixField bb = MatrixField::identity(gr, 4) + e * cplx(d / 2.0);
        const auto r = perturb_hodge(a, VariableOp::make(pair, {bb, bb}, gr));
        ratios.push_back(r.ratio_sum.value_or(0.0));
    }
    const double bnd = band(ratios);
    o.need(bnd <= 4.0, fmt("ratio band %.3f", bnd));
    std::mt19937_64 rng(37);
    const CMatrix s = CMatrix::Identity(6, 6) + 0.3 * random_complex(6, 6, rng);
    CMatrix sel = CMatrix::Zero(6, 6);
    sel.topLeftCorner(3, 3).setIdentity();
    const CMatrix p0 = s * sel * s.inverse(), p1 = CMatrix::Identity(6, 6) - p0;
    CMatrix t = random_complex(6, 6, rng);
    t *= 0.1 / norm2(t);
    const auto sp = perturb_split(p0, p1, t);
    const double ident = std::max({max_abs(sp.p0_new + sp.p1_new - CMatrix::Identity(6, 6)),
                                   max_abs(sp.p0_new * sp.p0_new - sp.p0_new), max_abs(sp.p1_new * sp.p1_new - sp.p1_new)});
    o.need(ident <= 1e-10, fmt("split identities %.2e", ident));
    if (o.pass)
        o.detail = fmt("ratios %.4f", ratios[0]) + fmt("/%.4f", ratios[1]) + fmt("/%.4f", ratios[2]) +
                   fmt(" (band %.3f)", bnd) + fmt(", split identities %.2e", ident);
    return o;
}

// 7. quadratic estimates
Outcome quadratic() {
    Outcome o;
    const auto pair = fx::dirac();
    const TorusGrid gr(1, 64);
    const GridField u = random_trig_field(gr, 2, 12, 6, 1);
    const DyadicScales sc{-12, 4};
    const auto e2 = quadratic_estimate(pair, u, sc, 2.0, 256, 6);
    const double expect = quadest_l2_expectation(pair, u, sc);
    const double dev = std::abs(e2.est.mean_sq - expect) / e2.est.std_error_sq;
    o.need(dev <= 3.0, fmt("second moment %.2f standard errors off", dev));
    const double c0 = quadratic_estimate(pair, u, sc, 3.0, 64, 54).constant;
    const double cs = quadratic_estimate(pair, u, sc, 3.0, 256, 54).constant;
    const TorusGrid g2(1, 128);
    const double cg = quadratic_estimate(pair, random_trig_field(g2, 2, 12, 6, 1), sc, 3.0, 64, 54).constant;
    const double stab = std::max({c0 / cs, cs / c0, c0 / cg, cg / c0});
    o.need(stab <= 2.0, fmt("constant unstable, factor %.3f", stab));
    const double cmax = std::max({c0, cs, cg});
    std::vector<double> lx, raw;
    for (double z : {1.0, 4.0, 16.0}) {
        const auto r = translated_quadest(pair, u, fx::vec({z}), sc, 3.0, 64, 59);
        lx.push_back(std::log(z));
        raw.push_back(r.raw);
    }
    const double slope = fit_slope(lx, raw);
    o.need(slope <= cmax, fmt("translated slope %.3f", slope) + fmt(" > C %.3f", cmax));
    if (o.pass)
        o.detail = fmt("E||.||^2 within %.2f SE", dev) + fmt(", C = %.3f", c0) + fmt(" (stable x%.3f)", stab) +
                   fmt(", log-slope %.4f", slope) + fmt(" <= C %.3f", cmax);
    return o;
}

FirstOrderD scalar_d() {
    return {std::get<HomogeneousSymbol>(load_symbol_file(fx::data_path("symbols/scalar_d.json")).content)};
}

// 8. block correspondence
Outcome block() {
    Outcome o;
    const TorusGrid gr(1, 64);
    const MatrixField a = MatrixField::identity(gr, 1) + random_diagonal_field(gr, 1, 67) * cplx(0.05);
    const auto rep = intertwine_check(scalar_d(), a, test_functions(), 3);
    o.need(rep.max_residual <= 1e-6, fmt("intertwine residual %.2e", rep.max_residual));
    const VariableOp op = build_block(scalar_d(), a);
    const DAOp da = DAOp::make(scalar_d(), a);
    const CMatrix pib = dense_operator(op);
    double fr = 0.0;
    for (double t : {0.1, 1.0, 10.0}) {
        const CVector w = random_trig_field(gr, 2, 15, 68).values;
        const CVector want = (CMatrix::Identity(pib.rows(), pib.cols()) + cplx(0, t) * pib).partialPivLu().solve(w);
        fr = std::max(fr, (three_factor_resolvent(da, t, w) - want).norm() / want.norm());
    }
    o.need(fr <= 1e-9, fmt("three-factor residual %.2e", fr));
    if (o.pass) o.detail = fmt("intertwine residual %.2e", rep.max_residual) + fmt(", three-factor residual %.2e", fr);
    return o;
}

// 9. holomorphy, Lipschitz and the three-term identity
Outcome perturbation_probes() {
    Outcome o;
    const TorusGrid gr(1, 32);
    const auto f = test_functions()[0].f;
    const CoefficientPath path{MatrixField::identity(gr, 1), random_diagonal_field(gr, 1, 71)};
    const double r = holomorphy_radius(path, scalar_d());
    const CVector u = random_trig_field(gr, 1, 7, 71).values;
    const double h16 = holomorphy_probe(path, scalar_d(), f, r, 16, u).residual;
    const double h32 = holomorphy_probe(path, scalar_d(), f, r, 32, u).residual;
    o.need(h16 <= 1e-4, fmt("holomorphy residual %.2e at 16 nodes", h16));
    o.need(h32 * 4.0 <= h16, fmt("32-node residual %.2e", h32));
    const MatrixField a = MatrixField::identity(gr, 1) + random_diagonal_field(gr, 1, 24) * cplx(0.2);
    const MatrixField e = random_diagonal_field(gr, 1, 73);
    std::vector<double> ratios;
    for (double d : {0.04, 0.02, 0.01}) ratios.push_back(lipschitz_probe(scalar_d(), a, a + e * cplx(d), f, 3, 2.0, 73).ratio);
    const double bnd = band(ratios);
    o.need(bnd <= 4.0 && ratios[0] > 0, fmt("Lipschitz band %.3f", bnd));
    const TorusGrid g16(1, 16);
    const auto pair = fx::dirac();
    auto op = [&](std::uint64_t seed) {
        const MatrixField b = MatrixField::identity(g16, 2) + random_diagonal_field(g16, 2, seed) * cplx(0.3);
        return VariableOp::make(pair, {b, MatrixField::identity(g16, 2)}, g16);
    };
    const SATA sa = build_SA_TA(op(21)), sb = build_SA_TA(op(22));
    double t3 = 0.0;
    for (const auto& nf : test_functions())
        t3 = std::max(t3, three_term_check(sa, sb, nf.f, random_trig_field(g16, 2, 3, 9).values).algebraic_residual);
    o.need(t3 <= 1e-8, fmt("three-term residual %.2e", t3));
    if (o.pass)
        o.detail = fmt("holomorphy r = %.3f: ", r) + fmt("%.2e", h16) + fmt(" -> %.2e", h32) +
                   fmt(", Lipschitz band %.3f", bnd) + fmt(", three-term %.2e", t3);
    return o;
}

// 10. smoke suite timing and determinism
Outcome smoke() {
    Outcome o;
    const std::string cfg = fx::data_path("configs/smoke.json");
    const auto t0 = Clock::now();
    const SuiteReport a = run_suite("smoke", cfg, std::nullopt, 1);
    const double secs = seconds_since(t0);
    const SuiteReport b = run_suite("smoke", cfg, std::nullopt, 1);
    o.need(a.pass(), "smoke suite has failing probes");
    o.need(secs < 60.0, fmt("smoke suite took %.1f s", secs));
    o.need(dump(to_json(a)) == dump(to_json(b)), "reruns differ");
    if (o.pass)
        o.detail = std::to_string(a.probes.size()) + " probes pass" + fmt(", %.2f s single-threaded", secs) +
                   ", reruns byte-identical";
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"spectral core: contour_fc vs eigendecomposition", spectral_core},
        {"symbol conditions and counterexamples", symbol_conditions},
        {"Mikhlin probes vs closed forms", mikhlin},
        {"reproducing formula", reproducing},
        {"Hodge decomposition", hodge},
        {"perturbation scaling", perturbation},
        {"quadratic estimates", quadratic},
        {"block correspondence", block},
        {"holomorphy, Lipschitz, three-term identity", perturbation_probes},
        {"smoke suite", smoke},
    };
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
