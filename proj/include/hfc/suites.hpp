#pragma once

#include "hfc/dacorr.hpp"
#include "hfc/hodge.hpp"
#include "hfc/quadest.hpp"
#include "hfc/report.hpp"
#include "hfc/symbol_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

namespace hfc {

// ---------------------------------------------------------------- configuration

/// Raised for anything wrong with the configuration itself; the driver maps it to exit code 2.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::InvalidArgument, msg) {}
};

struct ProbeConfig {
    std::uint64_t seed = 0;
    TorusGrid grid{1, 16};
    std::string symbol;   // Hodge-Dirac pair file
    std::string d_symbol; // first-order D file
    std::string b1 = "identity", b2 = "identity", a = "identity";
    double p = 2.0;
    DyadicScales scales{-20, 20};
    int samples = 64;
    int trials = 3;
    int nodes = 128;
    int band = -1;
    std::vector<std::string> functions{"q", "q2", "sign"};
    std::vector<double> deltas{0.04, 0.02, 0.01};
    double radius = 0.0; // 0: pick from the (H2)/(H3) margin scan
    std::vector<int> circle_nodes{16, 32};
    std::vector<int> windows{5, 10, 15, 20};
    std::vector<double> shifts{1.0, 4.0, 16.0};
    std::map<std::string, double> tolerances;
    std::string base_dir = ".";

    double tol(const std::string& name, double def) const {
        auto it = tolerances.find(name);
        return it == tolerances.end() ? def : it->second;
    }
    std::string resolve(const std::string& path) const {
        std::filesystem::path p(path);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        return p.lexically_normal().string();
    }
    int band_or(int def) const { return band > 0 ? band : def; }
    HodgeDiracSymbolPair pair() const;
    FirstOrderD first_order() const;
};

namespace detail {

template <typename T>
T take(const ojson& j, const char* key, const T& def, const std::string& where) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> k{"seed",   "grid",         "symbol",  "d_symbol", "b1",     "b2",
                                         "a",      "p",            "scales",  "samples",  "trials", "nodes",
                                         "band",   "functions",    "deltas",  "radius",   "circle_nodes",
                                         "windows", "shifts",      "tolerances", "probes", "description"};
    return k;
}

} // namespace detail

inline const std::vector<std::string>& probe_names() {
    static const std::vector<std::string> n{"hodge-const", "hodge-var", "perturb",    "quadest",  "reproducing",
                                            "schur",       "block",     "holomorphy", "lipschitz"};
    return n;
}

inline std::vector<std::string> suite_probes(const std::string& suite) {
    if (suite == "smoke") return probe_names();
    for (const auto& n : probe_names())
        if (n == suite) return {n};
    std::string all = "smoke";
    for (const auto& n : probe_names()) all += ", " + n;
    throw ConfigError("unknown suite '" + suite + "' (expected one of: " + all + ")");
}

/// Effective configuration for one probe: top level merged with probes.<name>.
inline ProbeConfig parse_probe_config(const ojson& top, const std::string& probe, const std::string& base_dir,
                                      std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (!top.is_object()) throw ConfigError("config: top level must be an object");
    for (auto it = top.begin(); it != top.end(); ++it)
        if (!detail::known_keys().count(it.key())) throw ConfigError("config: unknown field '" + it.key() + "'");
    ojson j = top;
    j.erase("probes");
    if (top.contains("probes")) {
        if (!top["probes"].is_object()) throw ConfigError("config: 'probes' must be an object");
        for (auto it = top["probes"].begin(); it != top["probes"].end(); ++it)
            if (std::find(probe_names().begin(), probe_names().end(), it.key()) == probe_names().end())
                throw ConfigError("config: 'probes' names unknown probe '" + it.key() + "'");
        if (top["probes"].contains(probe)) {
            const ojson& over = top["probes"][probe];
            if (!over.is_object()) throw ConfigError("config: probes." + probe + " must be an object");
            for (auto it = over.begin(); it != over.end(); ++it) {
                if (it.key() == "probes" || !detail::known_keys().count(it.key()))
                    throw ConfigError("config: probes." + probe + ": unknown field '" + it.key() + "'");
                j[it.key()] = it.value();
            }
        }
    }
    const std::string where = "config (" + probe + ")";
    ProbeConfig c;
    c.base_dir = base_dir;
    if (!j.contains("seed") && !seed_override) throw ConfigError(where + ": 'seed' is required");
    c.seed = seed_override ? *seed_override : detail::take<std::uint64_t>(j, "seed", 0, where);
    if (j.contains("grid")) {
        const ojson& g = j["grid"];
        if (!g.is_object()) throw ConfigError(where + ": 'grid' must be an object");
        const int n = detail::take<int>(g, "n", 1, where), gg = detail::take<int>(g, "g", 16, where);
        const double len = detail::take<double>(g, "length", 2.0 * std::numbers::pi, where);
        try {
            c.grid = TorusGrid(n, gg, len);
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    c.symbol = detail::take<std::string>(j, "symbol", "", where);
    c.d_symbol = detail::take<std::string>(j, "d_symbol", "", where);
    c.b1 = detail::take<std::string>(j, "b1", c.b1, where);
    c.b2 = detail::take<std::string>(j, "b2", c.b2, where);
    c.a = detail::take<std::string>(j, "a", c.a, where);
    c.p = detail::take<double>(j, "p", c.p, where);
    if (!(c.p > 1.0) || !std::isfinite(c.p)) throw ConfigError(where + ": p must lie in (1, inf)");
    if (j.contains("scales")) {
        c.scales.k_min = detail::take<int>(j["scales"], "k_min", c.scales.k_min, where);
        c.scales.k_max = detail::take<int>(j["scales"], "k_max", c.scales.k_max, where);
        try {
            c.scales.validate();
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    c.samples = detail::take<int>(j, "samples", c.samples, where);
    c.trials = detail::take<int>(j, "trials", c.trials, where);
    c.nodes = detail::take<int>(j, "nodes", c.nodes, where);
    c.band = detail::take<int>(j, "band", c.band, where);
    if (c.samples < 1 || c.trials < 1 || c.nodes < 8) throw ConfigError(where + ": need samples >= 1, trials >= 1, nodes >= 8");
    c.functions = detail::take<std::vector<std::string>>(j, "functions", c.functions, where);
    if (c.functions.empty()) throw ConfigError(where + ": 'functions' is empty");
    for (const auto& f : c.functions) {
        try {
            function_by_name(f);
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    c.deltas = detail::take<std::vector<double>>(j, "deltas", c.deltas, where);
    c.radius = detail::take<double>(j, "radius", c.radius, where);
    c.circle_nodes = detail::take<std::vector<int>>(j, "circle_nodes", c.circle_nodes, where);
    c.windows = detail::take<std::vector<int>>(j, "windows", c.windows, where);
    c.shifts = detail::take<std::vector<double>>(j, "shifts", c.shifts, where);
    c.tolerances = detail::take<std::map<std::string, double>>(j, "tolerances", {}, where);
    if (c.deltas.empty() || c.circle_nodes.size() < 2 || c.windows.empty() || c.shifts.size() < 2)
        throw ConfigError(where + ": deltas, windows need >= 1 entry; circle_nodes, shifts need >= 2");
    for (const auto& path : {c.symbol, c.d_symbol})
        if (!path.empty() && !std::filesystem::exists(c.resolve(path)))
            throw ConfigError(where + ": no such file: " + c.resolve(path));
    const bool wants_pair = probe != "block" && probe != "holomorphy";
    const bool wants_d = probe == "block" || probe == "holomorphy" || probe == "lipschitz";
    if (wants_pair && c.symbol.empty()) throw ConfigError(where + ": 'symbol' is required");
    if (wants_d && c.d_symbol.empty()) throw ConfigError(where + ": 'd_symbol' is required");
    return c;
}

inline HodgeDiracSymbolPair ProbeConfig::pair() const {
    const SymbolFile f = load_symbol_file(resolve(symbol));
    if (!f.is_pair()) throw ConfigError("'" + symbol + "' is not a Hodge-Dirac pair");
    const auto& p = std::get<HodgeDiracSymbolPair>(f.content);
    if (p.n() != grid.n) throw ConfigError("'" + symbol + "' dimension differs from grid.n");
    return p;
}

inline FirstOrderD ProbeConfig::first_order() const {
    const SymbolFile f = load_symbol_file(resolve(d_symbol));
    if (f.is_pair()) throw ConfigError("'" + d_symbol + "' is a pair; d_symbol needs a single first-order symbol");
    FirstOrderD d{std::get<HomogeneousSymbol>(f.content)};
    if (d.n() != grid.n) throw ConfigError("'" + d_symbol + "' dimension differs from grid.n");
    return d;
}

// ---------------------------------------------------------------- probes

namespace detail {

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline ojson grid_json(const TorusGrid& g) { return {{"n", g.n}, {"g", g.g}, {"length", g.length}}; }

inline double band_ratio(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

/// Band-limited random field with the kernel part removed.
inline GridField range_field(const HodgeDiracSymbolPair& pair, const TorusGrid& gr, int band, std::uint64_t seed) {
    const GridField u = random_trig_field(gr, pair.big_n(), band, seed, 1);
    const auto pr = hodge_projections_const(pair, gr);
    return u - apply_multiplier(pr.p0, u);
}

inline VariableOp coeff_op(const ProbeConfig& c, const HodgeDiracSymbolPair& pair) {
    const int nn = pair.big_n();
    return VariableOp::make(pair, {parse_coefficient(c.b1, c.grid, nn, c.base_dir), parse_coefficient(c.b2, c.grid, nn, c.base_dir)},
                            c.grid);
}

} // namespace detail

inline void probe_hodge_const(const ProbeConfig& c, ProbeReport& r) {
    const auto pair = c.pair();
    const auto pr = hodge_projections_const(pair, c.grid);
    const int nn = pair.big_n();
    const CMatrix id = CMatrix::Identity(nn, nn);
    double sum = 0, idem = 0, annihilate = 0;
    for (Eigen::Index k = 0; k < c.grid.cells(); ++k) {
        const CMatrix &a = pr.p0.symbol[size_t(k)], &b = pr.p_gamma.symbol[size_t(k)], &t = pr.p_gamma_tilde.symbol[size_t(k)];
        sum = std::max(sum, detail::max_abs(a + b + t - id));
        idem = std::max({idem, detail::max_abs(a * a - a), detail::max_abs(b * b - b), detail::max_abs(t * t - t)});
        if (k == 0) continue;
        const RVector xi = c.grid.frequency(k);
        const CMatrix pi = pair.eval_pi(xi), g = pair.gamma.eval(xi), gt = pair.gamma_tilde.eval(xi);
        annihilate = std::max({annihilate, detail::max_abs(pi * a), detail::max_abs(g * b), detail::max_abs(gt * t),
                               detail::max_abs(a * b), detail::max_abs(b * t), detail::max_abs(t * a)});
    }
    r.measured = {{"sum_residual", sum}, {"idempotence_residual", idem}, {"annihilation_residual", annihilate}};
    const double tol = c.tol("hodge_const", 1e-10);
    r.checks = {check_le("sum_equals_identity", sum, tol), check_le("idempotence", idem, tol),
                check_le("annihilation", annihilate, tol)};
}

inline void probe_hodge_var(const ProbeConfig& c, ProbeReport& r) {
    const auto pair = c.pair();
    const VariableOp op = detail::coeff_op(c, pair);
    const BConditionReport bc = check_B_conditions(op, c.p, c.trials, c.seed);
    const auto pr = hodge_projections_var(op);
    ojson m{{"dim", op.dim()}, {"dense_path", pr.dense}, {"t_final", pr.t_final}};
    ojson cd = ojson::array();
    for (double d : pr.cauchy_diffs) cd.push_back(num(d));
    m["cauchy_diffs"] = cd;
    m["b_conditions"] = {{"b1_residual", num(bc.b1_residual)}, {"c_primal", num(bc.c_primal)},
                         {"c_dual", num(bc.c_dual)}, {"pass", bc.pass}};
    r.checks.push_back(check_ge("b_conditions", bc.pass ? 1.0 : 0.0, 1.0));
    if (op.dim() <= 2048) {
        const auto oracle = hodge_projections_dense_oracle(op);
        const GridField u = random_trig_field(c.grid, pair.big_n(), c.band_or(std::max(1, c.grid.g / 4 - 1)), c.seed);
        const auto parts = pr.apply_all(u);
        const double nu = u.values.norm();
        double field_diff = std::max({(parts.p0.values - oracle.p0 * u.values).norm(),
                                      (parts.p_gamma.values - oracle.p_gamma * u.values).norm(),
                                      (parts.p_gamma_tilde.values - oracle.p_gamma_tilde * u.values).norm()}) / nu;
        m["field_diff_vs_oracle"] = field_diff;
        double diff = field_diff;
        if (pr.dense) {
            diff = std::max({detail::max_abs(pr.p0 - oracle.p0), detail::max_abs(pr.p_gamma - oracle.p_gamma),
                             detail::max_abs(pr.p_gamma_tilde - oracle.p_gamma_tilde)});
            m["max_diff_vs_oracle"] = diff;
        }
        r.checks.push_back(check_le("limit_vs_dense_oracle", diff, c.tol("hodge_var", 1e-6)));
    }
    r.measured = m;
}

inline void probe_perturb(const ProbeConfig& c, ProbeReport& r) {
    const auto pair = c.pair();
    const VariableOp base = detail::coeff_op(c, pair);
    const MatrixField e = random_diagonal_field(c.grid, pair.big_n(), c.seed + 1);
    std::vector<double> deltas = c.deltas;
    std::sort(deltas.rbegin(), deltas.rend());
    ojson rows = ojson::array();
    std::vector<double> ratios, diffs;
    Series s{"perturb_ratio", "delta", "projection difference / delta", {}, {}, true, false};
    for (double d : deltas) {
        const VariableOp b =
            VariableOp::make(pair, {base.coeffs.b1 + e * cplx(d, 0.0), base.coeffs.b2}, c.grid);
        const auto ph = perturb_hodge(base, b);
        const double diff = ph.diff_p0 + ph.diff_p_gamma + ph.diff_p_gamma_tilde;
        const double ratio = ph.ratio_sum.value_or(0.0);
        rows.push_back({{"delta", d}, {"measured_delta", ph.delta}, {"diff_p0", ph.diff_p0},
                        {"diff_p_gamma", ph.diff_p_gamma}, {"diff_p_gamma_tilde", ph.diff_p_gamma_tilde},
                        {"diff_restricted", ph.diff_restricted}, {"ratio", num(ratio)}});
        ratios.push_back(ratio);
        diffs.push_back(diff);
        s.x.push_back(d);
        s.y.push_back(ratio);
    }
    bool monotone = true;
    for (size_t i = 1; i < diffs.size(); ++i) monotone = monotone && diffs[i] <= diffs[i - 1];
    r.measured = {{"rows", rows}, {"ratio_band", num(detail::band_ratio(ratios))}};
    r.checks = {check_le("ratio_band", detail::band_ratio(ratios), c.tol("perturb_band", 4.0)),
                check_ge("difference_monotone_in_delta", monotone ? 1.0 : 0.0, 1.0)};
    r.series.push_back(s);
}

inline void probe_quadest(const ProbeConfig& c, ProbeReport& r) {
    const auto pair = c.pair();
    const int band = c.band_or(std::max(1, c.grid.g / 5));
    const GridField u = detail::range_field(pair, c.grid, band, c.seed);
    // p = 2 second moment against the frequency-wise expectation
    const auto e2 = quadratic_estimate(pair, u, c.scales, 2.0, c.samples, c.seed);
    const double expect = quadest_l2_expectation(pair, u, c.scales);
    const double dev = std::abs(e2.est.mean_sq - expect);
    // two-sided constant at p, refined in grid and samples
    const TorusGrid fine(c.grid.n, 2 * c.grid.g, c.grid.length);
    const GridField uf = detail::range_field(pair, fine, band, c.seed);
    const double c0 = quadratic_estimate(pair, u, c.scales, c.p, c.samples, c.seed).constant;
    const double c_grid = quadratic_estimate(pair, uf, c.scales, c.p, c.samples, c.seed).constant;
    const double c_samp = quadratic_estimate(pair, u, c.scales, c.p, 4 * c.samples, c.seed).constant;
    const double stab = std::max({c0 / c_grid, c_grid / c0, c0 / c_samp, c_samp / c0});
    // translated variant
    const double base = translated_quadest(pair, u, RVector::Zero(c.grid.n), c.scales, c.p, c.samples, c.seed).raw;
    std::vector<double> lx, raw;
    Series s{"translated_growth", "|z|", "E||sum eps_k tau Q u|| / ||u||", {}, {}, true, false};
    for (double z : c.shifts) {
        RVector zv = RVector::Zero(c.grid.n);
        zv(0) = z;
        const auto t = translated_quadest(pair, u, zv, c.scales, c.p, c.samples, c.seed);
        lx.push_back(std::log(z));
        raw.push_back(t.raw);
        s.x.push_back(z);
        s.y.push_back(t.raw);
    }
    const double slope = fit_slope(lx, raw);
    r.measured = {{"second_moment", e2.est.mean_sq},  {"second_moment_expected", expect},
                  {"second_moment_std_error", e2.est.std_error_sq}, {"constant", c0},
                  {"constant_grid_refined", c_grid},  {"constant_more_samples", c_samp},
                  {"translated_base", base},          {"translated_slope", slope}};
    r.checks = {check_le("second_moment_within_3se", dev, 3.0 * e2.est.std_error_sq),
                check_le("constant_stability", stab, c.tol("quadest_stability", 2.0)),
                check_le("translated_log_slope", slope, base)};
    r.series.push_back(s);
}

inline void probe_reproducing(const ProbeConfig& c, ProbeReport& r) {
    const auto pair = c.pair();
    const GridField u = detail::range_field(pair, c.grid, c.band_or(std::max(1, c.grid.g / 4 - 1)), c.seed);
    std::vector<int> ws = c.windows;
    std::sort(ws.begin(), ws.end());
    Series s{"reproducing_residual", "window half-width", "relative residual", {}, {}, false, true};
    bool monotone = true;
    double last = 0.0;
    ojson rows = ojson::array();
    for (size_t i = 0; i < ws.size(); ++i) {
        const GridField sum = reproducing_sum(pair, u, {-ws[i], ws[i]});
        last = (sum - u).values.norm() / u.values.norm();
        if (i > 0) monotone = monotone && last <= 1.1 * s.y.back();
        s.x.push_back(ws[i]);
        s.y.push_back(last);
        rows.push_back({{"window", ws[i]}, {"residual", last}});
    }
    r.measured = {{"rows", rows}};
    r.checks = {check_le("residual_at_widest_window", last, c.tol("reproducing", 1e-5)),
                check_ge("monotone_within_10pct", monotone ? 1.0 : 0.0, 1.0)};
    r.series.push_back(s);
}

inline void probe_schur(const ProbeConfig& c, ProbeReport& r) {
    const auto pair = c.pair();
    const NamedFunction f = function_by_name(c.functions.back());
    std::vector<double> ts;
    for (int k = std::max(c.scales.k_min, -10); k <= std::min(c.scales.k_max, 10); k += 2) ts.push_back(std::ldexp(1.0, k));
    const int band = c.band_or(std::max(1, c.grid.g / 5));
    double v[2];
    SchurProbe sp[2];
    for (int i = 0; i < 2; ++i) {
        const TorusGrid gr(c.grid.n, c.grid.g << i, c.grid.length);
        sp[i] = schur_bound_probe(pair, gr, function_multiplier(pair, gr, f.f, 64), ts, ts, c.trials, c.p, c.seed, band);
        v[i] = sp[i].max_ratio;
    }
    const double stab = v[0] > 0 && v[1] > 0 ? std::max(v[0] / v[1], v[1] / v[0]) : std::numeric_limits<double>::infinity();
    r.measured = {{"function", f.name}, {"max_ratio", v[0]}, {"max_ratio_l2", sp[0].max_ratio_l2},
                  {"max_ratio_refined", v[1]}, {"worst_t", sp[0].worst_t}, {"worst_s", sp[0].worst_s}};
    r.checks = {check_le("refinement_stability", stab, c.tol("schur_stability", 2.0))};
}

inline void probe_block(const ProbeConfig& c, ProbeReport& r) {
    const FirstOrderD d = c.first_order();
    const MatrixField a = parse_coefficient(c.a, c.grid, d.big_n(), c.base_dir);
    std::vector<NamedFunction> fs;
    for (const auto& n : c.functions) fs.push_back(function_by_name(n));
    const auto rep = intertwine_check(d, a, fs, c.trials, c.nodes, c.seed);
    ojson rows = ojson::array();
    for (size_t j = 0; j < fs.size(); ++j)
        rows.push_back({{"function", rep.names[j]}, {"residual", rep.residuals[j]}, {"richardson", rep.richardson[j]}});
    const VariableOp block = build_block(d, a);
    const DAOp da = DAOp::make(d, a);
    const CMatrix pib = dense_operator(block);
    double fr = 0.0;
    for (double t : {0.1, 1.0, 10.0}) {
        const CVector w = random_trig_field(c.grid, 2 * d.big_n(), std::max(1, c.grid.g / 4 - 1), c.seed).values;
        const CVector got = three_factor_resolvent(da, t, w);
        const CVector want = (CMatrix::Identity(pib.rows(), pib.cols()) + cplx(0, t) * pib).partialPivLu().solve(w);
        fr = std::max(fr, (got - want).norm() / want.norm());
    }
    r.measured = {{"rows", rows},
                  {"three_factor_residual", fr},
                  {"contour", {{"theta_prime", rep.contour.spec.theta_prime},
                               {"r_inner", rep.contour.spec.r_inner},
                               {"r_outer", rep.contour.spec.r_outer},
                               {"nodes", rep.contour.spec.nodes_per_segment}}}};
    r.checks = {check_le("intertwine_residual", rep.max_residual, c.tol("intertwine", 1e-6)),
                check_le("three_factor_residual", fr, c.tol("three_factor", 1e-9))};
}

inline void probe_holomorphy(const ProbeConfig& c, ProbeReport& r) {
    const FirstOrderD d = c.first_order();
    const CoefficientPath path{parse_coefficient(c.a, c.grid, d.big_n(), c.base_dir),
                               random_diagonal_field(c.grid, d.big_n(), c.seed)};
    const double radius = c.radius > 0 ? c.radius : holomorphy_radius(path, d);
    const NamedFunction f = function_by_name(c.functions.front());
    const CVector u = random_trig_field(c.grid, d.big_n(), std::max(1, c.grid.g / 4 - 1), c.seed).values;
    std::vector<int> ms = c.circle_nodes;
    std::sort(ms.begin(), ms.end());
    Series s{"holomorphy_residual", "circle nodes", "relative Cauchy residual", {}, {}, true, true};
    ojson rows = ojson::array();
    for (int m : ms) {
        const auto h = holomorphy_probe(path, d, f.f, radius, m, u, c.nodes);
        s.x.push_back(m);
        s.y.push_back(h.residual);
        rows.push_back({{"nodes", m}, {"residual", h.residual}});
    }
    const double improvement = s.y[1] > 0 ? s.y[0] / s.y[1] : std::numeric_limits<double>::infinity();
    r.measured = {{"function", f.name}, {"radius", radius}, {"rows", rows}, {"improvement", num(improvement)}};
    r.checks = {check_le("residual_at_" + std::to_string(ms[0]) + "_nodes", s.y[0], c.tol("holomorphy", 1e-4)),
                check_ge("improvement_factor", improvement, c.tol("holomorphy_improvement", 4.0))};
    r.series.push_back(s);
}

inline void probe_lipschitz(const ProbeConfig& c, ProbeReport& r) {
    const FirstOrderD d = c.first_order();
    const MatrixField a = parse_coefficient(c.a, c.grid, d.big_n(), c.base_dir);
    const MatrixField e = random_diagonal_field(c.grid, d.big_n(), c.seed);
    const NamedFunction f = function_by_name(c.functions.front());
    std::vector<double> deltas = c.deltas;
    std::sort(deltas.rbegin(), deltas.rend());
    Series s{"lipschitz_ratio", "||A - A~||", "ratio", {}, {}, true, false};
    ojson rows = ojson::array();
    for (double dl : deltas) {
        const auto rep = lipschitz_probe(d, a, a + e * cplx(dl, 0.0), f.f, c.trials, c.p, c.seed, c.nodes);
        s.x.push_back(rep.delta);
        s.y.push_back(rep.ratio);
        rows.push_back({{"delta", rep.delta}, {"ratio", rep.ratio}, {"f_sup", rep.f_sup}});
    }
    // the three-term form for the Hodge-Dirac version
    const auto pair = c.pair();
    const VariableOp opa = detail::coeff_op(c, pair);
    const VariableOp opb = VariableOp::make(
        pair, {opa.coeffs.b1 + random_diagonal_field(c.grid, pair.big_n(), c.seed + 1) * cplx(deltas.front(), 0.0),
               opa.coeffs.b2},
        c.grid);
    const SATA sa = build_SA_TA(opa), sb = build_SA_TA(opb);
    const CVector u = random_trig_field(c.grid, pair.big_n(), std::max(1, c.grid.g / 4 - 1), c.seed + 2).values;
    const auto t3 = three_term_check(sa, sb, f.f, u, c.nodes);
    r.measured = {{"function", f.name},
                  {"rows", rows},
                  {"ratio_band", num(detail::band_ratio(s.y))},
                  {"three_term_algebraic_residual", t3.algebraic_residual},
                  {"three_term_fc_residual", t3.fc_residual},
                  {"difference_norm", t3.difference_norm},
                  {"ts_residual", std::max(sa.ts_residual, sb.ts_residual)}};
    r.checks = {check_le("ratio_band", detail::band_ratio(s.y), c.tol("lipschitz_band", 4.0)),
                check_le("three_term_identity", t3.algebraic_residual, c.tol("three_term", 1e-8))};
    r.series.push_back(s);
}

inline ProbeReport run_probe(const std::string& name, const ProbeConfig& c) {
    ProbeReport r;
    r.probe = name;
    r.seed = c.seed;
    r.inputs = {{"grid", detail::grid_json(c.grid)}, {"p", c.p}};
    if (!c.symbol.empty()) r.inputs["symbol"] = c.symbol;
    if (!c.d_symbol.empty()) r.inputs["d_symbol"] = c.d_symbol;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (name == "hodge-const") probe_hodge_const(c, r);
        else if (name == "hodge-var") probe_hodge_var(c, r);
        else if (name == "perturb") probe_perturb(c, r);
        else if (name == "quadest") probe_quadest(c, r);
        else if (name == "reproducing") probe_reproducing(c, r);
        else if (name == "schur") probe_schur(c, r);
        else if (name == "block") probe_block(c, r);
        else if (name == "holomorphy") probe_holomorphy(c, r);
        else if (name == "lipschitz") probe_lipschitz(c, r);
        else throw ConfigError("unknown probe " + name);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        r.fail_with(e);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Thread count from HFC_THREADS, default 1.
inline int thread_count() {
    const char* v = std::getenv("HFC_THREADS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 256) throw ConfigError(std::string("HFC_THREADS must be an integer in [1, 256], got ") + v);
    return int(n);
}

/// Resolve every probe configuration first so configuration errors surface before any work starts.
inline SuiteReport run_suite(const std::string& suite, const std::string& config_path,
                             std::optional<std::uint64_t> seed_override = std::nullopt, int threads = 1) {
    const std::vector<std::string> names = suite_probes(suite);
    std::string text;
    try {
        text = read_text(config_path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    ojson top;
    try {
        top = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_path + ": " + e.what());
    }
    const std::string base = std::filesystem::path(config_path).parent_path().string();
    std::vector<ProbeConfig> cfgs;
    for (const auto& n : names) cfgs.push_back(parse_probe_config(top, n, base.empty() ? "." : base, seed_override));
    // digest covers the canonical config and the bytes of every referenced symbol file
    std::string material = top.dump();
    if (seed_override) material += "|seed=" + std::to_string(*seed_override);
    std::set<std::string> files;
    for (const auto& c : cfgs)
        for (const auto& f : {c.symbol, c.d_symbol})
            if (!f.empty()) files.insert(c.resolve(f));
    for (const auto& f : files) material += "|" + read_text(f);
    SuiteReport out{suite, fnv1a_hex(material), std::vector<ProbeReport>(names.size())};
    std::atomic<size_t> next{0};
    std::vector<std::string> config_errors(names.size());
    auto worker = [&] {
        for (size_t i; (i = next++) < names.size();) {
            try {
                out.probes[i] = run_probe(names[i], cfgs[i]);
            } catch (const ConfigError& e) {
                config_errors[i] = e.what();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(threads, int(names.size())));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : config_errors)
        if (!e.empty()) throw ConfigError(e);
    return out;
}

// ---------------------------------------------------------------- symbol analysis

struct SymbolAnalysisOptions {
    int sphere_samples = 2048;
    int grid = 0; // > 0: also check on the lattice directions of a g^n grid
    std::uint64_t seed = 0;
};

namespace detail {

inline SphereSample lattice_directions(int n, int g) {
    const TorusGrid gr(n, g);
    SphereSample s;
    for (Eigen::Index c = 1; c < gr.cells(); ++c) s.points.push_back(gr.frequency(c).normalized());
    return s;
}

inline void structural(const SymbolFile& f, const SphereSample& sample, ojson& m, std::vector<Check>& checks,
                       const std::string& prefix) {
    auto cond = [&](const std::string& name, bool ok) { checks.push_back(check_ge(prefix + name, ok ? 1.0 : 0.0, 1.0)); };
    if (f.is_pair()) {
        const auto& p = std::get<HodgeDiracSymbolPair>(f.content);
        const HodgeSymbolCheck h = verify_hodge_symbols(p, sample);
        m["kappa"] = num(h.pi_check.params.kappa);
        m["omega"] = num(h.pi_check.params.omega);
        m["M"] = num(h.pi_check.params.big_m);
        m["nilpotence_residual"] = num(h.nilpotence_residual);
        m["kernel_dim"] = {h.kernel_dim_min, h.kernel_dim_max};
        if (!h.pass) {
            m["failed_condition"] = h.failed_condition;
            m["message"] = h.message;
        }
        cond("hodge_conditions", h.pass);
    } else {
        const auto& s = std::get<HomogeneousSymbol>(f.content);
        const SymbolCheck h = verify_D1_D2(s, sample);
        m["kappa"] = num(h.params.kappa);
        m["omega"] = num(h.params.omega);
        m["M"] = num(h.params.big_m);
        if (!h.pass) {
            m["failed_condition"] = h.failed_condition;
            m["message"] = h.message;
        }
        cond("D1_D2", h.pass);
    }
}

} // namespace detail

inline ProbeReport analyze_symbol(const std::string& path, const SymbolAnalysisOptions& opt) {
    const SymbolFile f = load_symbol_file(path);
    ProbeReport r;
    r.probe = "analyze-symbol";
    r.seed = opt.seed;
    r.inputs = {{"file", std::filesystem::path(path).filename().string()},
                {"digest", fnv1a_hex(read_text(path))},
                {"sphere_samples", opt.sphere_samples}};
    const int n = f.is_pair() ? std::get<HodgeDiracSymbolPair>(f.content).n() : std::get<HomogeneousSymbol>(f.content).n;
    ojson m;
    detail::structural(f, sphere_sample(n, opt.sphere_samples, opt.seed), m, r.checks, "");
    const bool structural_ok = r.pass();
    if (opt.grid > 0) {
        r.inputs["grid"] = opt.grid;
        ojson gm;
        detail::structural(f, detail::lattice_directions(n, opt.grid), gm, r.checks, "grid_");
        m["grid"] = gm;
    }
    if (structural_ok) {
        const HomogeneousSymbol pi =
            f.is_pair() ? std::get<HodgeDiracSymbolPair>(f.content).pi() : std::get<HomogeneousSymbol>(f.content);
        std::vector<double> taus;
        for (int k = -4; k <= 4; ++k) taus.push_back(std::ldexp(1.0, k));
        const auto alphas = default_alphas(n, 2, true);
        const SphereSample ms = sphere_sample(n, std::min(opt.sphere_samples, 64), opt.seed);
        const std::vector<std::pair<std::string, SymbolFamily>> fams{
            {"P", [&](const RVector& xi, double t) { return p_symbol(pi.eval(xi), t); }},
            {"Q", [&](const RVector& xi, double t) { return q_symbol(pi.eval(xi), t); }},
            {"R", [&](const RVector& xi, double t) { return r_symbol(pi.eval(xi), t); }},
        };
        ojson mk = ojson::object();
        bool stable = true;
        for (const auto& [name, fam] : fams) {
            const MikhlinTable tab = mikhlin_probe(fam, alphas, ms, taus);
            ojson sups = ojson::array();
            for (const auto& a : alphas) sups.push_back({{"alpha", a}, {"sup", num(tab.sup(a))}});
            mk[name] = sups;
            stable = stable && tab.all_stable;
        }
        m["mikhlin"] = mk;
        r.checks.push_back(check_ge("mikhlin_stable", stable ? 1.0 : 0.0, 1.0));
    }
    r.measured = m;
    return r;
}

} // namespace hfc
