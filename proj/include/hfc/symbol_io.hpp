#pragma once

#include "hfc/error.hpp"
#include "hfc/symbols.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <variant>

namespace hfc {

struct SymbolFile {
    std::string name;
    std::variant<HomogeneousSymbol, HodgeDiracSymbolPair> content;

    bool is_pair() const { return std::holds_alternative<HodgeDiracSymbolPair>(content); }
};

namespace detail {

inline CMatrix matrix_from_json(const nlohmann::json& j, int big_n) {
    if (!j.is_array() || int(j.size()) != big_n) throw Error(ErrorKind::InvalidArgument, "matrix must have N rows");
    CMatrix m(big_n, big_n);
    for (int r = 0; r < big_n; ++r) {
        const auto& row = j[size_t(r)];
        if (!row.is_array() || int(row.size()) != big_n)
            throw Error(ErrorKind::InvalidArgument, "matrix row must have N entries");
        for (int c = 0; c < big_n; ++c) {
            const auto& e = row[size_t(c)];
            if (e.is_number()) {
                m(r, c) = cplx(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
                m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
            } else {
                throw Error(ErrorKind::InvalidArgument, "matrix entry must be [re, im]");
            }
        }
    }
    return m;
}

inline nlohmann::json matrix_to_json(const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

inline HomogeneousSymbol symbol_from_json(const nlohmann::json& j, int n, int big_n, int k) {
    HomogeneousSymbol s;
    s.n = n;
    s.big_n = big_n;
    s.k = k;
    if (!j.contains("coeffs") || !j.at("coeffs").is_array())
        throw Error(ErrorKind::InvalidArgument, "symbol: missing coeffs array");
    for (const auto& c : j.at("coeffs")) {
        MultiIndex theta = c.at("theta").get<MultiIndex>();
        s.coeffs.emplace_back(std::move(theta), matrix_from_json(c.at("matrix"), big_n));
    }
    s.validate();
    return s;
}

inline nlohmann::json symbol_coeffs_to_json(const HomogeneousSymbol& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [theta, m] : s.coeffs) arr.push_back({{"theta", theta}, {"matrix", matrix_to_json(m)}});
    return arr;
}

} // namespace detail

inline SymbolFile parse_symbol_json(const nlohmann::json& j) {
    try {
        SymbolFile f;
        f.name = j.value("name", std::string("unnamed"));
        const std::string kind = j.at("kind").get<std::string>();
        const int n = j.at("n").get<int>();
        const int big_n = j.at("N").get<int>();
        if (kind == "symbol") {
            f.content = detail::symbol_from_json(j, n, big_n, j.at("k").get<int>());
        } else if (kind == "hodge_pair") {
            HodgeDiracSymbolPair p;
            p.gamma = detail::symbol_from_json(j.at("gamma"), n, big_n, 1);
            p.gamma_tilde = detail::symbol_from_json(j.at("gamma_tilde"), n, big_n, 1);
            p.validate();
            f.content = p;
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown kind '" + kind + "'");
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("symbol file: ") + e.what());
    }
}

inline SymbolFile load_symbol_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open symbol file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
    }
    return parse_symbol_json(j);
}

inline nlohmann::json symbol_to_json(const SymbolFile& f) {
    nlohmann::json j;
    j["name"] = f.name;
    if (const auto* s = std::get_if<HomogeneousSymbol>(&f.content)) {
        j["kind"] = "symbol";
        j["n"] = s->n;
        j["N"] = s->big_n;
        j["k"] = s->k;
        j["coeffs"] = detail::symbol_coeffs_to_json(*s);
    } else {
        const auto& p = std::get<HodgeDiracSymbolPair>(f.content);
        j["kind"] = "hodge_pair";
        j["n"] = p.n();
        j["N"] = p.big_n();
        j["gamma"] = {{"coeffs", detail::symbol_coeffs_to_json(p.gamma)}};
        j["gamma_tilde"] = {{"coeffs", detail::symbol_coeffs_to_json(p.gamma_tilde)}};
    }
    return j;
}

} // namespace hfc
