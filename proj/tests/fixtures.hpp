#pragma once

#include "hfc/symbol_io.hpp"
#include "hfc/symbols.hpp"

#include <random>
#include <string>

namespace fx {

using namespace hfc;

inline std::string data_path(const std::string& rel) { return std::string(HFC_DATA_DIR) + "/" + rel; }

inline HodgeDiracSymbolPair load_pair(const std::string& name) {
    return std::get<HodgeDiracSymbolPair>(load_symbol_file(data_path("symbols/" + name + ".json")).content);
}

inline HodgeDiracSymbolPair dirac() { return load_pair("dirac1d"); }

inline RVector vec(std::initializer_list<double> v) {
    RVector r(Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

inline CMatrix mat2(cplx a, cplx b, cplx c, cplx d) {
    CMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

/// S (xi_1 sigma_x + xi_2 sigma_z) S^{-1} (+) 0: admissible, n = 2, N = 3, one kernel direction.
inline HomogeneousSymbol random_admissible(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CMatrix s = CMatrix::Identity(3, 3) + 0.3 * random_complex(3, 3, rng);
    CMatrix sinv = s.inverse();
    CMatrix sx = CMatrix::Zero(3, 3), sz = CMatrix::Zero(3, 3);
    sx(0, 1) = sx(1, 0) = 1.0;
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;
    HomogeneousSymbol d;
    d.n = 2;
    d.big_n = 3;
    d.k = 1;
    d.coeffs.push_back({{1, 0}, s * sx * sinv});
    d.coeffs.push_back({{0, 1}, s * sz * sinv});
    return d;
}

/// The square of a first-order symbol as a second-order symbol.
inline HomogeneousSymbol square(const HomogeneousSymbol& d) {
    HomogeneousSymbol q;
    q.n = d.n;
    q.big_n = d.big_n;
    q.k = 2 * d.k;
    for (const auto& [a, ma] : d.coeffs)
        for (const auto& [b, mb] : d.coeffs) {
            MultiIndex c(a.size());
            for (size_t j = 0; j < a.size(); ++j) c[j] = a[j] + b[j];
            q.coeffs.push_back({c, ma * mb});
        }
    return q;
}

/// grad_div_2d conjugated by S = I + 0.3 randn: still nilpotent and admissible, n = 2, N = 4.
inline HodgeDiracSymbolPair random_admissible_pair(std::uint64_t seed) {
    HodgeDiracSymbolPair p = load_pair("grad_div_2d");
    std::mt19937_64 rng(seed);
    const CMatrix s = CMatrix::Identity(4, 4) + 0.3 * random_complex(4, 4, rng);
    const CMatrix sinv = s.inverse();
    for (auto* h : {&p.gamma, &p.gamma_tilde})
        for (auto& c : h->coeffs) c.second = s * c.second * sinv;
    return p;
}

} // namespace fx
