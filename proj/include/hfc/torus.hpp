#pragma once

#include "hfc/error.hpp"
#include "hfc/linalg.hpp"
#include "hfc/symbols.hpp"

#include <fftw3.h>

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>
#include <vector>

namespace hfc {

struct TorusGrid {
    int n = 1;
    int g = 64;
    double length = 2.0 * std::numbers::pi;

    TorusGrid() = default;
    TorusGrid(int n_, int g_, double length_ = 2.0 * std::numbers::pi) : n(n_), g(g_), length(length_) {
        validate();
    }

    void validate() const {
        if (n < 1 || n > 3) throw Error(ErrorKind::InvalidArgument, "grid: n must be 1, 2 or 3");
        if (g < 4 || (g & (g - 1)) != 0) throw Error(ErrorKind::InvalidArgument, "grid: g must be a power of 2, g >= 4");
        if (!(length > 0.0)) throw Error(ErrorKind::InvalidArgument, "grid: L must be positive");
    }

    Eigen::Index cells() const {
        Eigen::Index c = 1;
        for (int i = 0; i < n; ++i) c *= g;
        return c;
    }
    double h() const { return length / g; }
    double cell_volume() const { return std::pow(h(), n); }

    /// Lattice integer of FFT index j: (-g/2, g/2].
    int lattice(int j) const { return j <= g / 2 ? j : j - g; }

    /// Per-axis indices of a flat cell index, axis 0 slowest.
    std::vector<int> unflatten(Eigen::Index c) const {
        std::vector<int> idx(n);
        for (int a = n - 1; a >= 0; --a) {
            idx[a] = int(c % g);
            c /= g;
        }
        return idx;
    }
    Eigen::Index flatten(const std::vector<int>& idx) const {
        Eigen::Index c = 0;
        for (int a = 0; a < n; ++a) c = c * g + (((idx[a] % g) + g) % g);
        return c;
    }

    RVector frequency(Eigen::Index c) const {
        const auto idx = unflatten(c);
        RVector xi(n);
        for (int a = 0; a < n; ++a) xi(a) = lattice(idx[a]) * 2.0 * std::numbers::pi / length;
        return xi;
    }
    RVector position(Eigen::Index c) const {
        const auto idx = unflatten(c);
        RVector x(n);
        for (int a = 0; a < n; ++a) x(a) = idx[a] * h();
        return x;
    }

    bool operator==(const TorusGrid& o) const { return n == o.n && g == o.g && length == o.length; }
};

/// C^N-valued function on the grid, point-major: values[cell * N + component].
struct GridField {
    TorusGrid grid;
    int big_n = 1;
    CVector values;

    GridField() = default;
    GridField(const TorusGrid& gr, int nn) : grid(gr), big_n(nn), values(CVector::Zero(gr.cells() * nn)) {}
    GridField(const TorusGrid& gr, int nn, CVector v) : grid(gr), big_n(nn), values(std::move(v)) {
        if (values.size() != gr.cells() * nn) throw Error(ErrorKind::ShapeMismatch, "field: wrong value count");
    }

    auto at(Eigen::Index cell) { return values.segment(cell * big_n, big_n); }
    auto at(Eigen::Index cell) const { return values.segment(cell * big_n, big_n); }

    GridField operator+(const GridField& o) const { check(o); return {grid, big_n, values + o.values}; }
    GridField operator-(const GridField& o) const { check(o); return {grid, big_n, values - o.values}; }
    GridField operator*(cplx a) const { return {grid, big_n, a * values}; }
    void check(const GridField& o) const {
        if (!(grid == o.grid) || big_n != o.big_n) throw Error(ErrorKind::ShapeMismatch, "field shapes differ");
    }
};

inline GridField constant_field(const TorusGrid& gr, const CVector& w) {
    GridField f(gr, int(w.size()));
    for (Eigen::Index c = 0; c < gr.cells(); ++c) f.at(c) = w;
    return f;
}

namespace detail {

class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache c;
        return c;
    }

    fftw_plan get(int n, int g, int howmany, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(n, g, howmany, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<int> dims(n, g);
        Eigen::Index total = howmany;
        for (int i = 0; i < n; ++i) total *= g;
        std::vector<cplx> a(static_cast<size_t>(total)), b(static_cast<size_t>(total));
        fftw_plan p = fftw_plan_many_dft(n, dims.data(), howmany, reinterpret_cast<fftw_complex*>(a.data()), nullptr,
                                         howmany, 1, reinterpret_cast<fftw_complex*>(b.data()), nullptr,
                                         howmany, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw Error(ErrorKind::InvalidArgument, "fftw plan creation failed");
        plans_[key] = p;
        return p;
    }

    ~FftPlanCache() {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

} // namespace detail

/// Unnormalized forward DFT of every component (point-major layout preserved).
inline CVector fft_forward(const TorusGrid& gr, int howmany, const CVector& v) {
    CVector out(v.size());
    fftw_plan p = detail::FftPlanCache::instance().get(gr.n, gr.g, howmany, FFTW_FORWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(v.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

/// Inverse DFT normalized by g^n.
inline CVector fft_inverse(const TorusGrid& gr, int howmany, const CVector& v) {
    CVector out(v.size());
    fftw_plan p = detail::FftPlanCache::instance().get(gr.n, gr.g, howmany, FFTW_BACKWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(v.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    out /= double(gr.cells());
    return out;
}

/// Matrix-valued Fourier multiplier; symbol[c] acts at the frequency of flat FFT index c.
/// symbol[0] is the zero mode.
struct MultiplierOp {
    TorusGrid grid;
    int rows = 1;
    int cols = 1;
    std::vector<CMatrix> symbol;

    const CMatrix& zero_mode() const { return symbol.front(); }

    static MultiplierOp from_function(const TorusGrid& gr, int rows, int cols,
                                      const std::function<CMatrix(const RVector&)>& fn, const CMatrix& zero) {
        MultiplierOp m;
        m.grid = gr;
        m.rows = rows;
        m.cols = cols;
        m.symbol.resize(size_t(gr.cells()));
        m.symbol[0] = zero;
        for (Eigen::Index c = 1; c < gr.cells(); ++c) {
            m.symbol[size_t(c)] = fn(gr.frequency(c));
            if (m.symbol[size_t(c)].rows() != rows || m.symbol[size_t(c)].cols() != cols)
                throw Error(ErrorKind::ShapeMismatch, "multiplier: symbol has wrong shape");
            if (!m.symbol[size_t(c)].allFinite())
                throw Error(ErrorKind::InvalidArgument, "multiplier: non-finite symbol entry");
        }
        if (zero.rows() != rows || zero.cols() != cols) throw Error(ErrorKind::ShapeMismatch, "multiplier: zero mode shape");
        return m;
    }

    static MultiplierOp identity(const TorusGrid& gr, int nn) {
        return from_function(gr, nn, nn, [nn](const RVector&) { return CMatrix::Identity(nn, nn); },
                             CMatrix::Identity(nn, nn));
    }

    static MultiplierOp of_symbol(const TorusGrid& gr, const HomogeneousSymbol& s) {
        const int nn = s.big_n;
        return from_function(gr, nn, nn, [&s](const RVector& xi) { return s.eval(xi); }, CMatrix::Zero(nn, nn));
    }

    MultiplierOp operator*(const MultiplierOp& o) const {
        if (!(grid == o.grid) || cols != o.rows) throw Error(ErrorKind::ShapeMismatch, "multiplier product shapes");
        MultiplierOp m = *this;
        m.cols = o.cols;
        for (size_t c = 0; c < symbol.size(); ++c) m.symbol[c] = symbol[c] * o.symbol[c];
        return m;
    }
    MultiplierOp operator+(const MultiplierOp& o) const {
        if (!(grid == o.grid) || rows != o.rows || cols != o.cols) throw Error(ErrorKind::ShapeMismatch, "multiplier sum shapes");
        MultiplierOp m = *this;
        for (size_t c = 0; c < symbol.size(); ++c) m.symbol[c] += o.symbol[c];
        return m;
    }
    MultiplierOp operator-(const MultiplierOp& o) const { return *this + o * (-1.0); }
    MultiplierOp operator*(cplx a) const {
        MultiplierOp m = *this;
        for (auto& s : m.symbol) s *= a;
        return m;
    }
    MultiplierOp adjoint() const {
        MultiplierOp m = *this;
        std::swap(m.rows, m.cols);
        for (auto& s : m.symbol) s = s.adjoint().eval();
        return m;
    }
    /// Largest symbol norm: the exact L^2 operator norm of the multiplier.
    double l2_norm() const {
        double s = 0.0;
        for (const auto& m : symbol) s = std::max(s, norm2(m));
        return s;
    }

    CVector apply_values(const CVector& v) const {
        if (v.size() != grid.cells() * cols) throw Error(ErrorKind::ShapeMismatch, "multiplier: input shape");
        const CVector hat = fft_forward(grid, cols, v);
        CVector out(grid.cells() * rows);
        for (Eigen::Index c = 0; c < grid.cells(); ++c)
            out.segment(c * rows, rows).noalias() = symbol[size_t(c)] * hat.segment(c * cols, cols);
        return fft_inverse(grid, rows, out);
    }
};

inline GridField apply_multiplier(const MultiplierOp& m, const GridField& u) {
    if (!(u.grid == m.grid) || u.big_n != m.cols) throw Error(ErrorKind::ShapeMismatch, "apply_multiplier: shapes");
    return {m.grid, m.rows, m.apply_values(u.values)};
}

struct RPQ {
    MultiplierOp r, p, q;
};

/// R_tau = (I + i tau Pi)^{-1}, P_tau = (I + tau^2 Pi^2)^{-1}, Q_tau = tau Pi P_tau per lattice frequency.
inline RPQ make_rpq(const HodgeDiracSymbolPair& pair, const TorusGrid& gr, cplx tau) {
    const int nn = pair.big_n();
    if (pair.n() != gr.n) throw Error(ErrorKind::ShapeMismatch, "make_rpq: grid dimension differs from symbol");
    const CMatrix id = CMatrix::Identity(nn, nn);
    RPQ out;
    auto guarded = [&](const CMatrix& a, const RVector& xi) {
        Eigen::PartialPivLU<CMatrix> lu(a);
        const CMatrix inv = lu.inverse();
        if (!inv.allFinite() || (a * inv - id).norm() > 1e-8) {
            std::ostringstream os;
            os << "make_rpq: I + i tau Pi(xi) is singular at xi = " << xi.transpose();
            throw Error(ErrorKind::NotInvertible, os.str());
        }
        return inv;
    };
    // P and Q from R_{+tau}, R_{-tau}: (I + i tau Pi)(I - i tau Pi) = I + tau^2 Pi^2, and the
    // factors are better conditioned than the product
    out.r = MultiplierOp::from_function(
        gr, nn, nn, [&](const RVector& xi) { return guarded(id + cplx(0, 1) * tau * pair.eval_pi(xi), xi); }, id);
    const MultiplierOp rm = MultiplierOp::from_function(
        gr, nn, nn, [&](const RVector& xi) { return guarded(id - cplx(0, 1) * tau * pair.eval_pi(xi), xi); }, id);
    out.p = (out.r + rm) * 0.5;
    out.q = (out.r - rm) * cplx(0, 0.5);
    return out;
}

inline RPQ make_rpq(const HodgeDiracSymbolPair& pair, const TorusGrid& gr, double t) {
    return make_rpq(pair, gr, cplx(t, 0.0));
}

/// tau_z u(x) = u(x - z): index shift for lattice z, modulation by exp(-i xi.z) otherwise.
inline GridField translate(const GridField& u, const RVector& z) {
    const TorusGrid& gr = u.grid;
    if (z.size() != gr.n) throw Error(ErrorKind::ShapeMismatch, "translate: z has wrong dimension");
    std::vector<int> shift(gr.n);
    bool lattice = true;
    for (int a = 0; a < gr.n; ++a) {
        const double s = z(a) / gr.h();
        const double r = std::round(s);
        if (std::abs(s - r) > 1e-12 * std::max(1.0, std::abs(s))) lattice = false;
        shift[a] = int(std::fmod(r, double(gr.g)));
    }
    GridField out(gr, u.big_n);
    if (lattice) {
        for (Eigen::Index c = 0; c < gr.cells(); ++c) {
            auto idx = gr.unflatten(c);
            for (int a = 0; a < gr.n; ++a) idx[a] -= shift[a];
            out.at(c) = u.at(gr.flatten(idx));
        }
        return out;
    }
    CVector hat = fft_forward(gr, u.big_n, u.values);
    for (Eigen::Index c = 0; c < gr.cells(); ++c)
        hat.segment(c * u.big_n, u.big_n) *= std::exp(cplx(0, -gr.frequency(c).dot(z)));
    out.values = fft_inverse(gr, u.big_n, hat);
    return out;
}

/// (sum_cells |u(x)|^p * cell volume)^{1/p}, Euclidean norm on C^N.
inline double lp_norm(const GridField& u, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "lp_norm: p must lie in (1, inf)");
    double s = 0.0;
    for (Eigen::Index c = 0; c < u.grid.cells(); ++c) s += std::pow(u.at(c).norm(), p);
    return std::pow(s * u.grid.cell_volume(), 1.0 / p);
}

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

/// Mean over each dyadic block of side `scale` cells.
inline GridField dyadic_average(const GridField& u, int scale) {
    const TorusGrid& gr = u.grid;
    if (!is_power_of_two(scale) || gr.g % scale != 0)
        throw Error(ErrorKind::InvalidArgument, "dyadic_average: scale must be a power of 2 dividing g");
    const int nb = gr.g / scale;
    const Eigen::Index blocks = Eigen::Index(std::pow(nb, gr.n));
    CMatrix sums = CMatrix::Zero(u.big_n, blocks);
    auto block_of = [&](Eigen::Index c) {
        auto idx = gr.unflatten(c);
        Eigen::Index b = 0;
        for (int a = 0; a < gr.n; ++a) b = b * nb + idx[a] / scale;
        return b;
    };
    for (Eigen::Index c = 0; c < gr.cells(); ++c) sums.col(block_of(c)) += u.at(c);
    sums /= std::pow(double(scale), gr.n);
    GridField out(gr, u.big_n);
    for (Eigen::Index c = 0; c < gr.cells(); ++c) out.at(c) = sums.col(block_of(c));
    return out;
}

/// Trigonometric polynomial with seeded coefficients on lattice |m|_inf <= band, excluding |m|_inf < band_lo.
/// Coefficients depend only on (seed, m), so refining the grid samples the same function.
inline GridField random_trig_field(const TorusGrid& gr, int nn, int band, std::uint64_t seed, int band_lo = 0) {
    if (2 * band >= gr.g) throw Error(ErrorKind::InvalidArgument, "random_trig_field: band too wide for grid");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CVector hat = CVector::Zero(gr.cells() * nn);
    std::vector<int> m(gr.n, -band);
    const Eigen::Index scale = gr.cells();
    while (true) {
        int mx = 0;
        for (int v : m) mx = std::max(mx, std::abs(v));
        for (int k = 0; k < nn; ++k) {
            const cplx z(nd(rng), nd(rng));
            if (mx >= band_lo) hat(gr.flatten(m) * nn + k) = z * double(scale);
        }
        int a = gr.n - 1;
        while (a >= 0 && m[a] == band) m[a--] = -band;
        if (a < 0) break;
        ++m[a];
    }
    return {gr, nn, fft_inverse(gr, nn, hat)};
}

/// The gradient as the multiplier i xi: C^N -> C^{nN}.
inline MultiplierOp gradient_op(const TorusGrid& gr, int nn) {
    return MultiplierOp::from_function(
        gr, gr.n * nn, nn,
        [&](const RVector& xi) {
            CMatrix m = CMatrix::Zero(gr.n * nn, nn);
            for (int a = 0; a < gr.n; ++a) m.block(a * nn, 0, nn, nn) = cplx(0, xi(a)) * CMatrix::Identity(nn, nn);
            return m;
        },
        CMatrix::Zero(gr.n * nn, nn));
}

/// Dense matrix of a linear map on C^dim by columns.
inline CMatrix assemble_dense(const std::function<CVector(const CVector&)>& apply, Eigen::Index dim) {
    CMatrix m(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        CVector e = CVector::Zero(dim);
        e(j) = 1.0;
        m.col(j) = apply(e);
    }
    return m;
}

inline CMatrix assemble_dense(const MultiplierOp& m) {
    const Eigen::Index in = m.grid.cells() * m.cols, outd = m.grid.cells() * m.rows;
    CMatrix d(outd, in);
    for (Eigen::Index j = 0; j < in; ++j) {
        CVector e = CVector::Zero(in);
        e(j) = 1.0;
        d.col(j) = m.apply_values(e);
    }
    return d;
}

/// Cell-wise N x N matrix function: a multiplication operator on GridField.
struct MatrixField {
    TorusGrid grid;
    int big_n = 1;
    std::vector<CMatrix> cells;

    static MatrixField constant(const TorusGrid& gr, const CMatrix& m) {
        MatrixField f;
        f.grid = gr;
        f.big_n = int(m.rows());
        f.cells.assign(size_t(gr.cells()), m);
        return f;
    }
    static MatrixField identity(const TorusGrid& gr, int nn) { return constant(gr, CMatrix::Identity(nn, nn)); }

    GridField apply(const GridField& u) const {
        if (!(u.grid == grid) || u.big_n != big_n) throw Error(ErrorKind::ShapeMismatch, "matrix field: shapes");
        GridField out(grid, big_n);
        for (Eigen::Index c = 0; c < grid.cells(); ++c) out.at(c).noalias() = cells[size_t(c)] * u.at(c);
        return out;
    }
    CVector apply_values(const CVector& v) const {
        CVector out(v.size());
        for (Eigen::Index c = 0; c < grid.cells(); ++c)
            out.segment(c * big_n, big_n).noalias() = cells[size_t(c)] * v.segment(c * big_n, big_n);
        return out;
    }
    MatrixField adjoint() const {
        MatrixField f = *this;
        for (auto& m : f.cells) m = m.adjoint().eval();
        return f;
    }
    MatrixField operator*(const MatrixField& o) const {
        MatrixField f = *this;
        for (size_t c = 0; c < cells.size(); ++c) f.cells[c] = cells[c] * o.cells[c];
        return f;
    }
    MatrixField operator+(const MatrixField& o) const {
        MatrixField f = *this;
        for (size_t c = 0; c < cells.size(); ++c) f.cells[c] += o.cells[c];
        return f;
    }
    MatrixField operator-(const MatrixField& o) const { return *this + o * cplx(-1.0); }
    MatrixField operator*(cplx a) const {
        MatrixField f = *this;
        for (auto& m : f.cells) m *= a;
        return f;
    }
    /// max over cells of the operator 2-norm.
    double sup_norm() const {
        double s = 0.0;
        for (const auto& m : cells) s = std::max(s, norm2(m));
        return s;
    }
    CMatrix dense() const {
        const Eigen::Index d = grid.cells() * big_n;
        CMatrix out = CMatrix::Zero(d, d);
        for (Eigen::Index c = 0; c < grid.cells(); ++c) out.block(c * big_n, c * big_n, big_n, big_n) = cells[size_t(c)];
        return out;
    }
};

/// Random cell-wise diagonal field with real entries in [-1, 1], scaled so that sup_norm = 1.
inline MatrixField random_diagonal_field(const TorusGrid& gr, int nn, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    MatrixField f = MatrixField::constant(gr, CMatrix::Zero(nn, nn));
    double mx = 0.0;
    for (auto& m : f.cells)
        for (int i = 0; i < nn; ++i) {
            m(i, i) = ud(rng);
            mx = std::max(mx, std::abs(m(i, i)));
        }
    for (auto& m : f.cells) m /= mx;
    return f;
}

} // namespace hfc
