#include "fixtures.hpp"
#include "hfc/field_io.hpp"
#include "hfc/torus.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace hfc;

namespace {

GridField plane_wave(const TorusGrid& gr, int m, const CVector& w) {
    GridField u(gr, int(w.size()));
    for (Eigen::Index c = 0; c < gr.cells(); ++c) u.at(c) = std::exp(cplx(0, m * gr.position(c)(0))) * w;
    return u;
}

CVector v2(cplx a, cplx b) {
    CVector v(2);
    v << a, b;
    return v;
}

} // namespace

TEST(Grid, Validation) {
    EXPECT_THROW(TorusGrid(1, 6), Error);
    EXPECT_THROW(TorusGrid(1, 2), Error);
    TorusGrid gr(1, 8);
    EXPECT_EQ(gr.lattice(4), 4);
    EXPECT_EQ(gr.lattice(5), -3);
}

TEST(Multiplier, IdentityLeavesFieldUnchanged) {
    TorusGrid gr(2, 16);
    GridField u = random_trig_field(gr, 3, 5, 1);
    GridField v = apply_multiplier(MultiplierOp::identity(gr, 3), u);
    EXPECT_LT((v - u).values.norm(), 1e-12 * u.values.norm());
}

TEST(Multiplier, PlaneWaveThroughQ1) {
    TorusGrid gr(1, 32);
    auto rpq = make_rpq(fx::dirac(), gr, 1.0);
    GridField u = plane_wave(gr, 1, v2(1, 0));
    GridField want = plane_wave(gr, 1, v2(0, 0.5));
    EXPECT_LT((apply_multiplier(rpq.q, u) - want).values.norm(), 1e-12 * u.values.norm());
}

TEST(Multiplier, CompositionIsPointwiseProduct) {
    TorusGrid gr(1, 64);
    auto a = make_rpq(fx::dirac(), gr, 0.7);
    auto b = make_rpq(fx::dirac(), gr, 2.3);
    std::mt19937_64 rng(5);
    GridField u(gr, 2, random_complex(gr.cells() * 2, 1, rng));
    GridField lhs = apply_multiplier(a.q, apply_multiplier(b.r, u));
    GridField rhs = apply_multiplier(a.q * b.r, u);
    EXPECT_LT((lhs - rhs).values.norm(), 1e-10 * u.values.norm());
}

TEST(Multiplier, Linearity) {
    TorusGrid gr(2, 16);
    auto m = make_rpq(fx::load_pair("grad_div_2d"), gr, 0.3).r;
    std::mt19937_64 rng(6);
    GridField u(gr, 4, random_complex(gr.cells() * 4, 1, rng)), v(gr, 4, random_complex(gr.cells() * 4, 1, rng));
    const cplx a(0.3, -1.0), b(2.0, 0.5);
    GridField lhs = apply_multiplier(m, u * a + v * b);
    GridField rhs = apply_multiplier(m, u) * a + apply_multiplier(m, v) * b;
    EXPECT_LE((lhs - rhs).values.norm(), 1e-10 * (u.values.norm() + v.values.norm()));
}

TEST(Rpq, ZeroT) {
    TorusGrid gr(1, 16);
    auto rpq = make_rpq(fx::dirac(), gr, 0.0);
    for (size_t c = 0; c < rpq.r.symbol.size(); ++c) {
        EXPECT_EQ((rpq.r.symbol[c] - CMatrix::Identity(2, 2)).norm(), 0.0);
        EXPECT_EQ((rpq.p.symbol[c] - CMatrix::Identity(2, 2)).norm(), 0.0);
        EXPECT_EQ(rpq.q.symbol[c].norm(), 0.0);
    }
}

TEST(Rpq, DiracAtOne) {
    TorusGrid gr(1, 16);
    auto rpq = make_rpq(fx::dirac(), gr, 1.0);
    // flat index 1 is the lattice frequency 1
    EXPECT_LT((rpq.p.symbol[1] - 0.5 * CMatrix::Identity(2, 2)).norm(), 1e-15);
    EXPECT_LT((rpq.q.symbol[1] - 0.5 * fx::mat2(0, 1, 1, 0)).norm(), 1e-15);
    EXPECT_EQ((rpq.p.zero_mode() - CMatrix::Identity(2, 2)).norm(), 0.0);
    EXPECT_EQ(rpq.q.zero_mode().norm(), 0.0);
    EXPECT_EQ((rpq.r.zero_mode() - CMatrix::Identity(2, 2)).norm(), 0.0);
}

TEST(Rpq, ResolventIdentities) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ut(-3.0, 3.0);
    auto pair = fx::load_pair("grad_div_2d");
    TorusGrid gr(2, 16);
    for (int trial = 0; trial < 5; ++trial) {
        const double t = std::pow(10.0, ut(rng));
        auto a = make_rpq(pair, gr, t), b = make_rpq(pair, gr, -t);
        for (Eigen::Index c = 0; c < gr.cells(); ++c) {
            const CMatrix pi = pair.eval_pi(gr.frequency(c));
            const CMatrix& p = a.p.symbol[size_t(c)];
            const double lam2 = std::max(1.0, norm2(pi * pi));
            EXPECT_LT((p + t * t * pi * pi * p - CMatrix::Identity(4, 4)).norm(), 1e-12 * (1 + t * t * lam2));
            EXPECT_LT((a.q.symbol[size_t(c)] - t * pi * p).norm(), 1e-12);
            EXPECT_LT((p - 0.5 * (a.r.symbol[size_t(c)] + b.r.symbol[size_t(c)])).norm(), 1e-12);
            EXPECT_LT((a.q.symbol[size_t(c)] - cplx(0, 0.5) * (a.r.symbol[size_t(c)] - b.r.symbol[size_t(c)])).norm(), 1e-12);
        }
    }
}

TEST(Translate, ZeroAndCell) {
    TorusGrid gr(2, 8);
    GridField u = random_trig_field(gr, 2, 3, 2);
    EXPECT_EQ((translate(u, fx::vec({0.0, 0.0})) - u).values.norm(), 0.0);
    GridField s = translate(u, fx::vec({gr.h(), 0.0}));
    for (Eigen::Index c = 0; c < gr.cells(); ++c) {
        auto idx = gr.unflatten(c);
        idx[0] -= 1;
        EXPECT_EQ((s.at(c) - u.at(gr.flatten(idx))).norm(), 0.0);
    }
}

TEST(Translate, RoundTrip) {
    TorusGrid gr(1, 64);
    std::mt19937_64 rng(14);
    GridField u(gr, 2, random_complex(gr.cells() * 2, 1, rng));
    RVector z = fx::vec({0.3719});
    GridField back = translate(translate(u, z), -z);
    EXPECT_LT((back - u).values.norm(), 1e-12 * u.values.norm());
}

TEST(Translate, ModulationMatchesShiftOnBandLimited) {
    TorusGrid gr(1, 64);
    GridField u = random_trig_field(gr, 1, 8, 3);
    const double z = 0.4;
    GridField s = translate(u, fx::vec({z}));
    // evaluate the trigonometric polynomial at x - z directly
    CVector hat = fft_forward(gr, 1, u.values) / double(gr.cells());
    for (Eigen::Index c = 0; c < gr.cells(); ++c) {
        cplx v = 0.0;
        for (Eigen::Index k = 0; k < gr.cells(); ++k)
            v += hat(k) * std::exp(cplx(0, gr.frequency(k)(0) * (gr.position(c)(0) - z)));
        EXPECT_LT(std::abs(v - s.values(c)), 1e-12 * u.values.norm());
    }
}

TEST(LpNorm, ZeroAndConstant) {
    TorusGrid gr(2, 16);
    EXPECT_EQ(lp_norm(GridField(gr, 2), 3.0), 0.0);
    GridField c = constant_field(gr, v2(3.0, cplx(0, 4.0)));
    for (double p : {1.5, 2.0, 4.0})
        EXPECT_NEAR(lp_norm(c, p), 5.0 * std::pow(2 * M_PI, 2.0 / p), 1e-12 * 5 * std::pow(2 * M_PI, 2.0 / p));
    EXPECT_THROW(lp_norm(c, 1.0), Error);
    EXPECT_THROW(lp_norm(c, INFINITY), Error);
}

TEST(LpNorm, Parseval) {
    TorusGrid gr(2, 32);
    std::mt19937_64 rng(15);
    GridField u(gr, 3, random_complex(gr.cells() * 3, 1, rng));
    CVector hat = fft_forward(gr, 3, u.values);
    // sum |u|^2 h^n = (L^n / g^{2n}) sum |hat|^2
    const double freq = std::sqrt(hat.squaredNorm() * std::pow(gr.length, gr.n) / std::pow(double(gr.cells()), 2));
    EXPECT_NEAR(lp_norm(u, 2.0), freq, 1e-10 * freq);
}

TEST(Dyadic, Basics) {
    TorusGrid gr(2, 16);
    std::mt19937_64 rng(13);
    GridField u(gr, 2, random_complex(gr.cells() * 2, 1, rng));
    EXPECT_EQ((dyadic_average(u, 1) - u).values.norm(), 0.0);
    GridField whole = dyadic_average(u, 16);
    CVector mean = CVector::Zero(2);
    for (Eigen::Index c = 0; c < gr.cells(); ++c) mean += u.at(c);
    mean /= double(gr.cells());
    for (Eigen::Index c = 0; c < gr.cells(); ++c) EXPECT_LT((whole.at(c) - mean).norm(), 1e-14);
    GridField a = dyadic_average(u, 4);
    EXPECT_LT((dyadic_average(a, 4) - a).values.norm(), 1e-12 * a.values.norm());
    EXPECT_THROW(dyadic_average(u, 3), Error);
    EXPECT_THROW(dyadic_average(u, 32), Error);
}

TEST(FieldIo, RoundTripFloat32) {
    TorusGrid gr(2, 8, 3.0);
    GridField u = random_trig_field(gr, 2, 3, 7);
    const auto dir = std::filesystem::temp_directory_path();
    const std::string path = (dir / "hfc_field_test.bin").string();
    write_field(path, u);
    EXPECT_EQ(std::filesystem::file_size(path), 32u + 8u * std::uintmax_t(u.values.size()));
    GridField v = read_field(path);
    EXPECT_TRUE(v.grid == u.grid);
    EXPECT_LT((v - u).values.cwiseAbs().maxCoeff(), 1e-6 * u.values.cwiseAbs().maxCoeff());
    MatrixField m = random_diagonal_field(gr, 2, 3);
    write_matrix_field(path, m);
    MatrixField m2 = read_matrix_field(path);
    EXPECT_LT((m2 - m).sup_norm(), 1e-6);
    EXPECT_THROW(read_field(path), Error);
    std::remove(path.c_str());
}

// ---- invariants on the torus ----

TEST(TorusProbes, ResolventBoundStableUnderRefinement) {
    auto pair = fx::dirac();
    std::vector<double> consts;
    for (int g : {64, 128}) {
        TorusGrid gr(1, g);
        double sup = 0.0;
        for (int j = 0; j < 50; ++j) {
            // lambda outside S_{pi/4}: angles in (pi/4, pi/2], radii spread over two decades
            const double ang = M_PI / 4 + 0.05 + (M_PI / 4 - 0.05) * (j % 10) / 9.0;
            const cplx lam = std::polar(std::pow(10.0, -1.0 + 2.0 * (j / 10) / 4.0), (j % 2 ? ang : M_PI - ang));
            auto m = MultiplierOp::from_function(
                gr, 2, 2, [&](const RVector& xi) { return lam * resolvent(pair.eval_pi(xi), lam); },
                CMatrix::Identity(2, 2));
            for (int tr = 0; tr < 4; ++tr) {
                GridField u = random_trig_field(gr, 2, 16, 100 + 4 * j + tr);
                sup = std::max(sup, lp_norm(apply_multiplier(m, u), 2.0) / lp_norm(u, 2.0));
            }
            EXPECT_LE(sup, m.l2_norm() * (1 + 1e-12));
        }
        consts.push_back(sup);
    }
    EXPECT_TRUE(std::isfinite(consts[0]));
    EXPECT_NEAR(consts[1] / consts[0], 1.0, 0.1);
}

TEST(TorusProbes, Coercivity) {
    auto pair = fx::load_pair("grad_div_2d");
    std::vector<double> cs;
    for (int g : {32, 64}) {
        TorusGrid gr(2, g);
        auto pi = MultiplierOp::of_symbol(gr, pair.pi());
        auto grad = gradient_op(gr, 4);
        auto pran = MultiplierOp::from_function(
            gr, 4, 4, [&](const RVector& xi) { return spectral_split(pair.eval_pi(xi)).p_ran; }, CMatrix::Zero(4, 4));
        double c = 0.0;
        for (int s = 0; s < 6; ++s) {
            GridField u = apply_multiplier(pran, random_trig_field(gr, 4, 6, 40 + s));
            c = std::max(c, lp_norm(apply_multiplier(grad, u), 3.0) / lp_norm(apply_multiplier(pi, u), 3.0));
        }
        cs.push_back(c);
    }
    EXPECT_TRUE(std::isfinite(cs[0]));
    EXPECT_NEAR(cs[1] / cs[0], 1.0, 0.1);
}

TEST(TorusProbes, KernelIntersection) {
    auto pair = fx::load_pair("grad_div_2d");
    TorusGrid gr(2, 16);
    auto pker = MultiplierOp::from_function(
        gr, 4, 4, [&](const RVector& xi) { return spectral_split(pair.eval_pi(xi)).p_ker; }, CMatrix::Identity(4, 4));
    GridField u = apply_multiplier(pker, random_trig_field(gr, 4, 6, 77));
    auto gam = MultiplierOp::of_symbol(gr, pair.gamma), gamt = MultiplierOp::of_symbol(gr, pair.gamma_tilde);
    EXPECT_LT(apply_multiplier(MultiplierOp::of_symbol(gr, pair.pi()), u).values.norm(), 1e-10 * u.values.norm());
    EXPECT_LE(lp_norm(apply_multiplier(gam, u), 2.0) + lp_norm(apply_multiplier(gamt, u), 2.0), 1e-10 * lp_norm(u, 2.0));
}
