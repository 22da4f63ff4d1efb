#include <cmath>

#include "doctest.h"
#include "dw/conjugation.hpp"
#include "dw/waves.hpp"

using namespace dw;

namespace {
const double PI = TorusGrid::pi();
}

TEST_CASE("transport diffeomorphism") {
    TorusGrid g(32, 32, 1.0);

    SUBCASE("trivial field V = (1,0) gives d = x2") {
        FourierField v1(g), v2(g);
        v1.atk(0, 0) = 1.0;
        DiffeoPack pack = transport_diffeo(v1, v2);
        CHECK(sobolev_norm(pack.d_periodic, 0.0) < 1e-13);
        CHECK(pack.w_periodicity_defect < 1e-13);
    }

    SUBCASE("perturbed field: O(eps) deviation, (e,o) parity, unit means") {
        double eps = 0.05;
        FourierField v1(g), v2(g);
        v1.atk(0, 0) = 1.0;
        FourierField bump = field_from(g, [&](double x1, double x2) {
            return eps * std::sin(x1) * std::sin(x2);
        });  // V2 in C(o,o) like a diamond wave's
        DiffeoPack pack = transport_diffeo(v1, bump);
        CHECK(sobolev_norm(pack.d_periodic, 0.0) < 5 * eps);
        CHECK(sobolev_norm(pack.d_periodic, 0.0) > 0.01 * eps);
        CHECK(parity_defect(pack.d_periodic, Parity::eo) < 1e-8);
        CHECK(pack.transport_residual < 1e-8);
        CHECK(pack.w_mean_defect < 1e-10);
        // dz d = w > 0 on the grid
        FourierField w = dx2(pack.d_periodic);
        w.atk(0, 0) += 1.0;
        CHECK(min_value(w) > 0.0);
    }

    SUBCASE("vanishing V1 is rejected") {
        FourierField v1 = field_from(g, [](double x1, double) { return std::cos(x1); });
        FourierField v2(g);
        CHECK_THROWS_WITH_AS(static_cast<void>(transport_diffeo(v1, v2)),
                             doctest::Contains("transversality-lost"), Error);
    }
}

TEST_CASE("compute_nu") {
    TorusGrid g(32, 32, 1.0);
    SolverConfig sc;
    sc.depth = 2.5;
    sc.nz = 32;

    SUBCASE("trivial wave gives nu = 1/mu to 1e-10") {
        double mu = 0.8;
        FourierField v1(g), v2(g), ones(g);
        v1.atk(0, 0) = 1.0;
        ones.atk(0, 0) = 1.0;
        FourierField taylor(g);
        taylor.atk(0, 0) = mu;
        DiffeoPack pack = transport_diffeo(v1, v2);
        FourierField p2 = transport_p2(FourierField(g), pack);
        double nu = compute_nu(p2, taylor, v1, pack);
        CHECK(std::abs(nu - 1.0 / mu) < 1e-10);
        CHECK(pack.has_second_stage);
        // gamma is identically positive, here = 1 up to round-off
        CHECK(std::abs(max_abs(pack.gamma) - 1.0) < 1e-10);
    }

    SUBCASE("Stokes sweep: |nu - 1/mu| = O(eps^2) and nu >= 0") {
        auto nu_of = [&](double e) {
            auto [w, sd] = stokes_wave(g, e);
            FourierField gp = dtn_apply(w.sigma, w.psi, sc);
            BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
            DiffeoPack pack = transport_diffeo(bc.V1, bc.V2);
            FourierField p2 = transport_p2(w.sigma, pack);
            double nu = compute_nu(p2, bc.taylor, bc.V1, pack);
            CHECK(nu >= 0.0);
            return std::abs(nu - 1.0 / w.mu);
        };
        double d1 = nu_of(0.04), d2 = nu_of(0.08);
        double slope = std::log(d2 / d1) / std::log(2.0);
        CHECK(slope >= 1.7);
    }

    SUBCASE("nonpositive Taylor factor is named in the error") {
        FourierField v1(g), v2(g);
        v1.atk(0, 0) = 1.0;
        FourierField taylor(g);
        taylor.atk(0, 0) = -0.5;
        DiffeoPack pack = transport_diffeo(v1, v2);
        FourierField p2 = transport_p2(FourierField(g), pack);
        CHECK_THROWS_WITH_AS(static_cast<void>(compute_nu(p2, taylor, v1, pack)),
                             doctest::Contains("Taylor"), Error);
    }
}

TEST_CASE("paracomposition") {
    TorusGrid g(32, 32, 1.0);
    std::mt19937_64 rng(9);

    SUBCASE("identity map reproduces high-frequency content") {
        FourierField f(g);
        f.atk(9, 4) = cplx(0.3, 0.0);
        f.atk(-9, -4) = cplx(0.3, 0.0);
        FourierField pf = paracomposition(identity_samples(g), f, 2);
        pf -= f;
        // identity composition: each block returns exactly itself; the
        // window sum covers every populated band
        CHECK(sobolev_norm(pf, 0.0) < 1e-10);
    }

    SUBCASE("norm equivalence across a dyadic sweep") {
        // chi from a genuine small wave
        TorusGrid gw(32, 32, 1.0);
        SolverConfig sc;
        sc.depth = 2.0;
        sc.nz = 24;
        auto [w, sd] = stokes_wave(gw, 0.05);
        FourierField gp = dtn_apply(w.sigma, w.psi, sc);
        BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
        DiffeoPack pack = transport_diffeo(bc.V1, bc.V2);
        FourierField p2 = transport_p2(w.sigma, pack);
        compute_nu(p2, bc.taylor, bc.V1, pack);
        MapSamples chi = map_samples(pack);
        for (int k : {2, 3}) {
            FourierField f = random_band_field(g, k, rng);
            double n0 = sobolev_norm(f, 1.0);
            double n1 = sobolev_norm(paracomposition(chi, f, 2), 1.0);
            CHECK(n1 / n0 > 0.5);
            CHECK(n1 / n0 < 2.0);
        }
    }

    SUBCASE("inverse composition is a smoothing perturbation of the identity") {
        TorusGrid big(128, 128, 1.0);
        // synthetic smooth diffeo chi = x + small periodic shift
        DiffeoPack pack;
        pack.grid = big;
        pack.d_periodic = field_from(big, [](double x1, double x2) {
            return 0.08 * std::sin(x1) * std::sin(x2);
        });
        MapSamples chi = map_samples(pack);
        MapSamples chi_inv = inverse_map_samples(pack);
        auto op = [&](const FourierField& u) {
            FourierField v = paracomposition(chi_inv, u, 2);
            v = paracomposition(chi, v, 2);
            v -= u;
            return v;
        };
        std::mt19937_64 prng(3);
        ProbeResult r = operator_order_probe(op, big, {2, 3, 4}, 1, prng);
        CHECK(r.slope <= -1.0 + 0.3);
    }

    SUBCASE("N sensitivity diagnostic is small for smooth maps") {
        DiffeoPack pack;
        pack.grid = g;
        pack.d_periodic = field_from(g, [](double x1, double x2) {
            return 0.05 * std::sin(x1) * std::sin(x2);
        });
        MapSamples chi = map_samples(pack);
        std::mt19937_64 prng(5);
        FourierField f = random_band_field(g, 3, prng);
        ParacompositionSensitivity sens = paracomposition_sensitivity(chi, f, 2);
        CHECK(sens.drift < 0.05);
    }
}

TEST_CASE("symbol decomposition") {
    TorusGrid g(16, 16, 1.0);
    DirectionMesh mesh(256);
    double nu = 1.3;

    SUBCASE("x-only symbol: S0 = S, higher coefficients vanish") {
        FourierField sf = field_from(g, [](double x1, double x2) {
            return std::cos(x1) + 0.3 * std::sin(x2);
        });
        HomogeneousComponent S = xonly_component(sf, mesh);
        SymbolDecomposition dec = symbol_decompose(S, nu);
        FourierField diff = dec.S[0] - sf;
        CHECK(sobolev_norm(diff, 0.0) < 1e-9);
        for (int j = 1; j <= 4; ++j)
            CHECK(sobolev_norm(dec.S[j], 0.0) < 1e-7);
    }

    SUBCASE("S = xi1/|xi2| against the finite-difference oracle") {
        HomogeneousComponent S = multiplier_component(g, mesh, 0.0, [](double w1, double w2) {
            return w2 == 0.0 ? cplx(0, 0) : cplx(w1 / std::abs(w2), 0.0);
        });
        SymbolDecomposition dec = symbol_decompose(S, nu);
        // FD oracle for dxi1^j S at (0,1): S((t,1)) = t
        // j=1 derivative = 1, all higher derivatives 0
        CHECK(std::abs(dec.S[0].atk(0, 0)) < 1e-9);
        cplx s1 = dec.S[1].atk(0, 0);
        // S_1 = F_1 (i/nu); F_1 = 1
        CHECK(std::abs(s1 - cplx(0.0, 1.0 / nu)) < 1e-8);
        for (int j = 2; j <= 4; ++j)
            CHECK(sobolev_norm(dec.S[j], 0.0) < 1e-6);
    }

    SUBCASE("symmetry violation is rejected") {
        HomogeneousComponent S = multiplier_component(g, mesh, 0.0, [](double, double w2) {
            return cplx(w2, 0.0);  // odd in xi2
        });
        CHECK_THROWS_WITH_AS(static_cast<void>(symbol_decompose(S, nu)),
                             doctest::Contains("symmetry"), Error);
    }

    SUBCASE("parity transport of the S_j under (x,xi) -> (x*, xi*)") {
        // S(x*, xi*) = S(x, xi)  =>  S_j(x*) = (-1)^j S_j(x)
        std::mt19937_64 rng(13);
        RandomFieldSpec es;
        es.band_hi = 4.0;
        es.unit_h0 = false;
        FourierField ge = random_field(g, es, rng);
        ge = enforce_parity(ge, Parity::ee);
        FourierField go = random_field(g, es, rng);
        go = enforce_parity(go, Parity::oe);
        // S = ge(x) + i sin(theta-ish) pairing via odd field times xi1/|xi2|
        HomogeneousComponent S(g, mesh, 0.0);
        std::vector<double> gev = ge.values(), gov = go.values();
        for (int j = 0; j < mesh.size(); ++j) {
            double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
            double t = w2 == 0.0 ? 0.0 : w1 / std::abs(w2);
            for (int ix = 0; ix < g.size(); ++ix)
                S.at(j, ix) = gev[ix] + gov[ix] * t;  // even under the star map
        }
        SymbolDecomposition dec = symbol_decompose(S, nu);
        for (int j = 0; j <= 4; ++j) {
            // compare S_j(x) with (-1)^j S_j(-x1, x2)
            const TorusGrid& gg = dec.S[j].grid();
            std::vector<cplx> v = dec.S[j].values_complex();
            double worst = 0.0, scale = 0.0;
            for (int i1 = 0; i1 < gg.n1(); ++i1)
                for (int i2 = 0; i2 < gg.n2(); ++i2) {
                    int r1 = (gg.n1() - i1) % gg.n1();
                    cplx want = (j % 2 ? -1.0 : 1.0) * v[static_cast<size_t>(r1) * gg.n2() + i2];
                    worst = std::max(worst,
                                     std::abs(v[static_cast<size_t>(i1) * gg.n2() + i2] - want));
                    scale = std::max(scale, std::abs(v[static_cast<size_t>(i1) * gg.n2() + i2]));
                }
            if (scale > 1e-12)
                CHECK(worst / scale < 1e-6);
        }
    }

    SUBCASE("full operator decomposition identity on cone-supported data") {
        // T_S dx1 v == sum_j T_{S_j} dx1^{1-j} v
        //            + sum_k T_{q_k} dx1^{1-k} (-i dx2 + nu dx1^2) v + T_w v
        TorusGrid gg(64, 64, 1.0);
        DirectionMesh m2(256);
        std::mt19937_64 rng(21);
        RandomFieldSpec es;
        es.band_hi = 3.0;
        es.unit_h0 = false;
        FourierField gx = random_field(gg, es, rng);
        gx *= 0.5 / std::max(max_abs(gx), 1e-30);
        // S = g(x) * (xi2^2 - 0.3 xi1^2)/|xi|^2: even in xi2 with a finite
        // angular series, so the quantization interpolates it exactly
        HomogeneousComponent S(gg, m2, 0.0);
        std::vector<double> gval = gx.values();
        for (int j = 0; j < m2.size(); ++j) {
            double w1 = m2.omega1(j), w2 = m2.omega2(j);
            double ang = w2 * w2 - 0.3 * w1 * w1;
            for (int ix = 0; ix < gg.size(); ++ix)
                S.at(j, ix) = gval[ix] * ang;
        }
        double nu2 = 1.15;
        SymbolDecomposition dec = symbol_decompose(S, nu2, 1.0);

        // v supported high in the cone xi2 >= |xi1|, xi2 > 0
        FourierField v(gg);
        for (auto [k1, k2] : std::vector<std::pair<int, int>>{{1, 14}, {-2, 17}, {0, 21}, {3, 19}})
            v.atk(k1, k2) = cplx(0.3, 0.1);

        SeparableSymbol Ssep = to_separable(SymbolExpansion({S}));
        FourierField lhs = apply_paradiff(Ssep, dx1(v));

        FourierField rhs(gg);
        for (int j = 0; j <= 4; ++j) {
            SeparableSymbol sj = SeparableSymbol::from_field(dec.S[j]);
            FourierField arg = j == 0 ? dx1(v) : dx1_inverse(v, j - 1);
            rhs += apply_paradiff(sj, arg);
        }
        // (-i dx2 + nu dx1^2) v has symbol xi2 - nu xi1^2
        FourierField Lv = fourier_multiplier(
            [&](double k1, double k2) { return k2 - nu2 * k1 * k1; }, v);
        for (int k = 1; k <= 4; ++k) {
            SeparableSymbol qk = to_separable(dec.q[k - 1]);
            if (qk.terms.empty())
                continue;
            rhs += apply_paradiff(qk, dx1_inverse(Lv, k - 1));
        }
        {
            SeparableSymbol ws = to_separable(dec.w_residual);
            if (!ws.terms.empty())
                rhs += apply_paradiff(ws, v);
        }
        FourierField diff = lhs - rhs;
        double rel = sobolev_norm(diff, 0.0) / std::max(sobolev_norm(lhs, 0.0), 1e-30);
        CHECK(rel < 1e-6);
    }
}

TEST_CASE("coefficient cascade") {
    TorusGrid g(32, 32, 1.0);
    double nu = 1.2, ell = 1.0;

    SUBCASE("all-zero inputs give c0 = 1, rest zero") {
        std::array<FourierField, 5> a;
        for (auto& f : a)
            f = FourierField(g);
        CascadeResult r = coefficient_cascade(a, nu, ell);
        CHECK(std::abs(r.kappa) < 1e-14);
        CHECK(std::abs(r.kappa_prime) < 1e-14);
        FourierField one(g);
        one.atk(0, 0) = 1.0;
        FourierField d0 = r.c[0] - one;
        CHECK(sobolev_norm(d0, 0.0) < 1e-13);
        for (int k = 1; k <= 4; ++k)
            CHECK(sobolev_norm(r.c[k], 0.0) < 1e-13);
    }

    SUBCASE("constant real a1: kappa = a1, C0 = 1, kappa' = 0") {
        std::array<FourierField, 5> a;
        for (auto& f : a)
            f = FourierField(g);
        a[1].atk(0, 0) = 0.37;
        CascadeResult r = coefficient_cascade(a, nu, ell);
        CHECK(r.kappa.real() == doctest::Approx(0.37).epsilon(1e-13));
        CHECK(std::abs(r.kappa.imag()) < 1e-14);
        CHECK(std::abs(r.kappa_prime) < 1e-12);
        for (auto& c0v : r.C0)
            CHECK(std::abs(c0v - cplx(1, 0)) < 1e-12);
        for (int k = 1; k <= 4; ++k)
            CHECK(sobolev_norm(r.c[k], 0.0) < 1e-12);
    }

    SUBCASE("kappa depends only on the means") {
        std::mt19937_64 rng(3);
        RandomFieldSpec spec;
        spec.band_hi = 6.0;
        spec.unit_h0 = false;
        std::array<FourierField, 5> a;
        for (auto& f : a)
            f = FourierField(g);
        FourierField a1 = random_field(g, spec, rng);
        a1 *= 0.917;
        a[1] = a1;
        CascadeResult base = coefficient_cascade(a, nu, ell);
        // add an exact x1-derivative with zero double mean
        FourierField h = random_field(g, spec, rng);
        a[1] += dx1(h);
        CascadeResult shifted = coefficient_cascade(a, nu, ell);
        CHECK(std::abs(base.kappa - shifted.kappa) < 1e-12);
    }

    SUBCASE("zero-mean violation raises") {
        std::array<FourierField, 5> a;
        for (auto& f : a)
            f = FourierField(g);
        // a0 with nonzero x1-mean and purely imaginary values
        a[0] = field_from(g, [](double, double x2) { return std::sin(x2); });
        for (auto& c : a[0].coeffs())
            c *= cplx(0.0, 1.0);
        CHECK_THROWS_WITH_AS(static_cast<void>(coefficient_cascade(a, nu, ell)),
                             doctest::Contains("zero-mean"), Error);
    }
}
