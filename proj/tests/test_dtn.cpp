#include <cmath>

#include "doctest.h"
#include "dw/dtn.hpp"
#include "dw/waves.hpp"

using namespace dw;

TEST_CASE("flat-surface solver is exact") {
    TorusGrid g(32, 32, 1.0);
    SolverConfig sc;
    sc.depth = 1.5;
    sc.nz = 32;
    DtnSolver solver(g, sc);
    FourierField sigma(g);

    SUBCASE("harmonic extension of cos x1 is e^z cos x1") {
        FourierField psi = field_from(g, [](double x1, double) { return std::cos(x1); });
        FlattenedPotential v = solver.solve(sigma, psi);
        double worst = 0.0;
        for (int j = 0; j <= sc.nz; ++j) {
            double z = v.zgrid().nodes[j];
            FourierField slice = v.slice_field(j);
            double want = 0.5 * std::exp(z);
            worst = std::max(worst, std::abs(slice.atk(1, 0).real() - want));
            worst = std::max(worst, std::abs(slice.atk(-1, 0).real() - want));
        }
        CHECK(worst < 1e-10);
    }

    SUBCASE("G(0) cos(k x1) = k cos(k x1)") {
        for (int k : {1, 2, 5}) {
            FourierField psi(g);
            psi.atk(k, 0) = 0.5;
            psi.atk(-k, 0) = 0.5;
            FourierField gp = solver.apply(sigma, psi);
            gp -= static_cast<double>(k) * psi;
            CHECK(sobolev_norm(gp, 0.0) < 1e-10 * k);
        }
    }

    SUBCASE("G(0) cos(x2/ell) = (1/ell) cos(x2/ell)") {
        TorusGrid g2(32, 32, 2.0);
        DtnSolver s2(g2, sc);
        FourierField sig2(g2);
        FourierField psi(g2);
        psi.atk(0, 1) = 0.5;
        psi.atk(0, -1) = 0.5;
        FourierField gp = s2.apply(sig2, psi);
        gp -= 0.5 * psi;  // |(0, 1/ell)| = 1/2
        CHECK(sobolev_norm(gp, 0.0) < 1e-10);
    }

    SUBCASE("psi = 0 gives v = 0") {
        FourierField psi(g);
        FlattenedPotential v = solver.solve(sigma, psi);
        for (int j = 0; j <= sc.nz; ++j)
            CHECK(sobolev_norm(v.slice_field(j), 0.0) == 0.0);
    }
}

TEST_CASE("curved-surface solver") {
    TorusGrid g(32, 32, 1.0);
    FourierField sigma = field_from(g, [](double x1, double) { return 0.1 * std::cos(x1); });
    FourierField psi = field_from(g, [](double x1, double) { return std::cos(x1); });

    SUBCASE("self-convergence under nz and depth refinement") {
        SolverConfig c1;
        c1.depth = 2.0;
        c1.nz = 24;
        SolverConfig c2;
        c2.depth = 4.0;
        c2.nz = 48;
        FourierField a = dtn_apply(sigma, psi, c1);
        FourierField b = dtn_apply(sigma, psi, c2);
        a -= b;
        CHECK(sobolev_norm(a, 0.0) < 1e-8);
    }

    SUBCASE("linearity in psi at fixed sigma") {
        SolverConfig sc;
        sc.depth = 2.0;
        sc.nz = 32;
        DtnSolver solver(g, sc);
        FourierField psi2 = field_from(g, [](double x1, double x2) {
            return std::sin(x1) * std::cos(x2);
        });
        FourierField lhs = solver.apply(sigma, [&] {
            FourierField s = 2.0 * psi;
            s += -3.0 * psi2;
            return s;
        }());
        FourierField rhs = 2.0 * solver.apply(sigma, psi);
        rhs += -3.0 * solver.apply(sigma, psi2);
        lhs -= rhs;
        CHECK(sobolev_norm(lhs, 0.0) < 1e-9);
    }

    SUBCASE("zero-mean trace (flux balance)") {
        SolverConfig sc;
        sc.depth = 2.5;
        sc.nz = 32;
        FourierField gp = dtn_apply(sigma, psi, sc);
        CHECK(std::abs(mean(gp)) < 1e-8 * sobolev_norm(psi, 0.0));
    }

    SUBCASE("real inputs give a real trace") {
        SolverConfig sc;
        sc.depth = 2.0;
        sc.nz = 24;
        FourierField gp = dtn_apply(sigma, psi, sc);
        double im = 0.0;
        for (const auto& c : gp.values_complex())
            im = std::max(im, std::abs(c.imag()));
        CHECK(im < 1e-12);
    }

    SUBCASE("non-convergence raises with the residual in the message") {
        SolverConfig sc;
        sc.depth = 2.0;
        sc.nz = 24;
        sc.max_iter = 1;
        FourierField big = field_from(g, [](double x1, double) { return 0.8 * std::cos(x1); });
        CHECK_THROWS_WITH_AS(static_cast<void>(dtn_apply(big, psi, sc)),
                             doctest::Contains("no convergence"), Error);
    }
}

TEST_CASE("boundary coefficients") {
    TorusGrid g(32, 32, 1.0);
    SolverConfig sc;
    sc.depth = 2.0;
    sc.nz = 32;

    SUBCASE("trivial wave: b = 0, V = (1,0), a = mu") {
        FourierField zero(g);
        BoundaryCoefficients bc = boundary_coefficients(zero, zero, zero, 0.7, true);
        CHECK(sobolev_norm(bc.b, 0.0) == 0.0);
        CHECK(bc.V1.atk(0, 0).real() == doctest::Approx(1.0));
        CHECK(sobolev_norm(bc.V2, 0.0) == 0.0);
        CHECK(max_abs(bc.taylor) == doctest::Approx(0.7));
    }

    SUBCASE("Stokes wave: a = mu + O(eps) and diamond parities transport") {
        auto [w, sd] = stokes_wave(g, 0.05);
        FourierField gp = dtn_apply(w.sigma, w.psi, sc);
        BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
        CHECK(max_abs(bc.taylor - [&] {
                  FourierField m(g);
                  m.atk(0, 0) = w.mu;
                  return m;
              }()) < 3.0 * 0.05 / sd.mu_c);
        CHECK(parity_defect(bc.b, Parity::oe) < 1e-10);
        CHECK(parity_defect(bc.V1, Parity::ee) < 1e-10);
        CHECK(parity_defect(bc.V2, Parity::oo) < 1e-10);
    }

    SUBCASE("good unknown trivial cases and parity") {
        auto [w, sd] = stokes_wave(g, 0.05);
        FourierField zerob(g);
        FourierField u0 = good_unknown(w.sigma, w.psi, zerob);
        u0 -= w.psi;
        CHECK(sobolev_norm(u0, 0.0) == 0.0);
        FourierField gp = dtn_apply(w.sigma, w.psi, sc);
        BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
        FourierField u = good_unknown(w.sigma, w.psi, bc.b);
        CHECK(parity_defect(u, Parity::oe) < 1e-10);
    }

    SUBCASE("degenerate mu = 0 column surface reports nonpositive") {
        FourierField sig2 = field_from(g, [](double, double x2) { return 0.2 * std::cos(x2); });
        FourierField zero(g);
        BoundaryCoefficients bc = boundary_coefficients(sig2, zero, zero, 0.0, false);
        TaylorCheck tc = taylor_sign_check(bc);
        CHECK(std::abs(tc.min_value) < 1e-13);
        CHECK(!tc.positive);
    }
}

TEST_CASE("paralinearization remainder") {
    TorusGrid g(64, 64, 1.0);

    SUBCASE("flat surface with high-frequency psi leaves only low-band residue") {
        FourierField sigma(g);
        FourierField psi(g);
        psi.atk(6, 2) = cplx(0.4, 0.0);
        psi.atk(-6, -2) = cplx(0.4, 0.0);
        ParalinConfig pc;
        pc.solver.depth = 1.5;
        pc.solver.nz = 32;
        pc.ndir = 32;
        DtnReport rep = paralin_remainder(sigma, psi, pc);
        for (const auto& row : rep.bands)
            if (row.k >= 2)
                CHECK(row.r_norm < 1e-10);
    }

    SUBCASE("order 3 beats order 1 on the high bands") {
        std::mt19937_64 rng(7);
        RandomFieldSpec spec;
        spec.band_lo = 2.0;
        spec.band_hi = 8.0;
        spec.decay = 2.0;
        spec.parity = Parity::ee;
        FourierField sig0 = random_field(g, spec, rng);
        spec.parity = Parity::oe;
        FourierField psi0 = random_field(g, spec, rng);
        ParalinConfig pc;
        pc.solver.depth = 2.5;
        pc.solver.nz = 32;
        pc.ndir = 32;
        pc.order = 1;
        DtnReport rough = paralin_remainder(0.06 * sig0, 0.06 * psi0, pc);
        pc.order = 3;
        DtnReport fine = paralin_remainder(0.06 * sig0, 0.06 * psi0, pc);
        double hi_rough = 0.0, hi_fine = 0.0;
        for (size_t k = 3; k < rough.bands.size(); ++k) {
            hi_rough += rough.bands[k].r_norm;
            hi_fine += fine.bands[k].r_norm;
        }
        CHECK(hi_fine < hi_rough);
    }
}
