#include <cmath>

#include "doctest.h"
#include "dw/waves.hpp"

using namespace dw;

TEST_CASE("stokes wave construction") {
    TorusGrid g(32, 32, 1.0);

    SUBCASE("critical mu at ell = 1") {
        CHECK(stokes_mu_c(1.0) == doctest::Approx(0.70710678118654752).epsilon(1e-14));
    }

    SUBCASE("mu1 closed form evaluated independently") {
        // five-term expression computed directly as the oracle
        for (double ell : {0.5, 1.0, 2.0}) {
            long double m = ell / std::sqrt(1.0L + ell * ell);
            long double want = 1.0L / (4.0L * m * m * m) - 1.0L / (2.0L * m * m) -
                               3.0L / (4.0L * m) + 2.0L + m / 2.0L - 9.0L / (4.0L * (2.0L - m));
            CHECK(stokes_mu1(ell) == doctest::Approx(static_cast<double>(want)).epsilon(1e-13));
        }
    }

    SUBCASE("profiles match the closed forms on the grid") {
        auto [w, sd] = stokes_wave(g, 0.1);
        double mc = stokes_mu_c(1.0);
        FourierField sig_want = field_from(g, [&](double x1, double x2) {
            return -0.1 / mc * std::cos(x1) * std::cos(x2);
        });
        FourierField psi_want = field_from(g, [&](double x1, double x2) {
            return 0.1 * std::sin(x1) * std::cos(x2);
        });
        sig_want -= w.sigma;
        psi_want -= w.psi;
        CHECK(sobolev_norm(sig_want, 0.0) < 1e-13);
        CHECK(sobolev_norm(psi_want, 0.0) < 1e-13);
        CHECK(w.mu == doctest::Approx(mc + 0.01 * stokes_mu1(1.0)).epsilon(1e-14));
    }

    SUBCASE("eps = 0 gives the trivial wave") {
        auto [w, sd] = stokes_wave(g, 0.0);
        CHECK(sobolev_norm(w.sigma, 0.0) == 0.0);
        CHECK(sobolev_norm(w.psi, 0.0) == 0.0);
        CHECK(w.mu == doctest::Approx(stokes_mu_c(1.0)));
    }

    SUBCASE("parities are exact and amplitude cap enforced") {
        auto [w, sd] = stokes_wave(g, 0.15);
        CHECK(parity_defect(w.sigma, Parity::ee) == 0.0);
        CHECK(parity_defect(w.psi, Parity::oe) == 0.0);
        CHECK_THROWS_AS(stokes_wave(g, 0.25), Error);
    }
}

TEST_CASE("system residual") {
    TorusGrid g(32, 32, 1.0);
    SolverConfig sc;
    sc.depth = 2.5;
    sc.nz = 32;

    SUBCASE("trivial wave has zero residual") {
        auto [w, sd] = stokes_wave(g, 0.0);
        SystemResidual r = system_residual(w, sc);
        CHECK(r.norm() < 1e-13);
    }

    SUBCASE("first-order wave scales quadratically") {
        std::vector<double> le, lr;
        for (double e : {0.02, 0.08}) {
            auto [w, sd] = stokes_wave(g, e);
            SystemResidual r = system_residual(w, sc);
            le.push_back(std::log(e));
            lr.push_back(std::log(r.norm()));
        }
        double slope = (lr[1] - lr[0]) / (le[1] - le[0]);
        CHECK(slope >= 1.9);
    }

    SUBCASE("a non-solution reports an O(1) residual") {
        DiamondWave w;
        w.mu = 0.7;
        w.ell = 1.0;
        w.sigma = field_from(g, [](double x1, double x2) { return 0.1 * std::cos(x1 + x2); });
        w.sigma = enforce_parity(w.sigma, Parity::ee);
        w.psi = field_from(g, [](double x1, double x2) { return std::sin(x1) + 0.1 * x2 * 0; });
        SystemResidual r = system_residual(w, sc);
        CHECK(r.norm() > 0.1);
    }
}

TEST_CASE("diamond validation") {
    TorusGrid g(32, 32, 1.0);
    SolverConfig sc;
    sc.depth = 2.0;
    sc.nz = 24;

    SUBCASE("trivial wave passes with min V1 = 1") {
        auto [w, sd] = stokes_wave(g, 0.0);
        DiamondReport rep = validate_diamond(w, sc);
        CHECK(rep.pass);
        CHECK(rep.min_v1 == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("small Stokes wave passes with min V1 = 1 + O(eps)") {
        auto [w, sd] = stokes_wave(g, 0.05);
        DiamondReport rep = validate_diamond(w, sc);
        CHECK(rep.pass);
        CHECK(std::abs(rep.min_v1 - 1.0) < 0.25);
    }

    SUBCASE("a strong counter-drift crosses zero and fails the check") {
        DiamondWave w;
        w.mu = stokes_mu_c(1.0);
        w.ell = 1.0;
        w.sigma = FourierField(g, Parity::ee);
        w.psi = field_from(g, [](double x1, double) { return -1.5 * std::sin(x1); });
        w.psi.set_parity(Parity::oe);
        DiamondReport rep = validate_diamond(w, sc);
        CHECK(rep.parity_ok);
        CHECK(!rep.transversal);
        CHECK(!rep.pass);
    }
}
