#include <cmath>

#include "doctest.h"
#include "dw/torus.hpp"

using namespace dw;

namespace {
const double PI = TorusGrid::pi();
}

TEST_CASE("forward transform basics") {
    TorusGrid g(16, 16, 1.0);

    SUBCASE("constant 1 -> single zero-frequency coefficient") {
        std::vector<double> ones(g.size(), 1.0);
        FourierField f = forward_transform(g, ones);
        CHECK(f.atk(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
        double off = 0.0;
        for (int i1 = 0; i1 < 16; ++i1)
            for (int i2 = 0; i2 < 16; ++i2)
                if (i1 || i2)
                    off = std::max(off, std::abs(f.at(i1, i2)));
        CHECK(off < 1e-14);
    }

    SUBCASE("cos x1 -> +-1/2 at (+-1, 0)") {
        FourierField f = field_from(g, [](double x1, double) { return std::cos(x1); });
        CHECK(std::abs(f.atk(1, 0) - cplx(0.5, 0.0)) < 1e-14);
        CHECK(std::abs(f.atk(-1, 0) - cplx(0.5, 0.0)) < 1e-14);
    }

    SUBCASE("random samples round-trip below 1e-13") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss;
        std::vector<double> v(g.size());
        for (auto& x : v)
            x = gauss(rng);
        FourierField f = forward_transform(g, v);
        std::vector<double> back = f.values();
        double err = 0.0, scale = 0.0;
        for (int i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(back[i] - v[i]));
            scale = std::max(scale, std::abs(v[i]));
        }
        CHECK(err / scale < 1e-13);
    }

    SUBCASE("size mismatch throws") {
        std::vector<double> v(g.size() - 1, 0.0);
        CHECK_THROWS_AS(forward_transform(g, v), Error);
    }
}

TEST_CASE("sobolev norms") {
    TorusGrid g(32, 32, 1.0);
    SUBCASE("constant 1 has norm 1 in every H^s") {
        std::vector<double> ones(g.size(), 1.0);
        FourierField f = forward_transform(g, ones);
        CHECK(sobolev_norm(f, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(sobolev_norm(f, 3.5) == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("cos x1 at s=0 and the s=1 ratio") {
        FourierField f = field_from(g, [](double x1, double) { return std::cos(x1); });
        double n0 = sobolev_norm(f, 0.0);
        CHECK(n0 == doctest::Approx(std::sqrt(0.5)).epsilon(1e-13));
        double n1 = sobolev_norm(f, 1.0);
        CHECK(n1 / n0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));  // <(1,0)> = sqrt(2)
    }
    SUBCASE("Parseval: H^0 norm squared equals grid mean of f^2") {
        std::mt19937_64 rng(3);
        FourierField f = random_field(g, {}, rng);
        double lhs = sobolev_norm(f, 0.0);
        CHECK(lhs * lhs == doctest::Approx(mean_square(f)).epsilon(1e-12));
    }
}

TEST_CASE("littlewood-paley blocks") {
    TorusGrid g(64, 64, 1.0);

    SUBCASE("single frequency |xi|=4 lands in the predicted blocks") {
        FourierField f(g);
        f.atk(4, 0) = cplx(0.5, 0.0);
        f.atk(-4, 0) = cplx(0.5, 0.0);
        double w = std::sqrt(17.0);
        for (int k = 0; k <= lp_max_block(g); ++k) {
            FourierField bl = lp_block(f, k);
            double expect = lp_phi_k(k, w) - lp_phi_k(k - 1, w);
            CHECK(std::abs(bl.atk(4, 0) - cplx(0.5 * expect, 0.0)) < 1e-14);
            if (k < 1 || k > 3)
                CHECK(std::abs(bl.atk(4, 0)) < 1e-14);  // outside the overlap window
        }
    }

    SUBCASE("zero field stays zero") {
        FourierField f(g);
        for (int k = 0; k < 5; ++k)
            CHECK(sobolev_norm(lp_block(f, k), 0.0) == 0.0);
    }

    SUBCASE("partition of unity resums to the identity") {
        std::mt19937_64 rng(11);
        FourierField f = random_field(g, {}, rng);
        FourierField sum(g);
        for (int k = 0; k <= lp_max_block(g); ++k)
            sum += lp_block(f, k);
        sum -= f;
        CHECK(sobolev_norm(sum, 0.0) < 1e-12);
    }

    SUBCASE("blocks with |k-k'| > 1 have disjoint spectral support") {
        std::mt19937_64 rng(13);
        FourierField f = random_field(g, {}, rng);
        for (int k = 0; k + 2 <= 6; ++k) {
            FourierField a = lp_block(f, k), b = lp_block(f, k + 2);
            for (int i = 0; i < g.size(); ++i)
                CHECK(std::abs(a.coeffs()[i]) * std::abs(b.coeffs()[i]) == 0.0);
        }
    }
}

TEST_CASE("parity projections") {
    TorusGrid g(32, 32, 2.0);

    SUBCASE("sin x1 is already (o,e)") {
        FourierField f = field_from(g, [](double x1, double) { return std::sin(x1); });
        FourierField p = enforce_parity(f, Parity::oe);
        p -= f;
        CHECK(sobolev_norm(p, 0.0) < 1e-14);
    }
    SUBCASE("sin x1 projected on (e,e) vanishes") {
        FourierField f = field_from(g, [](double x1, double) { return std::sin(x1); });
        CHECK(sobolev_norm(enforce_parity(f, Parity::ee), 0.0) < 1e-14);
    }
    SUBCASE("idempotence on random fields") {
        std::mt19937_64 rng(5);
        for (Parity p : {Parity::ee, Parity::oe, Parity::eo, Parity::oo}) {
            FourierField f = random_field(g, {}, rng);
            FourierField once = enforce_parity(f, p);
            FourierField twice = enforce_parity(once, p);
            twice -= once;
            CHECK(sobolev_norm(twice, 0.0) < 1e-13);
        }
    }
    SUBCASE("projection commutes with the transforms") {
        // project in spectral space vs symmetrize the samples directly
        std::mt19937_64 rng(17);
        FourierField f = random_field(g, {}, rng);
        FourierField spec_proj = enforce_parity(f, Parity::ee);
        std::vector<double> v = f.values();
        std::vector<double> sym(v.size());
        int n1 = g.n1(), n2 = g.n2();
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                int r1 = (n1 - i1) % n1, r2 = (n2 - i2) % n2;
                sym[i1 * n2 + i2] = 0.25 * (v[i1 * n2 + i2] + v[r1 * n2 + i2] +
                                            v[i1 * n2 + r2] + v[r1 * n2 + r2]);
            }
        FourierField phys = forward_transform(g, sym);
        phys -= spec_proj;
        CHECK(sobolev_norm(phys, 0.0) < 1e-13);
    }
}

TEST_CASE("dealiased products and field io") {
    TorusGrid g(32, 32, 1.0);
    SUBCASE("cos^2 has exact spectrum") {
        FourierField c = field_from(g, [](double x1, double) { return std::cos(x1); });
        FourierField p = multiply(c, c);
        CHECK(p.atk(0, 0).real() == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(p.atk(2, 0).real() == doctest::Approx(0.25).epsilon(1e-13));
        CHECK(std::abs(p.atk(1, 0)) < 1e-14);
    }
    SUBCASE("csv round trip") {
        std::mt19937_64 rng(23);
        FourierField f = random_field(g, {}, rng);
        save_field_csv(f, "/tmp/dw_test_field.csv");
        FourierField h = load_field_csv("/tmp/dw_test_field.csv");
        h -= f;
        CHECK(sobolev_norm(h, 0.0) < 1e-12);
    }
}
