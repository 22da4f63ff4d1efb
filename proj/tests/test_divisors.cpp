#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "dw/divisors.hpp"

using namespace dw;

TEST_CASE("diophantine scan") {
    SUBCASE("spot values for nu = sqrt(2)") {
        DiophantineQuery q;
        q.nu = std::sqrt(2.0);
        q.delta = 0.5;
        q.N = 2;
        q.k1max = 10000;
        DiophantineReport rep = scan_condition(q);
        // k1=2: nearest k2 = 6, gap |6 - 4 sqrt 2| ~ 0.343 >= 2^{-2.5} ~ 0.177
        double g2 = std::abs(6.0 - 4.0 * std::sqrt(2.0));
        CHECK(g2 == doctest::Approx(0.34314575).epsilon(1e-6));
        CHECK(g2 >= std::pow(2.0, -2.5));
        // k1=3: gap |13 - 9 sqrt 2| ~ 0.272 >= 3^{-2.5} ~ 0.064
        double g3 = std::abs(13.0 - 9.0 * std::sqrt(2.0));
        CHECK(g3 == doctest::Approx(0.27207794).epsilon(1e-6));
        CHECK(g3 >= std::pow(3.0, -2.5));
        for (const auto& v : rep.violations)
            CHECK(v.k1 >= q.N);
    }

    SUBCASE("rational nu produces exact resonances") {
        DiophantineQuery q;
        q.nu = 1.5;
        q.delta = 0.5;
        q.N = 2;
        q.k1max = 50;
        DiophantineReport rep = scan_condition(q);
        CHECK(!rep.pass);
        bool found_even = false;
        for (const auto& v : rep.violations)
            if (v.k1 % 2 == 0 && v.gap == 0.0)
                found_even = true;  // nu k1^2 integer at even k1
        CHECK(found_even);
    }

    SUBCASE("kappa1 shifts only the small k1 verdicts") {
        DiophantineQuery base;
        base.nu = std::sqrt(2.0);
        base.kappa0 = 0.31;
        base.delta = 0.3;
        base.N = 2;
        base.k1max = 4000;
        DiophantineQuery pert = base;
        pert.kappa1 = 0.4;
        DiophantineReport a = scan_condition(base);
        DiophantineReport b = scan_condition(pert);
        auto tail = [](const DiophantineReport& r, long long cut) {
            std::vector<std::pair<long long, long long>> out;
            for (const auto& v : r.violations)
                if (v.k1 > cut)
                    out.emplace_back(v.k1, v.k2);
            return out;
        };
        CHECK(tail(a, 60) == tail(b, 60));
    }

    SUBCASE("monotone in delta: passing stays passing as delta grows") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> unif(1.1, 1.9);
        for (int t = 0; t < 10; ++t) {
            DiophantineQuery q;
            q.nu = unif(rng);
            q.kappa0 = unif(rng) - 1.5;
            q.delta = 0.3;
            q.N = 3;
            q.k1max = 500;
            DiophantineReport r1 = scan_condition(q);
            q.delta = 0.7;
            DiophantineReport r2 = scan_condition(q);
            if (r1.pass)
                CHECK(r2.pass);
        }
    }
}

TEST_CASE("exclusion measure") {
    FamilyModel m;
    m.nu_bar = std::sqrt(2.0);
    m.nu_prime = 1.0;
    m.delta = 0.5;
    m.delta_prime = 0.25;
    m.k1max = 4000;

    SUBCASE("phi = 0 family: fractions shrink with the predicted shape") {
        DiophantineReport rep = exclusion_measure(m, {1e-2, 1e-3, 1e-4}, 64);
        REQUIRE(rep.measure_curve.size() == 3);
        CHECK(rep.measure_curve[0].excluded_fraction <= 1.0);
        CHECK(rep.measure_curve[2].excluded_fraction <=
              rep.measure_curve[0].excluded_fraction + 1e-12);
        double floor = (m.delta - m.delta_prime) / (3.0 + m.delta_prime) - 0.1;
        CHECK(rep.fitted_exponent >= floor);
    }

    SUBCASE("doubling the sample count leaves the fractions stable") {
        DiophantineReport a = exclusion_measure(m, {1e-3}, 64);
        DiophantineReport b = exclusion_measure(m, {1e-3}, 128);
        CHECK(a.measure_curve[0].excluded_fraction ==
              doctest::Approx(b.measure_curve[0].excluded_fraction).epsilon(1e-6));
    }

    SUBCASE("large nu_prime shrinks the intervals like 1/nu_prime") {
        FamilyModel big = m;
        big.nu_prime = 8.0;
        LemmaClaims a = verify_lemma_claims(m, 1e-3, 64);
        LemmaClaims b = verify_lemma_claims(big, 1e-3, 64);
        CHECK(a.max_scaled_length <= 4.0 / 1.0 * 1.05);
        CHECK(b.max_scaled_length <= 4.0 / 8.0 * 1.05);
    }

    SUBCASE("out-of-regime r is flagged") {
        DiophantineReport rep = exclusion_measure(m, {0.5}, 32);
        CHECK(rep.measure_curve[0].non_asymptotic);
    }

    SUBCASE("bad base point is rejected with the violating pair") {
        FamilyModel bad = m;
        bad.nu_bar = 1.5;  // rational: resonances at even k1
        CHECK_THROWS_WITH_AS(static_cast<void>(exclusion_measure(bad, {1e-3}, 16)),
                             doctest::Contains("base point"), std::runtime_error);
    }

    SUBCASE("omega separation: |omega(l) - omega(l')| >= |nu'|/2 |l - l'|") {
        FamilyModel pm = m;
        pm.phi1 = {{0.0, 1.0}, {0.0, 0.05}, 0.05};  // mild Lipschitz drift
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> unif(0.0, 1e-3);
        for (int t = 0; t < 200; ++t) {
            double a = unif(rng), b = unif(rng);
            double lhs = std::abs(pm.omega(a, 50) - pm.omega(b, 50));
            CHECK(lhs >= 0.5 * std::abs(pm.nu_prime) * std::abs(a - b) - 1e-15);
        }
    }
}

TEST_CASE("lemma claims enumeration") {
    FamilyModel m;
    m.nu_bar = std::sqrt(2.0);
    m.nu_prime = 1.0;
    m.delta = 0.5;
    m.delta_prime = 0.25;
    m.k1max = 4000;

    SUBCASE("min nonempty k1 scales like r^{-1/(3+delta')}") {
        std::vector<double> lr, lk;
        for (double r : {1e-2, 1e-3, 1e-4}) {
            LemmaClaims lc = verify_lemma_claims(m, r, 64);
            REQUIRE(lc.min_nonempty_k1 > 0);
            lr.push_back(std::log(r));
            lk.push_back(std::log(static_cast<double>(lc.min_nonempty_k1)));
        }
        double slope = (lk[2] - lk[0]) / (lr[2] - lr[0]);
        CHECK(std::abs(slope + 1.0 / 3.25) <= 0.15);
    }

    SUBCASE("count and length bounds hold with the fitted constants") {
        for (double r : {1e-2, 1e-3}) {
            LemmaClaims lc = verify_lemma_claims(m, r, 64);
            CHECK(lc.count_bound_ok);
            CHECK(lc.length_bound_ok);
            CHECK(lc.max_scaled_length <= lc.length_bound_constant * 1.05);
        }
    }
}
