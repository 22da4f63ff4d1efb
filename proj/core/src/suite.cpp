#include "dw/suite.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "dw/conjugation.hpp"
#include "dw/divisors.hpp"
#include "dw/dtn.hpp"
#include "dw/io.hpp"
#include "dw/paradiff.hpp"
#include "dw/symbols.hpp"
#include "dw/torus.hpp"
#include "dw/waves.hpp"

namespace dw {

namespace {

using clock_type = std::chrono::steady_clock;

struct Ctx {
    const SuiteConfig& cfg;
    CriterionResult res;
    clock_type::time_point t0 = clock_type::now();

    void metric(const std::string& k, double v) { res.metrics.emplace_back(k, v); }
    void finish(bool ok, double budget) {
        res.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
        res.budget_seconds = budget;
        res.pass = ok && (!cfg.enforce_budget || res.seconds <= budget);
        res.relaxed = cfg.reduced;
    }
};

double x1_parity_defect(const FourierField& f, bool odd) {
    const TorusGrid& g = f.grid();
    double num = 0.0, den = 0.0;
    for (int i1 = 0; i1 < g.n1(); ++i1) {
        int j1 = (g.n1() - i1) % g.n1();
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            cplx want = odd ? -f.at(j1, i2) : f.at(j1, i2);
            num += std::norm(f.at(i1, i2) - want);
            den += std::norm(f.at(i1, i2));
        }
    }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

// ---------------------------------------------------------------- criterion 1

CriterionResult c1_flat_dtn(const SuiteConfig& cfg) {
    Ctx c{cfg, {1, "flat-dtn-exactness"}};
    const int n = cfg.reduced ? 32 : 64;
    TorusGrid g(n, n, 1.0);
    SolverConfig sc;
    sc.depth = 1.5;
    sc.nz = cfg.reduced ? 32 : 64;
    DtnSolver solver(g, sc);
    FourierField sigma(g);
    double worst = 0.0;
    for (int k = 1; k <= 8; ++k) {
        FourierField psi(g);
        psi.atk(k, 0) = 0.5;
        psi.atk(-k, 0) = 0.5;
        FourierField gp = solver.apply(sigma, psi);
        FourierField want = k * psi;
        gp -= want;
        worst = std::max(worst, sobolev_norm(gp, 0.0) / sobolev_norm(want, 0.0));
    }
    c.metric("max_rel_err", worst);
    c.finish(worst < 1e-10, 5.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 2

CriterionResult c2_factorization(const SuiteConfig& cfg) {
    Ctx c{cfg, {2, "factorization-identity"}};
    const int n = cfg.reduced ? 32 : 64;
    TorusGrid g(n, n, 1.0);
    DirectionMesh mesh(256);
    FourierField sigma = field_from(
        g, [&](double x1, double x2) { return 0.1 * std::cos(x1) * std::cos(x2 / g.ell()); });
    DtnFactorization f = dtn_factorization(sigma, mesh, 1);
    HomogeneousComponent direct = dtn_principal(sigma, mesh);
    double worst = 0.0, prod = 0.0, sum = 0.0;
    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    std::vector<double> b(g.size());
    for (int i = 0; i < g.size(); ++i)
        b[i] = 1.0 / (1.0 + s1[i] * s1[i] + s2[i] * s2[i]);
    const auto& lam1 = f.lambda.component(0);
    const auto& a1 = f.a.component(0);
    const auto& A1 = f.A.component(0);
    for (int j = 0; j < mesh.size(); ++j) {
        double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
        for (int ix = 0; ix < g.size(); ++ix) {
            worst = std::max(worst, std::abs(lam1.at(j, ix) - direct.at(j, ix)));
            prod = std::max(prod, std::abs(a1.at(j, ix) * A1.at(j, ix) + b[ix]));
            cplx drift(0.0, 2.0 * b[ix] * (s1[ix] * w1 + s2[ix] * w2));
            sum = std::max(sum, std::abs(a1.at(j, ix) + A1.at(j, ix) - drift));
        }
    }
    c.metric("max_identity_err", worst);
    c.metric("max_product_err", prod);
    c.metric("max_sum_err", sum);
    c.finish(worst < 1e-12 && prod < 1e-12 && sum < 1e-12, 1.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 3

CriterionResult c3_paralin(const SuiteConfig& cfg) {
    Ctx c{cfg, {3, "paralinearization-remainder"}};
    const int n = cfg.reduced ? 64 : 128;
    TorusGrid g(n, n, 1.0);
    std::mt19937_64 rng(cfg.seed);
    RandomFieldSpec spec;
    spec.band_lo = 2.0;
    spec.band_hi = 16.0;
    spec.decay = 2.5;
    spec.parity = Parity::ee;
    FourierField sig0 = random_field(g, spec, rng);
    spec.parity = Parity::oe;
    FourierField psi0 = random_field(g, spec, rng);

    ParalinConfig pc;
    pc.order = 3;
    pc.ndir = cfg.reduced ? 32 : 64;
    pc.solver.depth = cfg.reduced ? 2.5 : 3.0;
    pc.solver.nz = cfg.reduced ? 32 : 48;

    std::vector<double> eps{0.02, 0.04, 0.08};
    std::vector<double> le, lr;
    DtnReport last;
    for (double e : eps) {
        DtnReport rep = paralin_remainder(e * sig0, e * psi0, pc);
        le.push_back(std::log(e));
        lr.push_back(std::log(rep.r_h0));
        last = std::move(rep);
    }
    double slope = fit_slope(le, lr);
    c.metric("eps_slope", slope);

    // decay-exponent fit at the largest eps: inputs over their populated
    // bands 2..4, remainder over 2..5
    auto band_exponent = [&](const std::vector<double>& norms, int klo, int khi) {
        std::vector<double> x, y;
        for (int k = klo; k <= khi; ++k)
            if (norms[k] > 0) {
                x.push_back(k);
                y.push_back(std::log2(norms[k]));
            }
        return -fit_slope(x, y);
    };
    std::vector<double> rb(last.bands.size()), ib(last.bands.size());
    for (size_t k = 0; k < last.bands.size(); ++k) {
        rb[k] = last.bands[k].r_norm;
        ib[k] = std::hypot(last.bands[k].sigma_norm, last.bands[k].psi_norm);
    }
    double e_in = band_exponent(ib, 2, 4);
    double e_r = band_exponent(rb, 2, 5);
    c.metric("input_decay_exp", e_in);
    c.metric("remainder_decay_exp", e_r);
    if (!cfg.out_dir.empty())
        last.save_diagnostics_csv(cfg.out_dir + "/paralin_bands.csv");
    c.finish(slope >= 1.8 && e_r >= e_in + 1.0, 60.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 4

CriterionResult c4_sharp_order(const SuiteConfig& cfg) {
    Ctx c{cfg, {4, "sharp-composition-order"}};
    const int n = cfg.reduced ? 256 : 1024;
    TorusGrid g(n, n, 1.0);
    std::vector<int> bands = cfg.reduced ? std::vector<int>{2, 3, 4, 5}
                                         : std::vector<int>{3, 4, 5, 6, 7};
    std::mt19937_64 rng(cfg.seed + 4);
    RandomFieldSpec fs;
    fs.band_hi = 2.9;  // |k| <= 2 modes only: keeps the symbols band-limited
    fs.decay = 0.0;
    fs.unit_h0 = false;

    const int pairs = 10;
    double worst_slope = -1e300;
    bool all_pass = true;
    for (int p = 0; p < pairs; ++p) {
        FourierField ga = random_field(g, fs, rng);
        ga *= 0.4 / std::max(max_abs(ga), 1e-30);
        ga.atk(0, 0) += 1.0;
        FourierField gb = random_field(g, fs, rng);
        gb *= 0.4 / std::max(max_abs(gb), 1e-30);
        gb.atk(0, 0) += 1.0;
        FourierField ha = random_field(g, fs, rng);
        ha *= 0.2 / std::max(max_abs(ha), 1e-30);

        SeparableSymbol a = SeparableSymbol::from_field(ga, 1.0, 0);
        a.terms.push_back({1.0, 1, ha});
        a.terms.push_back({1.0, -1, ha});
        SeparableSymbol b = SeparableSymbol::from_field(gb, 0.0, 0);
        SeparableSymbol ab = sharp_compose(a, b, 2.0);

        auto op = [&](const FourierField& u) {
            FourierField r = apply_paradiff(a, apply_paradiff(b, u));
            r -= apply_paradiff(ab, u);
            return r;
        };
        ProbeResult pr = operator_order_probe(op, g, bands, 1, rng);
        worst_slope = std::max(worst_slope, pr.slope);
        if (pr.slope > 1.0 + 0.0 - 2.0 + 0.3)
            all_pass = false;
    }
    c.metric("worst_slope", worst_slope);
    c.metric("required", -0.7);
    c.finish(all_pass, 30.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 5

CriterionResult c5_taylor(const SuiteConfig& cfg) {
    Ctx c{cfg, {5, "taylor-sign"}};
    const int n = cfg.reduced ? 32 : 64;
    SolverConfig sc;
    sc.depth = 2.5;
    sc.nz = cfg.reduced ? 24 : 40;
    bool positive_all = true, envelope_all = true;
    double worst_margin = 1e300;
    for (double ell : {0.5, 1.0, 2.0}) {
        TorusGrid g(n, n, ell);
        for (double e : {0.0, 0.05, 0.1}) {
            auto [w, sd] = stokes_wave(g, e);
            FourierField gp = dtn_apply(w.sigma, w.psi, sc);
            BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
            TaylorCheck tc = taylor_sign_check(bc);
            positive_all = positive_all && tc.min_value > 0.0;
            double envelope = w.mu - 0.5 * e * w.mu;
            envelope_all = envelope_all && tc.min_value >= envelope;
            worst_margin = std::min(worst_margin, tc.min_value - envelope);
            char key[64];
            std::snprintf(key, sizeof key, "min_a_ell%.1f_eps%.2f", ell, e);
            c.metric(key, tc.min_value);
        }
    }
    c.metric("worst_envelope_margin", worst_margin);
    c.finish(positive_all && envelope_all, 30.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 6

CriterionResult c6_nu(const SuiteConfig& cfg) {
    Ctx c{cfg, {6, "nu-consistency"}};
    const int n = cfg.reduced ? 32 : 64;
    TorusGrid g(n, n, 1.0);
    SolverConfig sc;
    sc.depth = 3.0;
    sc.nz = cfg.reduced ? 24 : 40;

    auto nu_of = [&](double e) {
        auto [w, sd] = stokes_wave(g, e);
        FourierField gp = dtn_apply(w.sigma, w.psi, sc);
        BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
        DiffeoPack pack = transport_diffeo(bc.V1, bc.V2);
        FourierField p2 = transport_p2(w.sigma, pack);
        return std::make_pair(compute_nu(p2, bc.taylor, bc.V1, pack), w.mu);
    };

    auto [nu0, mu0] = nu_of(0.0);
    double trivial_err = std::abs(nu0 - 1.0 / mu0);
    c.metric("trivial_abs_err", trivial_err);

    std::vector<double> le, ln;
    for (double e : {0.02, 0.04, 0.08}) {
        auto [nu, mu] = nu_of(e);
        le.push_back(std::log(e));
        ln.push_back(std::log(std::abs(nu - 1.0 / mu)));
    }
    double slope = fit_slope(le, ln);
    c.metric("sweep_slope", slope);
    c.finish(trivial_err < 1e-10 && slope >= 1.8, 60.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 7

CriterionResult c7_cascade(const SuiteConfig& cfg) {
    Ctx c{cfg, {7, "cascade-reality-parity"}};
    const int n = cfg.reduced ? 16 : 32;
    TorusGrid g(n, n, 1.0);
    std::mt19937_64 rng(cfg.seed + 7);
    std::uniform_real_distribution<double> unif(0.8, 1.6);

    auto admissible = [&](Parity preal, Parity pimag, bool pure_imag) {
        RandomFieldSpec spec;
        spec.band_hi = n / 4.0;
        spec.decay = 1.5;
        spec.unit_h0 = false;
        spec.parity = preal;
        FourierField re = random_field(g, spec, rng);
        spec.parity = pimag;
        FourierField im = random_field(g, spec, rng);
        double s = 0.25 / std::max({max_abs(re), max_abs(im), 1e-30});
        FourierField out(g);
        for (int i = 0; i < g.size(); ++i)
            out.coeffs()[i] = s * (cplx(pure_imag ? 0.0 : 1.0, 0.0) * re.coeffs()[i] +
                                   cplx(0.0, 1.0) * im.coeffs()[i]);
        return out;
    };

    double worst_imag = 0.0, worst_parity = 0.0, worst_resid = 0.0;
    bool ok = true;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        double nu = unif(rng);
        std::array<FourierField, 5> a;
        a[0] = admissible(Parity::oo, Parity::oo, true);   // purely imaginary, odd x1
        a[1] = admissible(Parity::ee, Parity::eo, false);  // even x1
        a[2] = admissible(Parity::oe, Parity::oo, false);  // odd x1
        a[3] = admissible(Parity::ee, Parity::eo, false);
        a[4] = admissible(Parity::oe, Parity::oo, false);
        CascadeResult r = coefficient_cascade(a, nu, g.ell());
        worst_imag = std::max({worst_imag, std::abs(r.kappa.imag()),
                               std::abs(r.kappa_prime.imag())});
        for (int k = 0; k <= 4; ++k) {
            worst_parity = std::max(worst_parity, x1_parity_defect(r.c[k], k % 2 == 1));
            worst_resid = std::max(worst_resid, r.resubstitution_residual[k]);
        }
    }
    c.metric("worst_im_kappa", worst_imag);
    c.metric("worst_c_parity_defect", worst_parity);
    c.metric("worst_transport_residual", worst_resid);
    ok = worst_imag < 1e-10 && worst_parity < 1e-10 && worst_resid < 1e-8;
    c.finish(ok, 30.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 8

CriterionResult c8_stokes_residual(const SuiteConfig& cfg) {
    Ctx c{cfg, {8, "stokes-residual-slope"}};
    const int n = cfg.reduced ? 32 : 64;
    TorusGrid g(n, n, 1.0);
    SolverConfig sc;
    sc.depth = 2.5;
    sc.nz = cfg.reduced ? 24 : 40;
    std::vector<double> le, lr;
    for (double e : {0.02, 0.04, 0.08}) {
        auto [w, sd] = stokes_wave(g, e);
        SystemResidual r = system_residual(w, sc);
        le.push_back(std::log(e));
        lr.push_back(std::log(r.norm()));
    }
    double slope = fit_slope(le, lr);
    c.metric("slope", slope);
    c.finish(slope >= 1.9, 60.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 9

CriterionResult c9_divisor_measure(const SuiteConfig& cfg) {
    Ctx c{cfg, {9, "divisor-measure-law"}};
    FamilyModel m;
    m.nu_bar = std::sqrt(2.0);
    m.nu_prime = 1.0;
    m.kappa0_bar = 0.0;
    m.kappa1_bar = 0.0;
    m.delta = 0.5;
    m.delta_prime = 0.25;
    m.k1max = cfg.reduced ? 3000 : 10000;
    std::vector<double> rg{1e-2, 1e-3, 1e-4};
    DiophantineReport rep = exclusion_measure(m, rg, 64);
    bool monotone = true;
    for (size_t i = 1; i < rep.measure_curve.size(); ++i)
        monotone = monotone && rep.measure_curve[i].excluded_fraction <=
                                   rep.measure_curve[i - 1].excluded_fraction + 1e-12;
    double floor = (m.delta - m.delta_prime) / (3.0 + m.delta_prime) - 0.1;
    c.metric("fitted_exponent", rep.fitted_exponent);
    c.metric("exponent_floor", floor);
    c.metric("fraction_r2", rep.measure_curve[0].excluded_fraction);
    c.metric("fraction_r4", rep.measure_curve[2].excluded_fraction);

    // the three enumeration claims across the r sweep
    std::vector<double> lx, lk;
    bool counts_ok = true, lengths_ok = true;
    for (double r : rg) {
        LemmaClaims lc = verify_lemma_claims(m, r, 64);
        counts_ok = counts_ok && lc.count_bound_ok;
        lengths_ok = lengths_ok && lc.length_bound_ok;
        if (lc.min_nonempty_k1 > 0) {
            lx.push_back(std::log(r));
            lk.push_back(std::log(static_cast<double>(lc.min_nonempty_k1)));
        }
    }
    double kslope = lx.size() >= 2 ? fit_slope(lx, lk) : 0.0;
    double want = -1.0 / (3.0 + m.delta_prime);
    c.metric("min_k1_slope", kslope);
    c.metric("min_k1_slope_target", want);
    bool claim1 = std::abs(kslope - want) <= 0.15;
    if (!cfg.out_dir.empty())
        rep.save_measure_csv(cfg.out_dir + "/divisor_measure.csv");
    c.finish(monotone && rep.fitted_exponent >= floor && claim1 && counts_ok && lengths_ok,
             120.0);
    return c.res;
}

// ---------------------------------------------------------------- criterion 10

CriterionResult c10_properties(const SuiteConfig& cfg) {
    Ctx c{cfg, {10, "parity-reality-properties"}};
    const int n = 32;
    TorusGrid g(n, n, 1.0);
    std::mt19937_64 rng(cfg.seed + 10);
    int failures = 0;

    // (a) paradifferential parity transport: a in Gamma(e,e), u in C(o,e)
    {
        RandomFieldSpec so;
        so.parity = Parity::ee;
        so.band_hi = 8.0;
        so.unit_h0 = false;
        RandomFieldSpec su;
        su.parity = Parity::oe;
        for (int t = 0; t < 400; ++t) {
            FourierField g0 = random_field(g, so, rng);
            RandomFieldSpec sh = so;
            sh.parity = Parity::oe;
            FourierField h = random_field(g, sh, rng);
            SeparableSymbol a = SeparableSymbol::from_field(g0, t % 2 ? 1.0 : 0.0, 0);
            FourierField hI(g);
            for (int i = 0; i < g.size(); ++i)
                hI.coeffs()[i] = cplx(0.0, 1.0) * h.coeffs()[i];
            a.terms.push_back({t % 2 ? 1.0 : 0.0, 1, hI});
            a.terms.push_back({t % 2 ? 1.0 : 0.0, -1, hI});
            FourierField u = random_field(g, su, rng);
            FourierField Tu = apply_paradiff(a, u);
            if (parity_defect(Tu, Parity::oe) > 1e-10)
                ++failures;
        }
    }

    // (b) DtN symmetry transport on random small diamond data
    {
        SolverConfig sc;
        sc.depth = 1.5;
        sc.nz = 16;
        sc.tol = 1e-10;
        DtnSolver solver(g, sc);
        RandomFieldSpec ss;
        ss.parity = Parity::ee;
        ss.band_hi = 8.0;
        ss.decay = 2.0;
        RandomFieldSpec sp = ss;
        sp.parity = Parity::oe;
        for (int t = 0; t < 200; ++t) {
            FourierField sig = random_field(g, ss, rng);
            sig *= 0.05;
            FourierField psi = random_field(g, sp, rng);
            FourierField gp = solver.apply(sig, psi);
            if (parity_defect(gp, Parity::oe) > 1e-10)
                ++failures;
        }
    }

    // (c) DtN symbol reality structure: conj(lambda(x,xi)) = lambda(x,-xi)
    {
        DirectionMesh mesh(32);
        RandomFieldSpec ss;
        ss.band_hi = 6.0;
        ss.decay = 2.0;
        ss.unit_h0 = false;
        for (int t = 0; t < 400; ++t) {
            FourierField sig = random_field(g, ss, rng);
            sig *= 0.1 / std::max(max_abs(sig), 1e-30);
            SymbolExpansion lam = dtn_symbol_expansion(sig, mesh, 3);
            if (reality_defect(lam) > 1e-10)
                ++failures;
        }
    }

    c.metric("failures", failures);
    c.finish(failures == 0, 60.0);
    return c.res;
}

}  // namespace

std::string CriterionResult::line() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "C%-2d %-28s %s  (%.2fs/%.0fs)%s", id, name.c_str(),
                  pass ? "PASS" : "FAIL", seconds, budget_seconds,
                  relaxed ? " [relaxed grid]" : "");
    std::string s = buf;
    for (const auto& [k, v] : metrics)
        s += "\n      " + k + " = " + format_double(v);
    if (!detail.empty())
        s += "\n      " + detail;
    return s;
}

CriterionResult run_criterion(int id, const SuiteConfig& cfg) {
    switch (id) {
        case 1: return c1_flat_dtn(cfg);
        case 2: return c2_factorization(cfg);
        case 3: return c3_paralin(cfg);
        case 4: return c4_sharp_order(cfg);
        case 5: return c5_taylor(cfg);
        case 6: return c6_nu(cfg);
        case 7: return c7_cascade(cfg);
        case 8: return c8_stokes_residual(cfg);
        case 9: return c9_divisor_measure(cfg);
        case 10: return c10_properties(cfg);
        default: throw Error("run_criterion: id must be 1..10");
    }
}

std::vector<CriterionResult> run_acceptance_suite(const SuiteConfig& cfg) {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 10; ++id)
        out.push_back(run_criterion(id, cfg));
    return out;
}

}  // namespace dw
