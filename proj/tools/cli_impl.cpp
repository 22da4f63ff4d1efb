#include "cli_impl.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dw/conjugation.hpp"
#include "dw/divisors.hpp"
#include "dw/dtn.hpp"
#include "dw/io.hpp"
#include "dw/suite.hpp"
#include "dw/torus.hpp"
#include "dw/waves.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
    std::string out_dir = "dwave_out";
    unsigned long long seed = 1;
    std::string subcommand;
    json params;
    std::vector<std::string> outputs;
    bool failed = false;
    std::string error;

    std::string path(const std::string& name) {
        outputs.push_back(name);
        return (fs::path(out_dir) / name).string();
    }
    void write_manifest() {
        json m;
        m["subcommand"] = subcommand;
        m["params"] = params;
        m["seed"] = seed;
        std::string canon = subcommand + params.dump() + std::to_string(seed);
        char hex[32];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(dw::fnv1a(canon)));
        m["config_hash"] = hex;
        m["status"] = failed ? "failed" : "ok";
        if (failed) {
            m["error"] = error;
            m["partial"] = true;
        }
        m["outputs"] = outputs;
        dw::atomic_write((fs::path(out_dir) / "manifest.json").string(), m.dump(2) + "\n");
    }
};

void write_json(RunContext& ctx, const std::string& name, const json& j) {
    dw::atomic_write(ctx.path(name), j.dump(2) + "\n");
}

void write_csv(RunContext& ctx, const std::string& name, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::string s = header + "\n";
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i)
            s += (i ? "," : "") + dw::format_double(r[i]);
        s += "\n";
    }
    dw::atomic_write(ctx.path(name), s);
}

const char* kSchema = R"schema({
  "field_csv": {
    "header": "first line is '# {json}' with n1, n2, ell, parity and any provenance",
    "columns": ["k1 (integer x1 frequency)", "k2 (integer x2 index; real frequency is k2/ell)",
                "re", "im"]
  },
  "remainder_slope.csv": {"columns": ["eps", "r_h0 (H^0 norm of the paralinearization remainder)"]},
  "paralin_bands.csv": {"columns": ["band k", "||Delta_k R||", "||Delta_k sigma||", "||Delta_k psi||"]},
  "stokes_residuals.csv": {"columns": ["eps", "r1_h0", "r2_h0", "total"]},
  "divisor_measure.csv": {"columns": ["r", "excluded_fraction", "min_nonempty_k1", "non_asymptotic (0/1)"]},
  "suite.json": {"fields": ["per-criterion id, name, pass, seconds, metrics"]},
  "manifest.json": {"fields": ["subcommand", "params", "config_hash", "status", "outputs"]}
})schema";

// ---------------------------------------------------------------------------

int cmd_dtn(RunContext& ctx, int n, double ell, double eps, dw::SolverConfig sc) {
    dw::TorusGrid grid(n, n, ell);
    auto [w, sd] = dw::stokes_wave(grid, eps);
    dw::DtnSolver solver(grid, sc);
    dw::FlattenedPotential pot = solver.solve(w.sigma, w.psi);
    dw::FourierField gp = solver.trace(w.sigma, pot);
    dw::BoundaryCoefficients bc = dw::boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
    dw::TaylorCheck tc = dw::taylor_sign_check(bc);

    dw::save_field_csv(gp, ctx.path("trace.csv"));
    dw::save_field_csv(bc.b, ctx.path("coeff_b.csv"));
    dw::save_field_csv(bc.V1, ctx.path("coeff_v1.csv"));
    dw::save_field_csv(bc.V2, ctx.path("coeff_v2.csv"));
    dw::save_field_csv(bc.taylor, ctx.path("coeff_taylor.csv"));
    json j;
    j["mu"] = w.mu;
    j["eps"] = eps;
    j["ell"] = ell;
    j["solver_iterations"] = pot.iterations();
    j["solver_residual"] = pot.residual();
    j["trace_mean"] = dw::mean(gp);
    j["min_taylor"] = tc.min_value;
    j["taylor_positive"] = tc.positive;
    write_json(ctx, "dtn.json", j);
    return 0;
}

int cmd_paralin(RunContext& ctx, int n, double ell, std::vector<double> eps, int order,
                int ndir, dw::SolverConfig sc, double band_lo, double band_hi, double decay) {
    dw::TorusGrid grid(n, n, ell);
    std::mt19937_64 rng(ctx.seed);
    dw::RandomFieldSpec spec;
    spec.band_lo = band_lo;
    spec.band_hi = band_hi;
    spec.decay = decay;
    spec.parity = dw::Parity::ee;
    dw::FourierField sig0 = dw::random_field(grid, spec, rng);
    spec.parity = dw::Parity::oe;
    dw::FourierField psi0 = dw::random_field(grid, spec, rng);

    dw::ParalinConfig pc;
    pc.order = order;
    pc.ndir = ndir;
    pc.solver = sc;

    std::vector<std::vector<double>> rows;
    std::vector<double> le, lr;
    json bands_json = json::array();
    for (double e : eps) {
        dw::DtnReport rep = dw::paralin_remainder(e * sig0, e * psi0, pc);
        rows.push_back({e, rep.r_h0});
        le.push_back(std::log(e));
        lr.push_back(std::log(rep.r_h0));
        std::string name = "paralin_bands_eps" + dw::format_double(e) + ".csv";
        rep.save_diagnostics_csv(ctx.path(name));
    }
    write_csv(ctx, "remainder_slope.csv", "eps,r_h0", rows);
    json j;
    j["order"] = order;
    j["eps"] = eps;
    j["fitted_slope"] = eps.size() >= 2 ? dw::fit_slope(le, lr) : 0.0;
    j["expected_slope_at_least"] = 1.8;
    write_json(ctx, "paralin.json", j);
    return 0;
}

int cmd_stokes(RunContext& ctx, int n, double ell, std::vector<double> eps,
               dw::SolverConfig sc) {
    dw::TorusGrid grid(n, n, ell);
    std::vector<std::vector<double>> rows;
    std::vector<double> le, lr;
    for (double e : eps) {
        auto [w, sd] = dw::stokes_wave(grid, e);
        dw::SystemResidual r = dw::system_residual(w, sc);
        double n1 = dw::sobolev_norm(r.r1, 0.0), n2 = dw::sobolev_norm(r.r2, 0.0);
        rows.push_back({e, n1, n2, r.norm()});
        if (e > 0) {
            le.push_back(std::log(e));
            lr.push_back(std::log(r.norm()));
        }
        if (e == eps.front()) {
            w.save((fs::path(ctx.out_dir) / "wave").string(), "stokes first-order");
            ctx.outputs.push_back("wave_sigma.csv");
            ctx.outputs.push_back("wave_psi.csv");
        }
    }
    write_csv(ctx, "stokes_residuals.csv", "eps,r1_h0,r2_h0,total", rows);
    json j;
    j["mu_c"] = dw::stokes_mu_c(ell);
    j["mu1"] = dw::stokes_mu1(ell);
    j["fitted_slope"] = le.size() >= 2 ? dw::fit_slope(le, lr) : 0.0;
    write_json(ctx, "stokes.json", j);
    return 0;
}

int cmd_conjugate(RunContext& ctx, int n, double ell, double eps, dw::SolverConfig sc,
                  const std::string& aj_prefix, double nu_override) {
    dw::TorusGrid grid(n, n, ell);
    auto [w, sd] = dw::stokes_wave(grid, eps);
    dw::FourierField gp = dw::dtn_apply(w.sigma, w.psi, sc);
    dw::BoundaryCoefficients bc = dw::boundary_coefficients(w.sigma, w.psi, gp, w.mu, true);
    dw::DiffeoPack pack = dw::transport_diffeo(bc.V1, bc.V2);
    dw::FourierField p2 = dw::transport_p2(w.sigma, pack);
    double nu = dw::compute_nu(p2, bc.taylor, bc.V1, pack);

    json j;
    j["nu"] = nu;
    j["one_over_mu"] = 1.0 / w.mu;
    j["mu"] = w.mu;
    j["transport_residual"] = pack.transport_residual;
    j["w_periodicity_defect"] = pack.w_periodicity_defect;
    j["w_mean_defect"] = pack.w_mean_defect;
    j["etilde_mean_defect"] = pack.etilde_mean_defect;
    j["dtilde_mean_defect"] = pack.dtilde_mean_defect;
    {
        dw::MapSamples chi = dw::map_samples(pack);
        dw::ParacompositionSensitivity sens = dw::paracomposition_sensitivity(chi, w.psi, 2);
        j["paracomposition_N2_to_N3_drift"] = sens.drift;
    }
    if (!aj_prefix.empty()) {
        std::array<dw::FourierField, 5> a;
        for (int k = 0; k <= 4; ++k)
            a[k] = dw::load_field_csv(aj_prefix + "_a" + std::to_string(k) + ".csv");
        dw::CascadeResult cr =
            dw::coefficient_cascade(a, nu_override > 0 ? nu_override : nu, ell);
        j["cascade"] = json::parse(cr.to_json());
    }
    write_json(ctx, "conjugate.json", j);
    return 0;
}

int cmd_suite(RunContext& ctx, bool reduced, int criterion) {
    dw::SuiteConfig sc;
    sc.reduced = reduced;
    sc.seed = ctx.seed;
    sc.out_dir = ctx.out_dir;
    std::vector<dw::CriterionResult> results;
    if (criterion > 0)
        results.push_back(dw::run_criterion(criterion, sc));
    else
        results = dw::run_acceptance_suite(sc);
    bool all = true;
    json arr = json::array();
    for (const auto& r : results) {
        std::cout << r.line() << "\n";
        all = all && r.pass;
        json e;
        e["id"] = r.id;
        e["name"] = r.name;
        e["pass"] = r.pass;
        e["relaxed"] = r.relaxed;
        e["seconds"] = r.seconds;
        for (const auto& [k, v] : r.metrics)
            e["metrics"][k] = v;
        arr.push_back(e);
    }
    json j;
    j["criteria"] = arr;
    j["all_pass"] = all;
    write_json(ctx, "suite.json", j);
    std::cout << (all ? "ALL PASS" : "FAILURES PRESENT") << "\n";
    return all ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"diamondwave: spectral water-wave DtN computations on periodic domains"};
    app.set_config("--config", "", "Read options from a TOML/INI config file");

    RunContext ctx;
    if (const char* env = std::getenv("DWAVE_OUT"))
        ctx.out_dir = env;
    app.add_option("--out", ctx.out_dir, "Output directory")->envname("DWAVE_OUT");
    app.add_option("--seed", ctx.seed, "Seed for randomized inputs");
    bool schema = false;
    app.add_flag("--schema", schema, "Print the CSV/JSON column documentation and exit");

    int n = 64;
    double ell = 1.0, eps_one = 0.05;
    std::vector<double> eps_list{0.02, 0.04, 0.08};
    dw::SolverConfig sc;
    sc.depth = 2.5;
    sc.nz = 40;
    int order = 3, ndir = 64;
    double band_lo = 2.0, band_hi = 16.0, decay = 2.5;
    std::string aj_prefix;
    double nu_override = -1.0;
    bool reduced = false;
    int criterion = 0;

    auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--n", n, "Grid points per direction (power of two)");
        cmd->add_option("--ell", ell, "x2 period parameter (period 2 pi ell)");
        cmd->add_option("--depth", sc.depth, "Strip truncation depth");
        cmd->add_option("--nz", sc.nz, "Chebyshev degree in z");
        cmd->add_option("--tol", sc.tol, "Solver fixed-point tolerance");
        cmd->add_option("--max-iter", sc.max_iter, "Solver iteration cap");
    };

    CLI::App* dtn = app.add_subcommand("dtn", "DtN trace and boundary coefficients");
    add_grid(dtn);
    dtn->add_option("--eps", eps_one, "Stokes amplitude");

    CLI::App* paralin = app.add_subcommand("paralin", "Paralinearization remainder sweep");
    add_grid(paralin);
    paralin->add_option("--eps", eps_list, "Amplitude sweep")->delimiter(',');
    paralin->add_option("--order", order, "Symbol expansion order (1..3)");
    paralin->add_option("--ndir", ndir, "Direction mesh size");
    paralin->add_option("--band-lo", band_lo, "Data band lower edge");
    paralin->add_option("--band-hi", band_hi, "Data band upper edge");
    paralin->add_option("--decay", decay, "Data spectral decay exponent");

    CLI::App* stokes = app.add_subcommand("stokes", "First-order wave residual sweep");
    add_grid(stokes);
    stokes->add_option("--eps", eps_list, "Amplitude sweep")->delimiter(',');

    CLI::App* conj = app.add_subcommand("conjugate", "Transport diffeomorphism and nu");
    add_grid(conj);
    conj->add_option("--eps", eps_one, "Stokes amplitude");
    conj->add_option("--aj", aj_prefix, "Prefix of a0..a4 field CSVs for the cascade");
    conj->add_option("--nu", nu_override, "Override nu fed to the cascade");

    CLI::App* div = app.add_subcommand("divisors", "Small-divisor analysis");
    dw::DiophantineQuery q;
    dw::FamilyModel fm;
    std::vector<double> r_grid{1e-2, 1e-3, 1e-4};
    int samples = 64;
    CLI::App* dscan = div->add_subcommand("scan", "Scan the diophantine condition");
    dscan->add_option("--nu", q.nu)->required();
    dscan->add_option("--kappa0", q.kappa0);
    dscan->add_option("--kappa1", q.kappa1);
    dscan->add_option("--delta", q.delta);
    dscan->add_option("--N", q.N);
    dscan->add_option("--k1max", q.k1max);
    CLI::App* dmeas = div->add_subcommand("measure", "Exclusion-set measure curve");
    dmeas->add_option("--nu-bar", fm.nu_bar)->required();
    dmeas->add_option("--nu-prime", fm.nu_prime);
    dmeas->add_option("--kappa0-bar", fm.kappa0_bar);
    dmeas->add_option("--kappa1-bar", fm.kappa1_bar);
    dmeas->add_option("--delta", fm.delta);
    dmeas->add_option("--delta-prime", fm.delta_prime);
    dmeas->add_option("--k1max", fm.k1max);
    dmeas->add_option("--r", r_grid, "r grid")->delimiter(',');
    dmeas->add_option("--samples", samples);
    CLI::App* dclaims = div->add_subcommand("claims", "Exclusion-set claim enumeration");
    dclaims->add_option("--nu-bar", fm.nu_bar)->required();
    dclaims->add_option("--nu-prime", fm.nu_prime);
    dclaims->add_option("--kappa0-bar", fm.kappa0_bar);
    dclaims->add_option("--kappa1-bar", fm.kappa1_bar);
    dclaims->add_option("--delta", fm.delta);
    dclaims->add_option("--delta-prime", fm.delta_prime);
    dclaims->add_option("--k1max", fm.k1max);
    dclaims->add_option("--r", r_grid, "r values")->delimiter(',');
    dclaims->add_option("--samples", samples);
    div->require_subcommand(0, 1);

    CLI::App* suite = app.add_subcommand("suite", "Run the acceptance criteria");
    suite->add_flag("--reduced", reduced, "32x32-class smoke run (tolerances flagged)");
    suite->add_option("--criterion", criterion, "Run a single criterion (1..10)");

    // global options (--out, --seed) may appear after a subcommand
    for (CLI::App* sub : {dtn, paralin, stokes, conj, div, suite, dscan, dmeas, dclaims})
        sub->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (schema) {
        std::cout << kSchema << "\n";
        return 0;
    }

    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);

    auto guarded = [&](const std::string& name, const std::function<int()>& body) {
        ctx.subcommand = name;
        int rc = 0;
        try {
            rc = body();
        } catch (const std::exception& e) {
            ctx.failed = true;
            ctx.error = e.what();
            std::cerr << "error: " << e.what() << "\n";
            rc = 2;
        }
        ctx.write_manifest();
        return rc;
    };

    if (dtn->parsed()) {
        ctx.params = {{"n", n}, {"ell", ell}, {"eps", eps_one}, {"depth", sc.depth},
                      {"nz", sc.nz}, {"tol", sc.tol}, {"max_iter", sc.max_iter}};
        return guarded("dtn", [&] { return cmd_dtn(ctx, n, ell, eps_one, sc); });
    }
    if (paralin->parsed()) {
        ctx.params = {{"n", n}, {"ell", ell}, {"eps", eps_list}, {"order", order},
                      {"ndir", ndir},  {"depth", sc.depth}, {"nz", sc.nz},
                      {"band_lo", band_lo}, {"band_hi", band_hi}, {"decay", decay}};
        return guarded("paralin", [&] {
            return cmd_paralin(ctx, n, ell, eps_list, order, ndir, sc, band_lo, band_hi, decay);
        });
    }
    if (stokes->parsed()) {
        ctx.params = {{"n", n}, {"ell", ell}, {"eps", eps_list}, {"depth", sc.depth},
                      {"nz", sc.nz}};
        return guarded("stokes", [&] { return cmd_stokes(ctx, n, ell, eps_list, sc); });
    }
    if (conj->parsed()) {
        ctx.params = {{"n", n}, {"ell", ell}, {"eps", eps_one}, {"depth", sc.depth},
                      {"nz", sc.nz}, {"aj", aj_prefix}};
        return guarded("conjugate",
                       [&] { return cmd_conjugate(ctx, n, ell, eps_one, sc, aj_prefix,
                                                  nu_override); });
    }
    if (div->parsed()) {
        if (dscan->parsed()) {
            ctx.params = {{"nu", q.nu}, {"kappa0", q.kappa0}, {"kappa1", q.kappa1},
                          {"delta", q.delta}, {"N", q.N}, {"k1max", q.k1max}};
            return guarded("divisors.scan", [&] {
                dw::DiophantineReport rep = dw::scan_condition(q);
                dw::atomic_write(ctx.path("divisor_scan.json"), rep.to_json() + "\n");
                std::cout << (rep.pass ? "pass" : "violations found") << "\n";
                return 0;
            });
        }
        if (dmeas->parsed()) {
            ctx.params = {{"nu_bar", fm.nu_bar}, {"nu_prime", fm.nu_prime},
                          {"delta", fm.delta}, {"delta_prime", fm.delta_prime},
                          {"r", r_grid}, {"samples", samples}, {"k1max", fm.k1max}};
            return guarded("divisors.measure", [&] {
                dw::DiophantineReport rep = dw::exclusion_measure(fm, r_grid, samples);
                rep.save_measure_csv(ctx.path("divisor_measure.csv"));
                dw::atomic_write(ctx.path("divisor_measure.json"), rep.to_json() + "\n");
                return 0;
            });
        }
        if (dclaims->parsed()) {
            ctx.params = {{"nu_bar", fm.nu_bar}, {"nu_prime", fm.nu_prime},
                          {"delta", fm.delta}, {"delta_prime", fm.delta_prime},
                          {"r", r_grid}, {"samples", samples}};
            return guarded("divisors.claims", [&] {
                json arr = json::array();
                for (double r : r_grid) {
                    dw::LemmaClaims lc = dw::verify_lemma_claims(fm, r, samples);
                    json e;
                    e["r"] = lc.r;
                    e["min_nonempty_k1"] = lc.min_nonempty_k1;
                    e["predicted_min_k1"] = lc.predicted_min_k1;
                    e["max_count_per_k1"] = lc.max_count_per_k1;
                    e["count_bound_constant"] = lc.count_bound_constant;
                    e["max_scaled_length"] = lc.max_scaled_length;
                    e["length_bound_constant"] = lc.length_bound_constant;
                    e["count_bound_ok"] = lc.count_bound_ok;
                    e["length_bound_ok"] = lc.length_bound_ok;
                    arr.push_back(e);
                }
                json out;
                out["claims"] = arr;
                write_json(ctx, "divisor_claims.json", out);
                return 0;
            });
        }
        std::cerr << "divisors: choose a subcommand (scan|measure|claims)\n";
        return 2;
    }
    if (suite->parsed()) {
        ctx.params = {{"reduced", reduced}, {"criterion", criterion}};
        return guarded("suite", [&] { return cmd_suite(ctx, reduced, criterion); });
    }
    std::cout << app.help() << "\n";
    return 0;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run_cli(args);
}
