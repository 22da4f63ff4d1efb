#include "dw/dtn.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dw {

FlattenedPotential::FlattenedPotential(const TorusGrid& grid, const SolverConfig& cfg)
    : grid_(grid), cfg_(cfg), z_(cfg.nz, -cfg.depth, 0.0),
      hat_(cfg.nz + 1, std::vector<cplx>(grid.size(), cplx(0, 0))) {}

FourierField FlattenedPotential::slice_field(int j) const {
    FourierField f(grid_);
    f.coeffs() = hat_[j];
    return f;
}

std::vector<cplx> FlattenedPotential::dz_slice(int j) const {
    const int m = cfg_.nz + 1;
    std::vector<cplx> out(grid_.size(), cplx(0, 0));
    const double* row = z_.D.data() + static_cast<size_t>(j) * m;
    for (int l = 0; l < m; ++l) {
        cplx w(row[l], 0.0);
        const auto& s = hat_[l];
        for (int i = 0; i < grid_.size(); ++i)
            out[i] += w * s[i];
    }
    return out;
}

// ----------------------------------------------------------------------------

struct DtnSolver::Impl {
    // LU factors per distinct |xi|^2 (bit-keyed); the matrix is real.
    std::map<double, int> factor_of;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus;
    std::vector<int> factor_index;  // per lattice slot
    ChebGrid z;

    Impl(const TorusGrid& g, const SolverConfig& cfg) : z(cfg.nz, -cfg.depth, 0.0) {
        const int m = cfg.nz + 1;
        Eigen::MatrixXd D = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                           Eigen::Dynamic, Eigen::RowMajor>>(
            z.D.data(), m, m);
        Eigen::MatrixXd D2 = D * D;
        factor_index.resize(g.size());
        for (int i1 = 0; i1 < g.n1(); ++i1)
            for (int i2 = 0; i2 < g.n2(); ++i2) {
                double x1 = g.xi1_of(i1), x2 = g.xi2_of(i2);
                double q = x1 * x1 + x2 * x2;
                auto it = factor_of.find(q);
                int idx;
                if (it != factor_of.end()) {
                    idx = it->second;
                } else {
                    Eigen::MatrixXd A = D2 - q * Eigen::MatrixXd::Identity(m, m);
                    // surface row: Dirichlet
                    A.row(0).setZero();
                    A(0, 0) = 1.0;
                    // bottom row: radiation dz v = |xi| v, or Neumann
                    A.row(m - 1) = D.row(m - 1);
                    if (!cfg.neumann_bottom)
                        A(m - 1, m - 1) -= std::sqrt(q);
                    idx = static_cast<int>(lus.size());
                    lus.emplace_back(A);
                    factor_of.emplace(q, idx);
                }
                factor_index[static_cast<size_t>(i1) * g.n2() + i2] = idx;
            }
    }
};

DtnSolver::DtnSolver(const TorusGrid& grid, const SolverConfig& cfg)
    : grid_(grid), cfg_(cfg), impl_(std::make_unique<Impl>(grid, cfg)) {}
DtnSolver::~DtnSolver() = default;
DtnSolver::DtnSolver(DtnSolver&&) noexcept = default;

namespace {

// physical values of a spectral slice
std::vector<cplx> to_phys(const TorusGrid& g, const std::vector<cplx>& hat) {
    std::vector<cplx> v = hat;
    fft::inverse(g.n1(), g.n2(), v);
    return v;
}

std::vector<cplx> to_spec(const TorusGrid& g, std::vector<cplx> v) {
    fft::forward(g.n1(), g.n2(), v);
    return v;
}

void spectral_dx(const TorusGrid& g, const std::vector<cplx>& in, std::vector<cplx>& out,
                 bool along1) {
    out.resize(in.size());
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            double k = along1 ? g.xi1_of(i1) : g.xi2_of(i2);
            if ((along1 && i1 == g.n1() / 2) || (!along1 && i2 == g.n2() / 2))
                k = 0.0;
            size_t ix = static_cast<size_t>(i1) * g.n2() + i2;
            out[ix] = cplx(0.0, k) * in[ix];
        }
}

}  // namespace

FlattenedPotential DtnSolver::solve(const FourierField& sigma, const FourierField& psi) const {
    if (sigma.grid() != grid_ || psi.grid() != grid_)
        throw Error("DtnSolver: grid mismatch");
    const TorusGrid& g = grid_;
    const int N = g.size(), m = cfg_.nz + 1;

    // sigma-derived coefficient fields (physical)
    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    std::vector<double> lap = laplacian(sigma).values();
    std::vector<double> gs2(N);
    double coef_scale = 0.0;
    for (int i = 0; i < N; ++i) {
        gs2[i] = s1[i] * s1[i] + s2[i] * s2[i];
        coef_scale = std::max(coef_scale, gs2[i]);
    }
    const bool flat = coef_scale == 0.0;

    FourierField psi0 = psi;
    psi0.atk(0, 0) = 0.0;  // DtN kernel contains constants
    double psi_norm = sobolev_norm(psi0, 0.0);

    FlattenedPotential pot(g, cfg_);

    // flat solve with rhs f (interior rows), Dirichlet psi0 on top; the
    // zero mode's bottom Neumann datum carries the lagged flux correction
    auto flat_solve = [&](const std::vector<std::vector<cplx>>& rhs, cplx bottom0,
                          std::vector<std::vector<cplx>>& v) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int ix = 0; ix < N; ++ix) {
            Eigen::MatrixXd b(m, 2);
            b(0, 0) = psi0.coeffs()[ix].real();
            b(0, 1) = psi0.coeffs()[ix].imag();
            for (int j = 1; j + 1 < m; ++j) {
                b(j, 0) = rhs.empty() ? 0.0 : rhs[j][ix].real();
                b(j, 1) = rhs.empty() ? 0.0 : rhs[j][ix].imag();
            }
            b(m - 1, 0) = ix == 0 ? bottom0.real() : 0.0;
            b(m - 1, 1) = ix == 0 ? bottom0.imag() : 0.0;
            Eigen::MatrixXd sol = impl_->lus[impl_->factor_index[ix]].solve(b);
            for (int j = 0; j < m; ++j)
                v[j][ix] = cplx(sol(j, 0), sol(j, 1));
        }
    };

    std::vector<std::vector<cplx>> v(m, std::vector<cplx>(N));
    flat_solve({}, cplx(0, 0), v);
    if (flat) {
        pot.hat_ = std::move(v);
        pot.residual_ = 0.0;
        pot.iters_ = 0;
        return pot;
    }

    // lagged zero-mode flux datum: at the converged point
    // mean_x[(1+|grad s|^2) dz v - grad s . grad v](-L) = 0, the exact
    // far-field value of the conserved vertical flux
    auto bottom_flux = [&](const std::vector<std::vector<cplx>>& w,
                           const std::vector<cplx>& dz_bottom) {
        std::vector<cplx> d1, d2;
        spectral_dx(g, w[m - 1], d1, true);
        spectral_dx(g, w[m - 1], d2, false);
        std::vector<cplx> pdz = to_phys(g, dz_bottom);
        std::vector<cplx> p1 = to_phys(g, d1);
        std::vector<cplx> p2 = to_phys(g, d2);
        cplx acc(0, 0);
        for (int ix = 0; ix < N; ++ix)
            acc += -gs2[ix] * pdz[ix] + s1[ix] * p1[ix] + s2[ix] * p2[ix];
        return acc / static_cast<double>(N);
    };

    // F(v) = -|grad s|^2 dz^2 v + 2 grad s . grad dz v + (lap s) dz v
    auto rhs_of = [&](const std::vector<std::vector<cplx>>& w) {
        std::vector<std::vector<cplx>> dz(m, std::vector<cplx>(N, cplx(0, 0)));
        std::vector<std::vector<cplx>> dzz(m, std::vector<cplx>(N, cplx(0, 0)));
        for (int j = 0; j < m; ++j) {
            const double* row = impl_->z.D.data() + static_cast<size_t>(j) * m;
            for (int l = 0; l < m; ++l) {
                double wl = row[l];
                if (wl == 0.0)
                    continue;
                for (int ix = 0; ix < N; ++ix)
                    dz[j][ix] += wl * w[l][ix];
            }
        }
        for (int j = 0; j < m; ++j) {
            const double* row = impl_->z.D.data() + static_cast<size_t>(j) * m;
            for (int l = 0; l < m; ++l) {
                double wl = row[l];
                if (wl == 0.0)
                    continue;
                for (int ix = 0; ix < N; ++ix)
                    dzz[j][ix] += wl * dz[l][ix];
            }
        }
        std::vector<std::vector<cplx>> F(m, std::vector<cplx>(N, cplx(0, 0)));
        std::vector<cplx> d1, d2;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) private(d1, d2)
#endif
        for (int j = 1; j < m - 1; ++j) {
            spectral_dx(g, dz[j], d1, true);
            spectral_dx(g, dz[j], d2, false);
            std::vector<cplx> pdz = to_phys(g, dz[j]);
            std::vector<cplx> pdzz = to_phys(g, dzz[j]);
            std::vector<cplx> p1 = to_phys(g, d1);
            std::vector<cplx> p2 = to_phys(g, d2);
            std::vector<cplx> f(N);
            for (int ix = 0; ix < N; ++ix)
                f[ix] = -gs2[ix] * pdzz[ix] + 2.0 * (s1[ix] * p1[ix] + s2[ix] * p2[ix]) +
                        lap[ix] * pdz[ix];
            F[j] = to_spec(g, std::move(f));
        }
        cplx b0 = cfg_.neumann_bottom ? cplx(0, 0) : bottom_flux(w, dz[m - 1]);
        return std::make_pair(std::move(F), b0);
    };

    double update = 1e300;
    int it = 0;
    std::vector<std::vector<cplx>> vn(m, std::vector<cplx>(N));
    for (; it < cfg_.max_iter; ++it) {
        auto [F, b0] = rhs_of(v);
        flat_solve(F, b0, vn);
        update = 0.0;
        for (int j = 0; j < m; ++j) {
            double d = 0.0;
            for (int ix = 0; ix < N; ++ix)
                d += std::norm(vn[j][ix] - v[j][ix]);
            update = std::max(update, std::sqrt(d));
        }
        std::swap(v, vn);
        if (update <= cfg_.tol * std::max(psi_norm, 1e-30)) {
            ++it;
            break;
        }
    }
    if (update > cfg_.tol * std::max(psi_norm, 1e-30)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "dtn solve: no convergence after %d iterations (relative update %.3e)",
                      cfg_.max_iter, update / std::max(psi_norm, 1e-30));
        throw Error(msg);
    }

    pot.hat_ = std::move(v);
    pot.iters_ = it;

    // interior equation residual, relative to the data norm
    {
        const auto& w = pot.hat_;
        std::vector<std::vector<cplx>> dz(m, std::vector<cplx>(N, cplx(0, 0)));
        for (int j = 0; j < m; ++j) {
            const double* row = impl_->z.D.data() + static_cast<size_t>(j) * m;
            for (int l = 0; l < m; ++l)
                for (int ix = 0; ix < N; ++ix)
                    dz[j][ix] += row[l] * w[l][ix];
        }
        double worst = 0.0;
        for (int j = 1; j + 1 < m; j += std::max(1, m / 8)) {
            std::vector<cplx> dzz(N, cplx(0, 0));
            const double* row = impl_->z.D.data() + static_cast<size_t>(j) * m;
            for (int l = 0; l < m; ++l)
                for (int ix = 0; ix < N; ++ix)
                    dzz[ix] += row[l] * dz[l][ix];
            std::vector<cplx> d1, d2, lapx(N);
            spectral_dx(g, dz[j], d1, true);
            spectral_dx(g, dz[j], d2, false);
            for (int i1 = 0; i1 < g.n1(); ++i1)
                for (int i2 = 0; i2 < g.n2(); ++i2) {
                    double x1 = g.xi1_of(i1), x2 = g.xi2_of(i2);
                    size_t ix = static_cast<size_t>(i1) * g.n2() + i2;
                    lapx[ix] = -(x1 * x1 + x2 * x2) * w[j][ix];
                }
            std::vector<cplx> pdz = to_phys(g, dz[j]);
            std::vector<cplx> pdzz = to_phys(g, dzz);
            std::vector<cplx> p1 = to_phys(g, d1);
            std::vector<cplx> p2 = to_phys(g, d2);
            std::vector<cplx> plap = to_phys(g, lapx);
            double acc = 0.0;
            for (int ix = 0; ix < N; ++ix) {
                cplx r = (1.0 + gs2[ix]) * pdzz[ix] + plap[ix] -
                         2.0 * (s1[ix] * p1[ix] + s2[ix] * p2[ix]) - lap[ix] * pdz[ix];
                acc += std::norm(r);
            }
            worst = std::max(worst, std::sqrt(acc / N));
        }
        pot.residual_ = worst / std::max(psi_norm, 1e-30);
    }
    return pot;
}

FourierField DtnSolver::trace(const FourierField& sigma, const FlattenedPotential& v) const {
    const TorusGrid& g = grid_;
    const int N = g.size();
    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    std::vector<cplx> dzv = v.dz_slice(0);
    std::vector<cplx> d1, d2;
    spectral_dx(g, v.slice(0), d1, true);
    spectral_dx(g, v.slice(0), d2, false);
    std::vector<cplx> pdz = to_phys(g, dzv);
    std::vector<cplx> p1 = to_phys(g, d1);
    std::vector<cplx> p2 = to_phys(g, d2);
    std::vector<double> out(N);
    for (int ix = 0; ix < N; ++ix) {
        double gs2 = s1[ix] * s1[ix] + s2[ix] * s2[ix];
        out[ix] = ((1.0 + gs2) * pdz[ix] - s1[ix] * p1[ix] - s2[ix] * p2[ix]).real();
    }
    return forward_transform(g, out);
}

FourierField DtnSolver::apply(const FourierField& sigma, const FourierField& psi) const {
    FlattenedPotential v = solve(sigma, psi);
    return trace(sigma, v);
}

FlattenedPotential solve_flattened(const FourierField& sigma, const FourierField& psi,
                                   const SolverConfig& cfg) {
    DtnSolver s(sigma.grid(), cfg);
    return s.solve(sigma, psi);
}

FourierField dtn_apply(const FourierField& sigma, const FourierField& psi,
                       const SolverConfig& cfg) {
    DtnSolver s(sigma.grid(), cfg);
    return s.apply(sigma, psi);
}

// --- boundary coefficients -------------------------------------------------------

BoundaryCoefficients boundary_coefficients(const FourierField& sigma, const FourierField& psi,
                                           const FourierField& gpsi, double mu,
                                           bool travelling) {
    const TorusGrid& g = sigma.grid();
    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    std::vector<double> p1 = dx1(psi).values(), p2 = dx2(psi).values();
    std::vector<double> gp = gpsi.values();
    const int N = g.size();
    std::vector<double> b(N), v1(N), v2(N);
    for (int i = 0; i < N; ++i) {
        b[i] = (s1[i] * p1[i] + s2[i] * p2[i] + gp[i]) / (1.0 + s1[i] * s1[i] + s2[i] * s2[i]);
        v1[i] = (travelling ? 1.0 : 0.0) + p1[i] - b[i] * s1[i];
        v2[i] = p2[i] - b[i] * s2[i];
    }
    BoundaryCoefficients out{forward_transform(g, b), forward_transform(g, v1),
                             forward_transform(g, v2), FourierField(g), mu, travelling};
    std::vector<double> b1 = dx1(out.b).values(), b2 = dx2(out.b).values(), a(N);
    for (int i = 0; i < N; ++i)
        a[i] = mu + v1[i] * b1[i] + v2[i] * b2[i];
    out.taylor = forward_transform(g, a);
    return out;
}

FourierField good_unknown(const FourierField& sigma, const FourierField& psi,
                          const FourierField& b, const CutoffPair& cut) {
    FourierField u = psi;
    u -= paraproduct(b, sigma, cut);
    return u;
}

TaylorCheck taylor_sign_check(const BoundaryCoefficients& coeffs) {
    TaylorCheck out;
    int arg = 0;
    out.min_value = min_value(coeffs.taylor, &arg);
    const TorusGrid& g = coeffs.taylor.grid();
    out.x1 = g.x1(arg / g.n2());
    out.x2 = g.x2(arg % g.n2());
    out.positive = out.min_value > 0.0;
    return out;
}

// --- paralinearization --------------------------------------------------------------

DtnReport paralin_remainder(const FourierField& sigma, const FourierField& psi,
                            const ParalinConfig& cfg) {
    const TorusGrid& g = sigma.grid();
    DtnSolver solver(g, cfg.solver);
    FourierField gpsi = solver.apply(sigma, psi);

    BoundaryCoefficients bc = boundary_coefficients(sigma, psi, gpsi, 0.0, false);
    FourierField u = good_unknown(sigma, psi, bc.b, cfg.cut);

    DirectionMesh mesh(cfg.ndir, g.dim());
    SymbolExpansion lambda = dtn_symbol_expansion(sigma, mesh, cfg.order);

    FourierField model = apply_paradiff(lambda, u, cfg.cut);
    model -= paraproduct(bc.V1, dx1(sigma), cfg.cut);
    model -= paraproduct(bc.V2, dx2(sigma), cfg.cut);
    FourierField divV = dx1(bc.V1) + dx2(bc.V2);
    model -= paraproduct(divV, sigma, cfg.cut);

    DtnReport rep{gpsi, bc, u, gpsi - model, {}, 0.0};
    rep.r_h0 = sobolev_norm(rep.remainder, 0.0);
    int kmax = lp_max_block(g);
    for (int k = 0; k <= kmax; ++k) {
        DtnReport::BandRow row{k, sobolev_norm(lp_block(rep.remainder, k), 0.0),
                               sobolev_norm(lp_block(sigma, k), 0.0),
                               sobolev_norm(lp_block(psi, k), 0.0)};
        rep.bands.push_back(row);
    }
    return rep;
}

void DtnReport::save_diagnostics_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw Error("save_diagnostics_csv: cannot open " + path);
    out << "band,r_norm,sigma_norm,psi_norm\n";
    char buf[128];
    for (const auto& row : bands) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g", row.k, row.r_norm,
                      row.sigma_norm, row.psi_norm);
        out << buf << "\n";
    }
}

}  // namespace dw
