#include "dw/conjugation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dw/io.hpp"

namespace dw {

namespace {

constexpr cplx I{0.0, 1.0};
const double PI = TorusGrid::pi();

FourierField cscale(const FourierField& f, cplx s) {
    FourierField g = f;
    for (auto& c : g.coeffs())
        c *= s;
    return g;
}

FourierField field_from_complex(const TorusGrid& g, std::vector<cplx> vals) {
    fft::forward(g.n1(), g.n2(), vals);
    FourierField f(g);
    f.coeffs() = std::move(vals);
    return f;
}

double max_abs_complex(const FourierField& f) {
    double m = 0.0;
    for (const auto& c : f.values_complex())
        m = std::max(m, std::abs(c));
    return m;
}

// 1-d spectral primitive over the x2 circle (period 2 pi ell), P(0) = 0;
// the zero mode is dropped and its size reported.
std::vector<cplx> primitive_1d(const std::vector<cplx>& vals, double ell, double* defect) {
    const int n = static_cast<int>(vals.size());
    std::vector<cplx> hat(n);
    fft::forward1d(n, vals.data(), hat.data());
    if (defect)
        *defect = std::abs(hat[0]);
    std::vector<cplx> out(n, cplx(0, 0));
    for (int j = 1; j < n; ++j) {
        int k = j <= n / 2 - 1 ? j : j - n;
        if (j == n / 2)
            k = 0;
        if (k == 0)
            continue;
        out[j] = hat[j] / cplx(0.0, k / ell);
    }
    std::vector<cplx> phys(n);
    fft::inverse1d(n, out.data(), phys.data());
    cplx at0 = phys[0];
    for (auto& v : phys)
        v -= at0;
    return phys;
}

// 1-d series coefficients (FFT order) of a sample vector
std::vector<cplx> spec_1d(const std::vector<cplx>& vals) {
    std::vector<cplx> hat(vals.size());
    fft::forward1d(static_cast<int>(vals.size()), vals.data(), hat.data());
    return hat;
}

cplx eval_series_1d(const std::vector<cplx>& hat, double ell, double x2) {
    const int n = static_cast<int>(hat.size());
    cplx acc(0, 0);
    for (int j = 0; j < n; ++j) {
        int k = j <= n / 2 - 1 ? j : j - n;
        if (j == n / 2)
            k = -n / 2;
        acc += hat[j] * std::exp(cplx(0.0, k / ell * x2));
    }
    return acc;
}

// per-x1-node line spectra: out[i1*n2 + j] = sum_k1 c(k1, j-slot) e^{i k1 x1_i}
std::vector<cplx> line_spectra(const FourierField& f) {
    const TorusGrid& g = f.grid();
    std::vector<cplx> out(static_cast<size_t>(g.n1()) * g.n2());
    std::vector<cplx> col(g.n1()), phys(g.n1());
    for (int i2 = 0; i2 < g.n2(); ++i2) {
        for (int i1 = 0; i1 < g.n1(); ++i1)
            col[i1] = f.at(i1, i2);
        fft::inverse1d(g.n1(), col.data(), phys.data());
        for (int i1 = 0; i1 < g.n1(); ++i1)
            out[static_cast<size_t>(i1) * g.n2() + i2] = phys[i1];
    }
    return out;
}

}  // namespace

FourierField x1_primitive(const FourierField& f, double* mean_defect, double tol) {
    const TorusGrid& g = f.grid();
    FourierField out(g);
    double defect = 0.0;
    for (int i2 = 0; i2 < g.n2(); ++i2)
        defect += std::norm(f.at(0, i2));
    defect = std::sqrt(defect);
    if (mean_defect)
        *mean_defect = defect;
    double scale = sobolev_norm(f, 0.0);
    if (defect > tol * (scale + 1e-30))
        throw Error("x1_primitive: zero-mean violation, defect " + format_double(defect));
    for (int i1 = 0; i1 < g.n1(); ++i1) {
        double k1 = g.xi1_of(i1);
        if (i1 == g.n1() / 2)
            k1 = 0.0;
        if (k1 == 0.0)
            continue;
        for (int i2 = 0; i2 < g.n2(); ++i2)
            out.at(i1, i2) = f.at(i1, i2) / cplx(0.0, k1);
    }
    // enforce P(0, x2) = 0 through the k1 = 0 column
    for (int i2 = 0; i2 < g.n2(); ++i2) {
        cplx s(0, 0);
        for (int i1 = 0; i1 < g.n1(); ++i1)
            if (i1 != 0)
                s += out.at(i1, i2);
        out.at(0, i2) = -s;
    }
    return out;
}

// --- transport diffeomorphism -----------------------------------------------------

DiffeoPack transport_diffeo(const FourierField& V1, const FourierField& V2, int substeps) {
    const TorusGrid& g = V1.grid();
    if (V2.grid() != g)
        throw Error("transport_diffeo: grid mismatch");
    const int n1 = g.n1(), n2 = g.n2();

    {
        double mn = 1e300;
        for (double v : V1.values())
            mn = std::min(mn, std::abs(v));
        if (mn < 1e-9)
            throw Error("transversality-lost: V1 vanishes on the grid");
    }

    FourierField ratio = divide(V2, V1);
    FourierField ratio_y = dx2(ratio);

    // refined x1 sampling so every RK4 stage lands on a sample
    const int refine = 2 * substeps;
    const int M = refine * n1;
    auto refine_x1 = [&](const FourierField& f) {
        std::vector<cplx> big(static_cast<size_t>(M) * n2, cplx(0, 0));
        for (int i1 = 0; i1 < n1; ++i1) {
            int k1 = g.k1_of(i1);
            int j1 = k1 >= 0 ? k1 : k1 + M;
            for (int i2 = 0; i2 < n2; ++i2)
                big[static_cast<size_t>(j1) * n2 + i2] = f.at(i1, i2);
        }
        fft::inverse(M, n2, big);
        std::vector<double> out(big.size());
        for (size_t i = 0; i < big.size(); ++i)
            out[i] = big[i].real();
        return out;
    };
    std::vector<double> r = refine_x1(ratio), ry = refine_x1(ratio_y);

    auto d2_of = [&](const std::vector<double>& w) {
        std::vector<cplx> line(n2);
        for (int i = 0; i < n2; ++i)
            line[i] = w[i];
        std::vector<cplx> hat(n2);
        fft::forward1d(n2, line.data(), hat.data());
        for (int j = 0; j < n2; ++j) {
            int k = j <= n2 / 2 - 1 ? j : j - n2;
            if (j == n2 / 2)
                k = 0;
            hat[j] *= cplx(0.0, k / g.ell());
        }
        fft::inverse1d(n2, hat.data(), line.data());
        std::vector<double> out(n2);
        for (int i = 0; i < n2; ++i)
            out[i] = line[i].real();
        return out;
    };
    auto rhs = [&](int stage, const std::vector<double>& w) {
        const double* rr = r.data() + static_cast<size_t>(stage % M) * n2;
        const double* rryy = ry.data() + static_cast<size_t>(stage % M) * n2;
        std::vector<double> wy = d2_of(w);
        std::vector<double> out(n2);
        for (int i = 0; i < n2; ++i)
            out[i] = -rr[i] * wy[i] - rryy[i] * w[i];
        return out;
    };

    const int steps = substeps * n1;
    const double h = 2.0 * PI / steps;
    std::vector<double> w(n2, 1.0);
    std::vector<double> w_nodes(static_cast<size_t>(n1) * n2);
    for (int m = 0; m < steps; ++m) {
        if (m % substeps == 0) {
            int j = m / substeps;
            for (int i = 0; i < n2; ++i)
                w_nodes[static_cast<size_t>(j) * n2 + i] = w[i];
        }
        int s0 = 2 * m, s1 = 2 * m + 1, s2 = 2 * m + 2;
        std::vector<double> k1v = rhs(s0, w);
        std::vector<double> tmp(n2);
        for (int i = 0; i < n2; ++i)
            tmp[i] = w[i] + 0.5 * h * k1v[i];
        std::vector<double> k2v = rhs(s1, tmp);
        for (int i = 0; i < n2; ++i)
            tmp[i] = w[i] + 0.5 * h * k2v[i];
        std::vector<double> k3v = rhs(s1, tmp);
        for (int i = 0; i < n2; ++i)
            tmp[i] = w[i] + h * k3v[i];
        std::vector<double> k4v = rhs(s2, tmp);
        for (int i = 0; i < n2; ++i)
            w[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        for (double x : w)
            if (!(x > 0.0))
                throw Error("transport_diffeo: w reached zero (characteristics crossing)");
    }

    DiffeoPack pack;
    pack.grid = g;
    for (int i = 0; i < n2; ++i)
        pack.w_periodicity_defect = std::max(pack.w_periodicity_defect, std::abs(w[i] - 1.0));

    // normalize each x1 line to exact unit x2-mean (the continuum identity),
    // then integrate w - 1 into the periodic part of d
    std::vector<double> P(w_nodes.size());
    for (int j = 0; j < n1; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n2; ++i)
            mean += w_nodes[static_cast<size_t>(j) * n2 + i];
        mean /= n2;
        pack.w_mean_defect = std::max(pack.w_mean_defect, std::abs(mean - 1.0));
        std::vector<cplx> line(n2);
        for (int i = 0; i < n2; ++i)
            line[i] = w_nodes[static_cast<size_t>(j) * n2 + i] / mean - 1.0;
        double dfct = 0.0;
        std::vector<cplx> prim = primitive_1d(line, g.ell(), &dfct);
        for (int i = 0; i < n2; ++i)
            P[static_cast<size_t>(j) * n2 + i] = prim[i].real();
    }
    pack.d_periodic = forward_transform(g, P);

    // transport residual V . grad d
    {
        FourierField dd1 = dx1(pack.d_periodic);
        FourierField dd2 = dx2(pack.d_periodic);
        std::vector<double> a = dd1.values(), b = dd2.values();
        std::vector<double> v1 = V1.values(), v2 = V2.values();
        double acc = 0.0, vn = 0.0;
        for (int i = 0; i < g.size(); ++i) {
            double rres = v1[i] * a[i] + v2[i] * (1.0 + b[i]);
            acc += rres * rres;
            vn += v1[i] * v1[i] + v2[i] * v2[i];
        }
        pack.transport_residual = std::sqrt(acc / std::max(vn, 1e-300));
    }
    return pack;
}

double DiffeoPack::eval_d(int i1, double x2) const {
    static thread_local std::vector<cplx> cache;
    static thread_local const DiffeoPack* owner = nullptr;
    if (owner != this || cache.empty()) {
        cache = line_spectra(d_periodic);
        owner = this;
    }
    const int n2 = grid.n2();
    std::vector<cplx> line(cache.begin() + static_cast<size_t>(i1) * n2,
                           cache.begin() + static_cast<size_t>(i1 + 1) * n2);
    return x2 + eval_series_1d(spec_1d(line), grid.ell(), x2).real();
}

double DiffeoPack::invert_d(int i1, double y) const {
    double s = y;
    for (int it = 0; it < 60; ++it) {
        double f = eval_d(i1, s) - y;
        // derivative w = dz d via finite step of the smooth series
        double hstep = 1e-6;
        double fp = (eval_d(i1, s + hstep) - eval_d(i1, s - hstep)) / (2.0 * hstep);
        double step = f / fp;
        s -= step;
        if (std::abs(step) < 1e-13)
            break;
    }
    return s;
}

FourierField transport_p2(const FourierField& sigma, const DiffeoPack& chi1) {
    const TorusGrid& g = sigma.grid();
    FourierField xi1f = dx1(chi1.d_periodic);
    FourierField xi2f = dx2(chi1.d_periodic);
    xi2f.atk(0, 0) += 1.0;
    FourierField lam = dtn_principal_at(sigma, xi1f, xi2f);
    return multiply(lam, lam);
}

// --- compute_nu --------------------------------------------------------------------

double compute_nu(const FourierField& P2, const FourierField& taylor, const FourierField& V1,
                  DiffeoPack& pack) {
    const TorusGrid& g = pack.grid;
    const int n1 = g.n1(), n2 = g.n2();
    std::vector<double> p2v = P2.values(), av = taylor.values(), v1v = V1.values();
    for (int i = 0; i < g.size(); ++i) {
        if (!(p2v[i] > 0.0))
            throw Error("compute_nu: Gamma <= 0 (P2 factor nonpositive)");
        if (!(av[i] > 0.0))
            throw Error("compute_nu: Gamma <= 0 (Taylor coefficient nonpositive)");
        if (!(v1v[i] * v1v[i] > 0.0))
            throw Error("compute_nu: Gamma <= 0 (V1 vanishes)");
    }
    std::vector<double> hv(g.size());
    for (int i = 0; i < g.size(); ++i)
        hv[i] = p2v[i] * av[i] / (v1v[i] * v1v[i]);
    FourierField h = forward_transform(g, hv);
    std::vector<cplx> hline = line_spectra(h);

    // Gamma(y) = h(chi1^{-1}(y)) on the grid
    std::vector<double> gam(g.size());
    for (int i1 = 0; i1 < n1; ++i1) {
        std::vector<cplx> line(hline.begin() + static_cast<size_t>(i1) * n2,
                               hline.begin() + static_cast<size_t>(i1 + 1) * n2);
        std::vector<cplx> hat = spec_1d(line);
        for (int i2 = 0; i2 < n2; ++i2) {
            double y2 = g.x2(i2);
            double s = pack.invert_d(i1, y2);
            double val = eval_series_1d(hat, g.ell(), s).real();
            if (!(val > 0.0))
                throw Error("compute_nu: Gamma <= 0 after composition");
            gam[static_cast<size_t>(i1) * n2 + i2] = val;
        }
    }

    // I(x2) = 2 pi mean_x1 sqrt(Gamma); nu = 4 pi^2 mean_x2 I^{-2}
    std::vector<double> Ix2(n2, 0.0);
    for (int i2 = 0; i2 < n2; ++i2) {
        double acc = 0.0;
        for (int i1 = 0; i1 < n1; ++i1)
            acc += std::sqrt(gam[static_cast<size_t>(i1) * n2 + i2]);
        Ix2[i2] = 2.0 * PI * acc / n1;
    }
    double nu = 0.0;
    for (int i2 = 0; i2 < n2; ++i2)
        nu += 1.0 / (Ix2[i2] * Ix2[i2]);
    nu *= 4.0 * PI * PI / n2;

    // 1 + etilde' = 4 pi^2 / (nu I^2)
    pack.etilde_prime.assign(n2, 0.0);
    std::vector<cplx> ep(n2);
    for (int i2 = 0; i2 < n2; ++i2) {
        pack.etilde_prime[i2] = 4.0 * PI * PI / (nu * Ix2[i2] * Ix2[i2]) - 1.0;
        ep[i2] = pack.etilde_prime[i2];
    }
    std::vector<cplx> et = primitive_1d(ep, g.ell(), &pack.etilde_mean_defect);
    pack.etilde.assign(n2, 0.0);
    for (int i2 = 0; i2 < n2; ++i2)
        pack.etilde[i2] = et[i2].real();

    // dtilde(y) = primitive_x1 of sqrt(nu Gamma (1+etilde')) - 1
    {
        std::vector<double> f(g.size());
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2)
                f[static_cast<size_t>(i1) * n2 + i2] =
                    std::sqrt(nu * gam[static_cast<size_t>(i1) * n2 + i2] *
                              (1.0 + pack.etilde_prime[i2])) -
                    1.0;
        pack.dtilde = x1_primitive(forward_transform(g, f), &pack.dtilde_mean_defect, 1e-5);
    }

    // gamma(x) = (1 + etilde'(d(x))) sqrt(P2(x))
    std::vector<double> dvals;  // d(x) on the grid
    {
        std::vector<double> pv = pack.d_periodic.values();
        dvals.resize(g.size());
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2)
                dvals[static_cast<size_t>(i1) * n2 + i2] =
                    g.x2(i2) + pv[static_cast<size_t>(i1) * n2 + i2];
    }
    {
        std::vector<cplx> ephat = spec_1d(ep);
        std::vector<double> gv(g.size());
        for (int i = 0; i < g.size(); ++i) {
            double e = eval_series_1d(ephat, g.ell(), dvals[i]).real();
            gv[i] = (1.0 + e) * std::sqrt(p2v[i]);
        }
        pack.gamma = forward_transform(g, gv);
    }

    // composite map cache: chi(x) - x
    {
        std::vector<cplx> dtline = line_spectra(pack.dtilde);
        std::vector<cplx> ethat;
        {
            std::vector<cplx> etc(n2);
            for (int i2 = 0; i2 < n2; ++i2)
                etc[i2] = pack.etilde[i2];
            ethat = spec_1d(etc);
        }
        std::vector<double> c1(g.size()), c2(g.size());
        std::vector<double> pv = pack.d_periodic.values();
        for (int i1 = 0; i1 < n1; ++i1) {
            std::vector<cplx> line(dtline.begin() + static_cast<size_t>(i1) * n2,
                                   dtline.begin() + static_cast<size_t>(i1 + 1) * n2);
            std::vector<cplx> hat = spec_1d(line);
            for (int i2 = 0; i2 < n2; ++i2) {
                size_t ix = static_cast<size_t>(i1) * n2 + i2;
                double dx = dvals[ix];
                c1[ix] = eval_series_1d(hat, g.ell(), dx).real();
                c2[ix] = pv[ix] + eval_series_1d(ethat, g.ell(), dx).real();
            }
        }
        pack.chi_tilde1 = forward_transform(g, c1);
        pack.chi_tilde2 = forward_transform(g, c2);
    }

    pack.nu = nu;
    pack.has_second_stage = true;
    return nu;
}

DiffeoJacobian DiffeoPack::jacobian() const {
    if (!has_second_stage)
        throw Error("DiffeoPack::jacobian: second stage missing (run compute_nu)");
    DiffeoJacobian j;
    j.j11 = dx1(chi_tilde1);
    j.j11.atk(0, 0) += 1.0;
    j.j12 = dx2(chi_tilde1);
    j.j21 = dx1(chi_tilde2);
    j.j22 = dx2(chi_tilde2);
    j.j22.atk(0, 0) += 1.0;
    j.d2_1_11 = dx1(dx1(chi_tilde1));
    j.d2_1_12 = dx1(dx2(chi_tilde1));
    j.d2_1_22 = dx2(dx2(chi_tilde1));
    j.d2_2_11 = dx1(dx1(chi_tilde2));
    j.d2_2_12 = dx1(dx2(chi_tilde2));
    j.d2_2_22 = dx2(dx2(chi_tilde2));
    return j;
}

// --- map samples / paracomposition ----------------------------------------------------

MapSamples map_samples(const DiffeoPack& pack) {
    const TorusGrid& g = pack.grid;
    MapSamples s;
    s.y1.resize(g.size());
    s.y2.resize(g.size());
    std::vector<double> c1, c2;
    if (pack.has_second_stage) {
        c1 = pack.chi_tilde1.values();
        c2 = pack.chi_tilde2.values();
    } else {
        c1.assign(g.size(), 0.0);
        c2 = pack.d_periodic.values();
    }
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            size_t ix = static_cast<size_t>(i1) * g.n2() + i2;
            s.y1[ix] = g.x1(i1) + c1[ix];
            s.y2[ix] = g.x2(i2) + c2[ix];
        }
    return s;
}

MapSamples identity_samples(const TorusGrid& g) {
    MapSamples s;
    s.y1.resize(g.size());
    s.y2.resize(g.size());
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            size_t ix = static_cast<size_t>(i1) * g.n2() + i2;
            s.y1[ix] = g.x1(i1);
            s.y2[ix] = g.x2(i2);
        }
    return s;
}

namespace {

// evaluate field (and optionally its gradient) at one point by direct series
cplx eval_field_at(const FourierField& f, double x1, double x2, cplx* g1 = nullptr,
                   cplx* g2 = nullptr) {
    const TorusGrid& g = f.grid();
    cplx acc(0, 0), a1(0, 0), a2(0, 0);
    for (int i1 = 0; i1 < g.n1(); ++i1) {
        double k1 = g.xi1_of(i1);
        cplx ph1 = std::exp(cplx(0.0, k1 * x1));
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            double k2 = g.xi2_of(i2);
            cplx term = f.at(i1, i2) * ph1 * std::exp(cplx(0.0, k2 * x2));
            acc += term;
            if (g1)
                a1 += cplx(0.0, k1) * term;
            if (g2)
                a2 += cplx(0.0, k2) * term;
        }
    }
    if (g1)
        *g1 = a1;
    if (g2)
        *g2 = a2;
    return acc;
}

}  // namespace

MapSamples inverse_map_samples(const DiffeoPack& pack) {
    const TorusGrid& g = pack.grid;
    FourierField t1 = pack.has_second_stage ? pack.chi_tilde1 : FourierField(g);
    FourierField t2 = pack.has_second_stage ? pack.chi_tilde2 : pack.d_periodic;
    MapSamples s;
    s.y1.resize(g.size());
    s.y2.resize(g.size());
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            size_t ix = static_cast<size_t>(i1) * g.n2() + i2;
            double y1 = g.x1(i1), y2 = g.x2(i2);
            double x1 = y1, x2 = y2;
            for (int it = 0; it < 50; ++it) {
                cplx g11, g12, g21, g22;
                cplx v1 = eval_field_at(t1, x1, x2, &g11, &g12);
                cplx v2 = eval_field_at(t2, x1, x2, &g21, &g22);
                double f1 = x1 + v1.real() - y1;
                double f2 = x2 + v2.real() - y2;
                double J11 = 1.0 + g11.real(), J12 = g12.real();
                double J21 = g21.real(), J22 = 1.0 + g22.real();
                double det = J11 * J22 - J12 * J21;
                double dx1s = (J22 * f1 - J12 * f2) / det;
                double dx2s = (-J21 * f1 + J11 * f2) / det;
                x1 -= dx1s;
                x2 -= dx2s;
                if (std::abs(dx1s) + std::abs(dx2s) < 1e-13)
                    break;
            }
            s.y1[ix] = x1;
            s.y2[ix] = x2;
        }
    return s;
}

FourierField paracomposition(const MapSamples& chi, const FourierField& f, int N) {
    if (N < 1)
        throw Error("paracomposition: N must be >= 1");
    const TorusGrid& g = f.grid();
    const int n1 = g.n1(), n2 = g.n2();
    const size_t np = chi.y1.size();
    if (np != static_cast<size_t>(g.size()))
        throw Error("paracomposition: sample count mismatch");

    // phase tables e^{i k1 y1}, e^{i k2 y2} per point
    std::vector<cplx> ph1(np * n1), ph2(np * n2);
    for (size_t p = 0; p < np; ++p) {
        cplx w1 = std::exp(cplx(0.0, chi.y1[p]));
        cplx acc(1, 0);
        for (int k = 0; k <= n1 / 2; ++k) {
            if (k < n1 / 2)
                ph1[p * n1 + g.i1_of(k)] = acc;
            if (k > 0)
                ph1[p * n1 + g.i1_of(-k)] = std::conj(acc);
            acc *= w1;
        }
        cplx w2 = std::exp(cplx(0.0, chi.y2[p] / g.ell()));
        acc = cplx(1, 0);
        for (int k = 0; k <= n2 / 2; ++k) {
            if (k < n2 / 2 || n2 == 1)
                ph2[p * n2 + g.i2_of(k)] = acc;
            if (k > 0 && n2 > 1)
                ph2[p * n2 + g.i2_of(-k)] = std::conj(acc);
            acc *= w2;
        }
    }

    FourierField out(g);
    const int kmax = lp_max_block(g);
    for (int j = 0; j <= kmax; ++j) {
        FourierField bl = lp_block(f, j);
        // gather nonzero modes
        std::vector<std::pair<int, cplx>> modes;  // (flat storage index, coef)
        for (int i = 0; i < g.size(); ++i)
            if (bl.coeffs()[i] != cplx(0, 0))
                modes.emplace_back(i, bl.coeffs()[i]);
        if (modes.empty())
            continue;
        std::vector<double> comp(np);
        for (size_t p = 0; p < np; ++p) {
            cplx acc(0, 0);
            for (auto& [flat, c] : modes) {
                int i1 = flat / n2, i2 = flat % n2;
                acc += c * ph1[p * n1 + i1] * ph2[p * n2 + i2];
            }
            comp[p] = acc.real();
        }
        FourierField gj = forward_transform(g, comp);
        // sum_{|k-j|<=N} Delta_k = phi_{j+N} - phi_{max(0,j-N)-1}
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                double w = std::sqrt(1.0 + std::pow(g.xi1_of(i1), 2) +
                                     std::pow(g.xi2_of(i2), 2));
                double filt = lp_phi_k(j + N, w) - lp_phi_k(std::max(0, j - N) - 1, w);
                out.at(i1, i2) += filt * gj.at(i1, i2);
            }
    }
    return out;
}

ParacompositionSensitivity paracomposition_sensitivity(const MapSamples& chi,
                                                       const FourierField& f, int N) {
    FourierField a = paracomposition(chi, f, N);
    FourierField b = paracomposition(chi, f, N + 1);
    b -= a;
    ParacompositionSensitivity s;
    double fn = sobolev_norm(f, 0.0);
    s.drift = sobolev_norm(b, 0.0) / (fn > 0 ? fn : 1.0);
    return s;
}

// --- symbol decomposition ---------------------------------------------------------------

namespace {

// Fornberg finite-difference weights for derivatives 0..m at x0 on nodes x.
// weights[d][i], d <= m.
std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& x,
                                                  int m) {
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<std::vector<double>>> d(
        m + 1, std::vector<std::vector<double>>(n + 1, std::vector<double>(n + 1, 0.0)));
    d[0][0][0] = 1.0;
    double c1 = 1.0;
    for (int nn = 1; nn <= n; ++nn) {
        double c2 = 1.0;
        for (int v = 0; v < nn; ++v) {
            double c3 = x[nn] - x[v];
            c2 *= c3;
            for (int k = 0; k <= std::min(nn, m); ++k) {
                double prev = k > 0 ? d[k - 1][nn - 1][v] : 0.0;
                d[k][nn][v] = ((x[nn] - x0) * d[k][nn - 1][v] - k * prev) / c3;
            }
        }
        for (int k = 0; k <= std::min(nn, m); ++k) {
            double prev = k > 0 ? d[k - 1][nn - 1][nn - 1] : 0.0;
            d[k][nn][nn] = c1 / c2 * (k * prev - (x[nn - 1] - x0) * d[k][nn - 1][nn - 1]);
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> w(m + 1, std::vector<double>(n + 1));
    for (int k = 0; k <= m; ++k)
        for (int i = 0; i <= n; ++i)
            w[k][i] = d[k][n][i];
    return w;
}

// truncated Taylor polynomial arithmetic to order ORD
constexpr int ORD = 7;
using Poly = std::array<cplx, ORD>;

Poly pmul(const Poly& a, const Poly& b) {
    Poly r{};
    for (int i = 0; i < ORD; ++i)
        for (int j = 0; i + j < ORD; ++j)
            r[i + j] += a[i] * b[j];
    return r;
}

Poly pcompose(const Poly& outer, const Poly& inner) {
    // inner must have zero constant term
    Poly r{};
    r[0] = outer[0];
    Poly pw{};
    pw[0] = 1.0;
    for (int k = 1; k < ORD; ++k) {
        pw = pmul(pw, inner);
        for (int i = 0; i < ORD; ++i)
            r[i] += outer[k] * pw[i];
    }
    return r;
}

double cinf_step(double u) { return smoothstep_cinf(u); }

double cone_cutoff(double w1, double w2, double c) {
    if (w1 == 0.0)
        return 1.0;
    double t = std::abs(w2) / std::abs(w1);
    if (t >= c)
        return 1.0;
    if (t <= 0.5 * c)
        return 0.0;
    return cinf_step((t - 0.5 * c) / (0.5 * c));
}

}  // namespace

SymbolDecomposition symbol_decompose(const HomogeneousComponent& S, double nu, double cone_c) {
    const TorusGrid& g = S.grid();
    const DirectionMesh& mesh = S.mesh();
    if (mesh.dim() != 2)
        throw Error("symbol_decompose: needs a 2-d direction mesh");
    const int nd = mesh.size(), N = g.size();
    const int m = static_cast<int>(std::lround(-S.degree()));
    if (m < 0 || m > 2 || std::abs(S.degree() + m) > 1e-12)
        throw Error("symbol_decompose: degree must be 0, -1 or -2");

    // xi2 -> -xi2 symmetry check
    {
        double mx = S.max_abs(), worst = 0.0;
        for (int j = 0; j < nd; ++j) {
            int jr = mesh.reflect2(j);
            for (int ix = 0; ix < N; ++ix)
                worst = std::max(worst, std::abs(S.at(j, ix) - S.at(jr, ix)));
        }
        if (worst > 1e-8 * (mx + 1e-30))
            throw Error("symbol_decompose: xi2-symmetry violation, defect " +
                        format_double(worst));
    }

    // theta-derivatives of the plane data at theta = pi/2 from a local stencil
    const int jc = nd / 4;  // theta = pi/2
    const int half = 6;
    std::vector<double> xs(2 * half + 1);
    for (int s = -half; s <= half; ++s)
        xs[s + half] = s * (2.0 * PI / nd);
    auto wts = fornberg_weights(0.0, xs, 6);

    // F(t) = (1+t^2)^{deg/2} G(tau(t)), tau(t) = -atan(t)
    Poly tau{};  // -t + t^3/3 - t^5/5
    tau[1] = -1.0;
    tau[3] = 1.0 / 3.0;
    tau[5] = -1.0 / 5.0;
    Poly rad{};  // (1+t^2)^{deg/2}
    {
        double e = S.degree() / 2.0;
        rad[0] = 1.0;
        rad[2] = e;
        rad[4] = e * (e - 1.0) / 2.0;
        rad[6] = e * (e - 1.0) * (e - 2.0) / 6.0;
    }

    SymbolDecomposition out;
    std::vector<std::vector<cplx>> F(7, std::vector<cplx>(N));  // Taylor coefficients F_j(x)
    for (int ix = 0; ix < N; ++ix) {
        Poly G{};
        double fact = 1.0;
        for (int k = 0; k <= 6; ++k) {
            cplx gd(0, 0);
            for (int s = -half; s <= half; ++s)
                gd += wts[k][s + half] * S.at((jc + s + nd) % nd, ix);
            if (k > 0)
                fact *= k;
            G[k] = gd / fact;
        }
        Poly Ft = pmul(rad, pcompose(G, tau));
        for (int j = 0; j <= 6; ++j)
            F[j][ix] = Ft[j];
    }

    for (int j = 0; j <= 4; ++j) {
        std::vector<cplx> sj(N);
        cplx fac = std::pow(I / nu, j);
        for (int ix = 0; ix < N; ++ix)
            sj[ix] = F[j][ix] * fac;
        out.S[j] = field_from_complex(g, std::move(sj));
    }

    if (m != 0)
        return out;
    out.has_q = true;

    // r(x, t), t = xi1/|xi2|, from the Taylor remainder; near t = 0 use the
    // series tail to avoid the 0/0 evaluation
    HomogeneousComponent rcomp(g, mesh, 0.0);
    for (int j = 0; j < nd; ++j) {
        double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
        if (w2 == 0.0)
            continue;
        double t = w1 / std::abs(w2);
        for (int ix = 0; ix < N; ++ix) {
            cplx r;
            if (std::abs(t) < 0.15) {
                r = -I * (F[5][ix] + F[6][ix] * t);
            } else {
                cplx sv = S.at(j, ix);
                cplx taylor(0, 0);
                double tp = 1.0;
                for (int p = 0; p <= 4; ++p) {
                    taylor += F[p][ix] * tp;
                    tp *= t;
                }
                cplx it5 = std::pow(cplx(0.0, t), 5);
                r = (sv - taylor) / it5;
            }
            rcomp.at(j, ix) = r;
        }
    }

    // assemble the q_k and w tables (J_c-cut); S_j values in physical space
    std::array<std::vector<cplx>, 5> sv;
    for (int j = 0; j <= 4; ++j)
        sv[j] = out.S[j].values_complex();
    std::vector<cplx> rv(static_cast<size_t>(nd) * N);
    for (int j = 0; j < nd; ++j)
        for (int ix = 0; ix < N; ++ix)
            rv[static_cast<size_t>(j) * N + ix] = rcomp.at(j, ix);

    HomogeneousComponent q1m1(g, mesh, -1.0), q1m2(g, mesh, -2.0), q1m3(g, mesh, -3.0);
    HomogeneousComponent q2m1(g, mesh, -1.0), q2m2(g, mesh, -2.0);
    HomogeneousComponent q3m1(g, mesh, -1.0), q4m1(g, mesh, -1.0);
    HomogeneousComponent wm2(g, mesh, -2.0);
    for (int j = 0; j < nd; ++j) {
        double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
        double jc_cut = cone_cutoff(w1, w2, cone_c);
        if (jc_cut == 0.0 || w2 == 0.0)
            continue;
        double aw2 = std::abs(w2);
        cplx ix1(0.0, w1);  // i xi1 on the unit circle
        for (int ix = 0; ix < N; ++ix) {
            cplx s1 = sv[1][ix], s2 = sv[2][ix], s3 = sv[3][ix], s4 = sv[4][ix];
            cplx r = rv[static_cast<size_t>(j) * N + ix];
            q1m1.at(j, ix) =
                jc_cut * (-s1 / aw2 + nu * s2 * ix1 / (aw2 * aw2) -
                          nu * nu * s3 * ix1 * ix1 / (aw2 * aw2 * aw2) +
                          nu * nu * nu * s4 * ix1 * ix1 * ix1 / (aw2 * aw2 * aw2 * aw2));
            q1m2.at(j, ix) = jc_cut * (nu * s3 / (aw2 * aw2) -
                                       nu * nu * s4 * ix1 / (aw2 * aw2 * aw2));
            q1m3.at(j, ix) = jc_cut * r *
                             (aw2 * aw2 + nu * w1 * w1 * aw2 + nu * nu * w1 * w1 * w1 * w1) /
                             (nu * nu * nu * aw2 * aw2 * aw2 * aw2 * aw2);
            q2m1.at(j, ix) = jc_cut * (-s2 / aw2);
            q2m2.at(j, ix) = jc_cut * (nu * s4 / (aw2 * aw2));
            q3m1.at(j, ix) = jc_cut * (-s3 / aw2);
            q4m1.at(j, ix) = jc_cut * (-s4 / aw2);
            wm2.at(j, ix) = jc_cut * (-r / (nu * nu * nu * aw2 * aw2));
        }
    }
    out.q[0] = SymbolExpansion({q1m1, q1m2, q1m3});
    out.q[1] = SymbolExpansion({q2m1, q2m2});
    out.q[2] = SymbolExpansion({q3m1});
    out.q[3] = SymbolExpansion({q4m1});
    out.w_residual = SymbolExpansion({wm2});
    return out;
}

// --- coefficient cascade ------------------------------------------------------------------

namespace {

// delta'_k = sum_{l+m+n=k} c_l (-dx1)^m a_n, with l restricted to < k when
// skip_top is set (that term is the 2 nu dx1 c_k side of the equation).
FourierField delta_prime(const std::array<FourierField, 5>& c,
                         const std::array<std::array<FourierField, 5>, 5>& da, int k,
                         bool skip_top) {
    FourierField acc(c[0].grid());
    for (int l = 0; l <= k; ++l) {
        if (skip_top && l == k)
            continue;
        for (int mm = 0; l + mm <= k; ++mm) {
            int n = k - l - mm;
            if (n > 4 || mm > 4)
                continue;
            FourierField term = multiply(c[l], da[n][mm]);
            if (mm % 2 == 1)
                term *= -1.0;
            acc += term;
        }
    }
    return acc;
}

}  // namespace

CascadeResult coefficient_cascade(const std::array<FourierField, 5>& a, double nu, double ell) {
    const TorusGrid& g = a[0].grid();
    const int n2 = g.n2();
    if (!(nu > 0.0))
        throw Error("coefficient_cascade: nu must be positive");
    CascadeResult res;
    res.a = a;
    res.nu = nu;

    double scale = 0.0;
    for (const auto& f : a)
        scale = std::max(scale, max_abs_complex(f));

    // a0 must be purely imaginary pointwise
    {
        double worst = 0.0;
        for (const auto& v : a[0].values_complex())
            worst = std::max(worst, std::abs(v.real()));
        if (worst > 1e-8 * (scale + 1e-30))
            throw Error("coefficient_cascade: a0 not purely imaginary, defect " +
                        format_double(worst));
    }

    // x1-derivative table of the inputs
    std::array<std::array<FourierField, 5>, 5> da;
    for (int n = 0; n <= 4; ++n) {
        da[n][0] = a[n];
        for (int mm = 1; mm <= 4; ++mm)
            da[n][mm] = dx1(da[n][mm - 1]);
    }

    double defect = 0.0;
    res.gamma_phase = x1_primitive(a[0], &defect);
    res.primitive_defect = defect;

    std::vector<cplx> gam = res.gamma_phase.values_complex();
    std::vector<cplx> eplus(gam.size()), eminus(gam.size());
    for (size_t i = 0; i < gam.size(); ++i) {
        eplus[i] = std::exp(gam[i] / (2.0 * nu));
        eminus[i] = std::exp(-gam[i] / (2.0 * nu));
    }
    FourierField Ep = field_from_complex(g, eplus), Em = field_from_complex(g, eminus);

    // kappa and beta(x2)
    FourierField ksrc = a[1];
    ksrc -= cscale(multiply(a[0], a[0]), 1.0 / (4.0 * nu));
    res.kappa = ksrc.atk(0, 0);
    std::vector<cplx> beta(n2);
    {
        std::vector<cplx> col(n2);
        for (int i2 = 0; i2 < n2; ++i2)
            col[i2] = ksrc.at(0, i2);
        col[0] -= res.kappa;
        std::vector<cplx> phys(n2);
        fft::inverse1d(n2, col.data(), phys.data());
        for (int i2 = 0; i2 < n2; ++i2)
            beta[i2] = 2.0 * PI * phys[i2];
    }
    double bdef = 0.0;
    std::vector<cplx> Bprim = primitive_1d(beta, ell, &bdef);
    res.primitive_defect = std::max(res.primitive_defect, bdef);
    res.C0.resize(n2);
    for (int i2 = 0; i2 < n2; ++i2)
        res.C0[i2] = std::exp(-Bprim[i2] / (2.0 * I * PI));

    auto from_c0 = [&](const std::vector<cplx>& cx2) {
        std::vector<cplx> vals(g.size());
        for (int i1 = 0; i1 < g.n1(); ++i1)
            for (int i2 = 0; i2 < n2; ++i2)
                vals[static_cast<size_t>(i1) * n2 + i2] =
                    cx2[i2] * eplus[static_cast<size_t>(i1) * n2 + i2];
        return field_from_complex(g, std::move(vals));
    };
    res.c[0] = from_c0(res.C0);

    auto solve_transport = [&](const FourierField& G) {
        // c solves 2 nu dx1 c - a0 c = G with c(0, x2) = 0
        double d = 0.0;
        FourierField p = x1_primitive(multiply(Em, G), &d, 1e-5);
        res.primitive_defect = std::max(res.primitive_defect, d);
        return cscale(multiply(Ep, p), 1.0 / (2.0 * nu));
    };

    auto G_of = [&](int k, cplx kprime) {
        // G_k = i d2 c_{k-1} - nu d1^2 c_{k-1} - kappa c_{k-1} - kappa' c_{k-3}
        //       + sum_{l+m+n=k, l<k} c_l (-d1)^m a_n
        FourierField Gk = cscale(dx2(res.c[k - 1]), I);
        Gk -= cscale(dx1(dx1(res.c[k - 1])), nu);
        Gk -= cscale(res.c[k - 1], res.kappa);
        if (k >= 3)
            Gk -= cscale(res.c[k - 3], kprime);
        Gk += delta_prime(res.c, da, k, true);
        return Gk;
    };

    res.c[1] = solve_transport(G_of(1, 0.0));
    res.c[2] = solve_transport(G_of(2, 0.0));  // the Gamma_2 part; C_2 comes next

    // kappa' and C_2 from the k=3 solvability condition
    {
        FourierField G3_part = G_of(3, 0.0);
        FourierField emg = multiply(Em, G3_part);
        std::vector<cplx> F2(n2);
        {
            std::vector<cplx> col(n2);
            for (int i2 = 0; i2 < n2; ++i2)
                col[i2] = emg.at(0, i2);
            std::vector<cplx> phys(n2);
            fft::inverse1d(n2, col.data(), phys.data());
            for (int i2 = 0; i2 < n2; ++i2)
                F2[i2] = 2.0 * PI * phys[i2];
        }
        cplx kp(0, 0);
        for (int i2 = 0; i2 < n2; ++i2)
            kp += F2[i2] / res.C0[i2];
        kp /= static_cast<double>(n2);
        kp /= 2.0 * PI;
        res.kappa_prime = kp;

        // g' = (2 pi kappa' - F2/C0) / (2 i pi), g(0) = 1, C2 = C0 g
        std::vector<cplx> gp(n2);
        for (int i2 = 0; i2 < n2; ++i2)
            gp[i2] = (2.0 * PI * kp - F2[i2] / res.C0[i2]) / (2.0 * I * PI);
        double d2 = 0.0;
        std::vector<cplx> gprim = primitive_1d(gp, ell, &d2);
        res.primitive_defect = std::max(res.primitive_defect, d2);
        std::vector<cplx> C2(n2);
        for (int i2 = 0; i2 < n2; ++i2)
            C2[i2] = res.C0[i2] * (1.0 + gprim[i2]);
        res.c[2] += from_c0(C2);
    }

    res.c[3] = solve_transport(G_of(3, res.kappa_prime));
    res.c[4] = solve_transport(G_of(4, res.kappa_prime));

    res.resubstitution_residual = cascade_residuals(res);
    return res;
}

std::array<double, 5> cascade_residuals(const CascadeResult& r) {
    const double nu = r.nu;
    std::array<std::array<FourierField, 5>, 5> da;
    for (int n = 0; n <= 4; ++n) {
        da[n][0] = r.a[n];
        for (int mm = 1; mm <= 4; ++mm)
            da[n][mm] = dx1(da[n][mm - 1]);
    }
    std::array<double, 5> out{};
    for (int k = 0; k <= 4; ++k) {
        FourierField delta = cscale(dx1(r.c[k]), 2.0 * nu);
        if (k >= 1) {
            delta -= cscale(dx2(r.c[k - 1]), I);
            delta += cscale(dx1(dx1(r.c[k - 1])), nu);
            delta += cscale(r.c[k - 1], r.kappa);
        }
        if (k >= 3)
            delta += cscale(r.c[k - 3], r.kappa_prime);
        FourierField dp = delta_prime(r.c, da, k, false);
        delta -= dp;
        out[k] = sobolev_norm(delta, 0.0);
    }
    return out;
}

std::string CascadeResult::to_json() const {
    std::string s = "{";
    s += "\"nu\":" + format_double(nu);
    s += ",\"kappa\":" + format_double(kappa.real());
    s += ",\"kappa_im\":" + format_double(kappa.imag());
    s += ",\"kappa_prime\":" + format_double(kappa_prime.real());
    s += ",\"kappa_prime_im\":" + format_double(kappa_prime.imag());
    s += ",\"primitive_defect\":" + format_double(primitive_defect);
    s += ",\"resubstitution_residual\":[";
    for (int k = 0; k <= 4; ++k)
        s += (k ? "," : "") + format_double(resubstitution_residual[k]);
    s += "]}";
    return s;
}

}  // namespace dw
