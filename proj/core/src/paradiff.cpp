#include "dw/paradiff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dw {

namespace {
constexpr cplx I{0.0, 1.0};

FourierField scale_field(const FourierField& f, cplx s) {
    FourierField g = f;
    for (auto& c : g.coeffs())
        c *= s;
    return g;
}
}  // namespace

SeparableSymbol SeparableSymbol::from_field(const FourierField& g, double degree, int q) {
    SeparableSymbol s;
    s.terms.push_back({degree, q, g});
    return s;
}

SeparableSymbol& SeparableSymbol::consolidate() {
    std::map<std::pair<double, int>, FourierField> acc;
    for (auto& t : terms) {
        auto key = std::make_pair(t.degree, t.q);
        auto it = acc.find(key);
        if (it == acc.end())
            acc.emplace(key, std::move(t.g));
        else
            it->second += t.g;
    }
    terms.clear();
    for (auto& [key, g] : acc) {
        double m = 0.0;
        for (const auto& c : g.coeffs())
            m = std::max(m, std::abs(c));
        if (m == 0.0)
            continue;
        terms.push_back({key.first, key.second, std::move(g)});
    }
    return *this;
}

SeparableSymbol SeparableSymbol::dxi1() const {
    SeparableSymbol r;
    for (const auto& t : terms) {
        r.terms.push_back({t.degree - 1, t.q + 1, scale_field(t.g, 0.5 * (t.degree - t.q))});
        r.terms.push_back({t.degree - 1, t.q - 1, scale_field(t.g, 0.5 * (t.degree + t.q))});
    }
    return r.consolidate(), r;
}

SeparableSymbol SeparableSymbol::dxi2() const {
    SeparableSymbol r;
    for (const auto& t : terms) {
        r.terms.push_back({t.degree - 1, t.q + 1, scale_field(t.g, -0.5 * I * (t.degree - t.q))});
        r.terms.push_back({t.degree - 1, t.q - 1, scale_field(t.g, 0.5 * I * (t.degree + t.q))});
    }
    return r.consolidate(), r;
}

SeparableSymbol SeparableSymbol::dx1() const {
    SeparableSymbol r = *this;
    for (auto& t : r.terms)
        t.g = dw::dx1(t.g);
    return r;
}

SeparableSymbol SeparableSymbol::dx2() const {
    SeparableSymbol r = *this;
    for (auto& t : r.terms)
        t.g = dw::dx2(t.g);
    return r;
}

SeparableSymbol operator*(const SeparableSymbol& a, const SeparableSymbol& b) {
    SeparableSymbol r;
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms)
            r.terms.push_back({ta.degree + tb.degree, ta.q + tb.q, multiply(ta.g, tb.g)});
    r.consolidate();
    return r;
}

SeparableSymbol& SeparableSymbol::operator+=(const SeparableSymbol& o) {
    for (const auto& t : o.terms)
        terms.push_back(t);
    consolidate();
    return *this;
}

cplx SeparableSymbol::eval(int ix, double xi1, double xi2) const {
    double r = std::hypot(xi1, xi2);
    double th = std::atan2(xi2, xi1);
    cplx acc(0, 0);
    for (const auto& t : terms) {
        std::vector<cplx> v = t.g.values_complex();
        acc += std::pow(r, t.degree) * std::exp(cplx(0.0, t.q * th)) * v[ix];
    }
    return acc;
}

SeparableSymbol sharp_compose(const SeparableSymbol& a, const SeparableSymbol& b, double rho) {
    if (rho < 1.0)
        throw Error("sharp_compose: rho must be >= 1");
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i)
            f *= i;
        return f;
    };
    SeparableSymbol out;
    for (int n = 0; n < rho; ++n) {
        for (int a1 = 0; a1 <= n; ++a1) {
            int a2 = n - a1;
            SeparableSymbol da = a;
            for (int i = 0; i < a1; ++i)
                da = da.dxi1();
            for (int i = 0; i < a2; ++i)
                da = da.dxi2();
            SeparableSymbol db = b;
            for (int i = 0; i < a1; ++i)
                db = db.dx1();
            for (int i = 0; i < a2; ++i)
                db = db.dx2();
            SeparableSymbol term = da * db;
            cplx coef = std::pow(-I, n) / (fact(a1) * fact(a2));
            for (auto& t : term.terms)
                t.g = scale_field(t.g, coef);
            out += term;
        }
    }
    return out;
}

SeparableSymbol to_separable(const SymbolExpansion& a, double rel_tol) {
    SeparableSymbol out;
    for (const auto& comp : a.components()) {
        const TorusGrid& g = comp.grid();
        const int nd = comp.mesh().size(), N = g.size();
        if (comp.mesh().dim() == 1)
            throw Error("to_separable: 1-d direction mesh not supported here");
        // angular FFT per grid point
        std::vector<std::vector<cplx>> planes(nd, std::vector<cplx>(N));
        {
            std::vector<cplx> line(nd), hat(nd);
            for (int ix = 0; ix < N; ++ix) {
                for (int j = 0; j < nd; ++j)
                    line[j] = comp.at(j, ix);
                fft::forward1d(nd, line.data(), hat.data());
                for (int j = 0; j < nd; ++j)
                    planes[j][ix] = hat[j];
            }
        }
        double gmax = 0.0;
        std::vector<double> pmax(nd, 0.0);
        for (int j = 0; j < nd; ++j) {
            for (const auto& c : planes[j])
                pmax[j] = std::max(pmax[j], std::abs(c));
            gmax = std::max(gmax, pmax[j]);
        }
        for (int j = 0; j < nd; ++j) {
            if (pmax[j] <= rel_tol * gmax)
                continue;
            int q = j <= nd / 2 - 1 ? j : j - nd;
            FourierField f(g);
            std::vector<cplx> buf = planes[j];
            fft::forward(g.n1(), g.n2(), buf);
            f.coeffs() = std::move(buf);
            out.terms.push_back({comp.degree(), q, std::move(f)});
        }
    }
    return out;
}

// --- quantization engine -------------------------------------------------------

FourierField apply_paradiff(const SeparableSymbol& a, const FourierField& u,
                            const CutoffPair& cut, double rel_cut) {
    const TorusGrid& g = u.grid();
    for (const auto& t : a.terms)
        if (t.g.grid() != g)
            throw Error("apply_paradiff: symbol/argument grid mismatch");
    const int n1 = g.n1(), n2 = g.n2();
    const int nterms = static_cast<int>(a.terms.size());

    // active eta modes
    struct Eta {
        int k1, k2;
        double norm, theta;
        cplx w;  // psi(|eta|) * u^(eta)
        double wabs;
    };
    std::vector<Eta> etas;
    double wmax = 0.0, eta_min = 1e300, eta_max = 0.0;
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2) {
            cplx uc = u.at(i1, i2);
            if (uc == cplx(0, 0))
                continue;
            double x1 = g.xi1_of(i1), x2 = g.xi2_of(i2);
            double nrm = std::hypot(x1, x2);
            double ps = cut.psi(nrm);
            if (ps == 0.0)
                continue;
            Eta e{g.k1_of(i1), g.k2_of(i2), nrm, std::atan2(x2, x1), ps * uc, std::abs(ps * uc)};
            wmax = std::max(wmax, e.wabs);
            eta_min = std::min(eta_min, nrm);
            eta_max = std::max(eta_max, nrm);
            etas.push_back(e);
        }
    FourierField out(g);
    if (etas.empty() || nterms == 0)
        return out;

    // reference |eta|^degree scale per term (for the skip bound)
    std::vector<double> degscale(nterms);
    for (int t = 0; t < nterms; ++t) {
        double d = a.terms[t].degree;
        degscale[t] = std::max(std::pow(eta_min, d), std::pow(eta_max, d));
    }

    // theta support: union over terms of nonzero symbol coefficients
    struct Theta {
        int k1, k2;
        double norm;
        double rowmax;  // max_t |g_t^(theta)| * degscale_t
    };
    std::vector<Theta> thetas;
    std::vector<std::vector<cplx>> rows;  // rows[t][theta_index]
    {
        std::vector<size_t> index_of(static_cast<size_t>(n1) * n2, SIZE_MAX);
        for (int t = 0; t < nterms; ++t) {
            const auto& c = a.terms[t].g.coeffs();
            for (int i1 = 0; i1 < n1; ++i1)
                for (int i2 = 0; i2 < n2; ++i2) {
                    size_t flat = static_cast<size_t>(i1) * n2 + i2;
                    if (c[flat] == cplx(0, 0))
                        continue;
                    if (index_of[flat] == SIZE_MAX) {
                        index_of[flat] = thetas.size();
                        double x1 = g.xi1_of(i1), x2 = g.xi2_of(i2);
                        thetas.push_back({g.k1_of(i1), g.k2_of(i2), std::hypot(x1, x2), 0.0});
                    }
                }
        }
        rows.assign(nterms, std::vector<cplx>(thetas.size(), cplx(0, 0)));
        for (int t = 0; t < nterms; ++t) {
            const auto& c = a.terms[t].g.coeffs();
            for (int i1 = 0; i1 < n1; ++i1)
                for (int i2 = 0; i2 < n2; ++i2) {
                    size_t flat = static_cast<size_t>(i1) * n2 + i2;
                    if (index_of[flat] == SIZE_MAX)
                        continue;
                    rows[t][index_of[flat]] = c[flat];
                }
        }
        for (size_t s = 0; s < thetas.size(); ++s) {
            double m = 0.0;
            for (int t = 0; t < nterms; ++t)
                m = std::max(m, std::abs(rows[t][s]) * degscale[t]);
            thetas[s].rowmax = m;
        }
        // sort by decreasing rowmax so the eta loop can stop early
        std::vector<size_t> perm(thetas.size());
        std::iota(perm.begin(), perm.end(), size_t{0});
        std::sort(perm.begin(), perm.end(),
                  [&](size_t x, size_t y) { return thetas[x].rowmax > thetas[y].rowmax; });
        std::vector<Theta> ts(thetas.size());
        std::vector<std::vector<cplx>> rs(nterms, std::vector<cplx>(thetas.size()));
        for (size_t s = 0; s < perm.size(); ++s) {
            ts[s] = thetas[perm[s]];
            for (int t = 0; t < nterms; ++t)
                rs[t][s] = rows[t][perm[s]];
        }
        thetas = std::move(ts);
        rows = std::move(rs);
    }
    if (thetas.empty())
        return out;

    const double cut_abs = rel_cut * thetas[0].rowmax * wmax;

    int nthreads = 1;
#ifdef _OPENMP
    nthreads = omp_get_max_threads();
#endif
    std::vector<std::vector<cplx>> partial(nthreads,
                                           std::vector<cplx>(static_cast<size_t>(n1) * n2,
                                                             cplx(0, 0)));

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long ei = 0; ei < static_cast<long>(etas.size()); ++ei) {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        const Eta& e = etas[ei];
        std::vector<cplx>& buf = partial[tid];
        // per-term |eta|^m e^{i q theta_eta}
        std::vector<cplx> termfac(nterms);
        for (int t = 0; t < nterms; ++t) {
            double sc = std::pow(e.norm, a.terms[t].degree);
            termfac[t] = sc * std::exp(cplx(0.0, a.terms[t].q * e.theta));
        }
        const double lim = cut.eps2 * e.norm;
        for (size_t s = 0; s < thetas.size(); ++s) {
            const Theta& th = thetas[s];
            if (th.rowmax * e.wabs < cut_abs)
                break;  // sorted: everything after is smaller
            if (th.norm > lim)
                continue;
            double chi = cut.chi(th.norm, e.norm);
            if (chi == 0.0)
                continue;
            int k1o = e.k1 + th.k1, k2o = e.k2 + th.k2;
            if (!g.holds(k1o, k2o))
                continue;
            // the Nyquist rows have no Hermitian partner slot; contributions
            // there would break reality/parity transport one-sidedly
            if (k1o == -n1 / 2 || (n2 > 1 && k2o == -n2 / 2))
                continue;
            cplx acc(0, 0);
            for (int t = 0; t < nterms; ++t)
                acc += rows[t][s] * termfac[t];
            buf[static_cast<size_t>(g.i1_of(k1o)) * n2 + g.i2_of(k2o)] += chi * acc * e.w;
        }
    }
    for (int t = 0; t < nthreads; ++t)
        for (size_t i = 0; i < partial[t].size(); ++i)
            out.coeffs()[i] += partial[t][i];
    return out;
}

FourierField apply_paradiff(const SymbolExpansion& a, const FourierField& u,
                            const CutoffPair& cut, double rel_cut) {
    return apply_paradiff(to_separable(a), u, cut, rel_cut);
}

FourierField paraproduct(const FourierField& b, const FourierField& u, const CutoffPair& cut) {
    return apply_paradiff(SeparableSymbol::from_field(b), u, cut);
}

FourierField fourier_multiplier(const std::function<double(double, double)>& p,
                                const FourierField& u) {
    const TorusGrid& g = u.grid();
    FourierField out = u;
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            out.at(i1, i2) *= p(g.xi1_of(i1), g.xi2_of(i2));
    return out;
}

FourierField fourier_multiplier(const std::vector<cplx>& table, const FourierField& u) {
    const TorusGrid& g = u.grid();
    if (table.size() != static_cast<size_t>(g.size()))
        throw Error("fourier_multiplier: table size mismatch");
    FourierField out = u;
    for (int i = 0; i < g.size(); ++i)
        out.coeffs()[i] *= table[i];
    return out;
}

// --- section 5.7 multipliers ------------------------------------------------------

double MultiplierBank::eta_profile(double t) {
    double a = std::abs(t);
    if (a <= 0.5)
        return 0.0;
    if (a >= 1.0)
        return 1.0;
    return smoothstep5((a - 0.5) / 0.5);
}

double MultiplierBank::J_profile(double s) {
    if (s <= 0.8)
        return 0.0;
    if (s >= 0.9)
        return 1.0;
    return smoothstep_cinf((s - 0.8) / 0.1);
}

MultiplierBank::MultiplierBank(const TorusGrid& grid) : grid_(grid) {
    const int n = grid.size();
    j0_.resize(n);
    jp_.resize(n);
    jm_.resize(n);
    for (int i1 = 0; i1 < grid.n1(); ++i1)
        for (int i2 = 0; i2 < grid.n2(); ++i2) {
            double x1 = grid.xi1_of(i1), x2 = grid.xi2_of(i2);
            double nrm = std::hypot(x1, x2);
            size_t ix = static_cast<size_t>(i1) * grid.n2() + i2;
            if (nrm == 0.0) {
                jp_[ix] = jm_[ix] = 0.0;
                j0_[ix] = 1.0;
                continue;
            }
            double p = J_profile((nrm + x2) / (2.0 * nrm));
            double m = J_profile((nrm - x2) / (2.0 * nrm));
            jp_[ix] = p;
            jm_[ix] = m;
            j0_[ix] = 1.0 - p - m;
        }
}

FourierField dx1_inverse(const FourierField& u, int k) {
    if (k < 0)
        throw Error("dx1_inverse: k must be >= 0");
    const TorusGrid& g = u.grid();
    FourierField out = u;
    for (int i1 = 0; i1 < g.n1(); ++i1) {
        double k1 = g.xi1_of(i1);
        cplx f;
        if (k1 == 0.0)
            f = 0.0;
        else
            f = MultiplierBank::eta_profile(k1) / std::pow(cplx(0.0, k1), k);
        for (int i2 = 0; i2 < g.n2(); ++i2)
            out.at(i1, i2) *= f;
    }
    return out;
}

FourierField dx1_zero(const FourierField& u) { return dx1_inverse(u, 0); }

// --- operator order probe ------------------------------------------------------------

ProbeResult operator_order_probe(const std::function<FourierField(const FourierField&)>& apply,
                                 const TorusGrid& grid, const std::vector<int>& bands,
                                 int trials, std::mt19937_64& rng) {
    if (bands.size() < 3)
        throw Error("operator_order_probe: need at least 3 bands");
    if (trials < 1)
        throw Error("operator_order_probe: trials must be >= 1");
    ProbeResult res;
    for (int k : bands) {
        double acc = 0.0;
        for (int t = 0; t < trials; ++t) {
            FourierField u = random_band_field(grid, k, rng);
            FourierField y = apply(u);
            double n = sobolev_norm(y, 0.0);
            acc += std::log2(std::max(n, 1e-300));
        }
        res.band_log.emplace_back(k, acc / trials);
    }
    const int n = static_cast<int>(res.band_log.size());
    double sx = 0, sy = 0;
    for (auto& [k, y] : res.band_log) {
        sx += k;
        sy += y;
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
    for (auto& [k, y] : res.band_log) {
        sxx += (k - mx) * (k - mx);
        sxy += (k - mx) * (y - my);
    }
    res.slope = sxy / sxx;
    double ss = 0;
    for (auto& [k, y] : res.band_log) {
        double r = y - (my + res.slope * (k - mx));
        ss += r * r;
    }
    double se = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
    res.halfwidth = 2.0 * se;
    return res;
}

}  // namespace dw
