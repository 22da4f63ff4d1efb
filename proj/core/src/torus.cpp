#include "dw/torus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dw {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

double bracket(double xi1, double xi2) { return std::sqrt(1.0 + xi1 * xi1 + xi2 * xi2); }

}  // namespace

TorusGrid::TorusGrid(int n1, int n2, double ell) : n1_(n1), n2_(n2), ell_(ell) {
    if (!is_pow2(n1) || !is_pow2(n2) || n1 < 2)
        throw Error("TorusGrid: n1, n2 must be powers of two (n1 >= 2)");
    if (!(ell > 0.0))
        throw Error("TorusGrid: ell must be positive");
}

std::string parity_name(Parity p) {
    switch (p) {
        case Parity::none: return "none";
        case Parity::ee: return "(e,e)";
        case Parity::oe: return "(o,e)";
        case Parity::eo: return "(e,o)";
        case Parity::oo: return "(o,o)";
    }
    return "?";
}

std::vector<double> FourierField::values() const {
    std::vector<cplx> buf(coef_);
    fft::inverse(grid_.n1(), grid_.n2(), buf);
    std::vector<double> out(buf.size());
    for (size_t i = 0; i < buf.size(); ++i)
        out[i] = buf[i].real();
    return out;
}

std::vector<cplx> FourierField::values_complex() const {
    std::vector<cplx> buf(coef_);
    fft::inverse(grid_.n1(), grid_.n2(), buf);
    return buf;
}

FourierField& FourierField::operator+=(const FourierField& o) {
    if (grid_ != o.grid_)
        throw Error("field add: grid mismatch");
    for (size_t i = 0; i < coef_.size(); ++i)
        coef_[i] += o.coef_[i];
    if (parity_ != o.parity_)
        parity_ = Parity::none;
    return *this;
}

FourierField& FourierField::operator-=(const FourierField& o) {
    if (grid_ != o.grid_)
        throw Error("field sub: grid mismatch");
    for (size_t i = 0; i < coef_.size(); ++i)
        coef_[i] -= o.coef_[i];
    if (parity_ != o.parity_)
        parity_ = Parity::none;
    return *this;
}

FourierField& FourierField::operator*=(double s) {
    for (auto& c : coef_)
        c *= s;
    return *this;
}

void FourierField::make_real() {
    const int n1 = grid_.n1(), n2 = grid_.n2();
    for (int i1 = 0; i1 < n1; ++i1) {
        int j1 = (n1 - i1) % n1;
        for (int i2 = 0; i2 < n2; ++i2) {
            int j2 = (n2 - i2) % n2;
            if (static_cast<size_t>(i1) * n2 + i2 > static_cast<size_t>(j1) * n2 + j2)
                continue;
            cplx a = at(i1, i2), b = at(j1, j2);
            cplx avg = 0.5 * (a + std::conj(b));
            at(i1, i2) = avg;
            at(j1, j2) = std::conj(avg);
        }
    }
}

FourierField forward_transform(const TorusGrid& grid, const std::vector<double>& samples) {
    if (static_cast<int>(samples.size()) != grid.size())
        throw Error("forward_transform: sample count does not match grid");
    std::vector<cplx> buf(samples.begin(), samples.end());
    fft::forward(grid.n1(), grid.n2(), buf);
    FourierField f(grid);
    f.coeffs() = std::move(buf);
    return f;
}

FourierField field_from(const TorusGrid& grid, const std::function<double(double, double)>& f) {
    std::vector<double> v(grid.size());
    for (int i1 = 0; i1 < grid.n1(); ++i1)
        for (int i2 = 0; i2 < grid.n2(); ++i2)
            v[static_cast<size_t>(i1) * grid.n2() + i2] = f(grid.x1(i1), grid.x2(i2));
    return forward_transform(grid, v);
}

namespace {

// Parity along one axis flips the sign of the conjugate-index coefficient.
// even: c(k) <- (c(k)+c(-k))/2 ; odd: c(k) <- (c(k)-c(-k))/2.
void project_axis(FourierField& f, int axis, bool odd) {
    const int n1 = f.grid().n1(), n2 = f.grid().n2();
    FourierField g = f;
    for (int i1 = 0; i1 < n1; ++i1) {
        for (int i2 = 0; i2 < n2; ++i2) {
            int j1 = axis == 0 ? (n1 - i1) % n1 : i1;
            int j2 = axis == 1 ? (n2 - i2) % n2 : i2;
            cplx refl = g.at(j1, j2);
            f.at(i1, i2) = 0.5 * (g.at(i1, i2) + (odd ? -refl : refl));
        }
    }
}

}  // namespace

FourierField enforce_parity(const FourierField& f, Parity p) {
    FourierField g = f;
    if (p == Parity::none) {
        g.set_parity(Parity::none);
        return g;
    }
    bool odd1 = (p == Parity::oe || p == Parity::oo);
    bool odd2 = (p == Parity::eo || p == Parity::oo);
    project_axis(g, 0, odd1);
    if (g.grid().dim() == 2)
        project_axis(g, 1, odd2);
    g.set_parity(p);
    return g;
}

double parity_defect(const FourierField& f, Parity p) {
    FourierField proj = enforce_parity(f, p);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < f.coeffs().size(); ++i) {
        num += std::norm(f.coeffs()[i] - proj.coeffs()[i]);
        den += std::norm(f.coeffs()[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

FourierField dx1(const FourierField& f) {
    FourierField g(f.grid());
    const TorusGrid& gr = f.grid();
    for (int i1 = 0; i1 < gr.n1(); ++i1) {
        double k = gr.xi1_of(i1);
        if (i1 == gr.n1() / 2)
            k = 0.0;  // Nyquist mode has no well-defined odd derivative
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            g.at(i1, i2) = cplx(0.0, k) * f.at(i1, i2);
    }
    return g;
}

FourierField dx2(const FourierField& f) {
    FourierField g(f.grid());
    const TorusGrid& gr = f.grid();
    for (int i1 = 0; i1 < gr.n1(); ++i1)
        for (int i2 = 0; i2 < gr.n2(); ++i2) {
            double k = gr.xi2_of(i2);
            if (i2 == gr.n2() / 2)
                k = 0.0;
            g.at(i1, i2) = cplx(0.0, k) * f.at(i1, i2);
        }
    return g;
}

FourierField laplacian(const FourierField& f) {
    FourierField g(f.grid());
    const TorusGrid& gr = f.grid();
    for (int i1 = 0; i1 < gr.n1(); ++i1)
        for (int i2 = 0; i2 < gr.n2(); ++i2) {
            double x1 = gr.xi1_of(i1), x2 = gr.xi2_of(i2);
            g.at(i1, i2) = -(x1 * x1 + x2 * x2) * f.at(i1, i2);
        }
    return g;
}

namespace {

Parity parity_product(Parity a, Parity b) {
    if (a == Parity::none || b == Parity::none)
        return Parity::none;
    auto odd1 = [](Parity p) { return p == Parity::oe || p == Parity::oo; };
    auto odd2 = [](Parity p) { return p == Parity::eo || p == Parity::oo; };
    bool o1 = odd1(a) != odd1(b);
    bool o2 = odd2(a) != odd2(b);
    if (o1)
        return o2 ? Parity::oo : Parity::oe;
    return o2 ? Parity::eo : Parity::ee;
}

}  // namespace

namespace {

// direct spectral convolution; worthwhile when both factors are sparse
FourierField multiply_sparse(const FourierField& a, const FourierField& b,
                             const std::vector<int>& nza, const std::vector<int>& nzb,
                             Parity parity) {
    const TorusGrid& g = a.grid();
    FourierField out(g, parity);
    for (int ia : nza) {
        int ka1 = g.k1_of(ia / g.n2()), ka2 = g.k2_of(ia % g.n2());
        cplx ca = a.coeffs()[ia];
        for (int ib : nzb) {
            int kb1 = g.k1_of(ib / g.n2()), kb2 = g.k2_of(ib % g.n2());
            int k1 = ka1 + kb1, k2 = ka2 + kb2;
            if (!g.holds(k1, k2))
                continue;  // beyond the lattice: the padded path drops these too
            out.atk(k1, k2) += ca * b.coeffs()[ib];
        }
    }
    return out;
}

}  // namespace

FourierField multiply(const FourierField& a, const FourierField& b) {
    if (a.grid() != b.grid())
        throw Error("multiply: grid mismatch");
    const TorusGrid& g = a.grid();
    {
        std::vector<int> nza, nzb;
        const size_t cap = 4096;
        for (int i = 0; i < g.size() && nza.size() <= cap; ++i)
            if (a.coeffs()[i] != cplx(0, 0))
                nza.push_back(i);
        for (int i = 0; i < g.size() && nzb.size() <= cap; ++i)
            if (b.coeffs()[i] != cplx(0, 0))
                nzb.push_back(i);
        double fft_cost = 12.0 * g.size() * std::log2(static_cast<double>(g.size()) + 2.0);
        if (nza.size() <= cap && nzb.size() <= cap &&
            static_cast<double>(nza.size()) * nzb.size() < fft_cost)
            return multiply_sparse(a, b, nza, nzb, parity_product(a.parity(), b.parity()));
    }
    const int m1 = 2 * g.n1(), m2 = g.n2() == 1 ? 1 : 2 * g.n2();
    TorusGrid fine(m1, m2, g.ell());
    auto pad = [&](const FourierField& f) {
        std::vector<cplx> buf(static_cast<size_t>(m1) * m2, cplx(0, 0));
        for (int i1 = 0; i1 < g.n1(); ++i1)
            for (int i2 = 0; i2 < g.n2(); ++i2) {
                int k1 = g.k1_of(i1), k2 = g.k2_of(i2);
                int j1 = k1 >= 0 ? k1 : k1 + m1;
                int j2 = k2 >= 0 ? k2 : k2 + m2;
                buf[static_cast<size_t>(j1) * m2 + j2] = f.at(i1, i2);
            }
        fft::inverse(m1, m2, buf);
        return buf;
    };
    std::vector<cplx> va = pad(a), vb = pad(b);
    for (size_t i = 0; i < va.size(); ++i)
        va[i] *= vb[i];
    fft::forward(m1, m2, va);
    FourierField out(g, parity_product(a.parity(), b.parity()));
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            int k1 = g.k1_of(i1), k2 = g.k2_of(i2);
            int j1 = k1 >= 0 ? k1 : k1 + m1;
            int j2 = k2 >= 0 ? k2 : k2 + m2;
            out.at(i1, i2) = va[static_cast<size_t>(j1) * m2 + j2];
        }
    return out;
}

FourierField divide(const FourierField& a, const FourierField& b) {
    if (a.grid() != b.grid())
        throw Error("divide: grid mismatch");
    std::vector<double> va = a.values(), vb = b.values();
    for (size_t i = 0; i < va.size(); ++i) {
        if (vb[i] == 0.0)
            throw Error("divide: denominator vanishes on grid");
        va[i] /= vb[i];
    }
    return forward_transform(a.grid(), va);
}

double mean(const FourierField& f) { return f.at(0, 0).real(); }

double mean_square(const FourierField& f) {
    std::vector<double> v = f.values();
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return s / v.size();
}

double max_abs(const FourierField& f) {
    std::vector<double> v = f.values();
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

double min_value(const FourierField& f, int* argmin) {
    std::vector<double> v = f.values();
    int arg = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[arg])
            arg = static_cast<int>(i);
    if (argmin)
        *argmin = arg;
    return v[arg];
}

double sobolev_norm(const FourierField& f, double s) {
    const TorusGrid& g = f.grid();
    double acc = 0.0;
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            double w = bracket(g.xi1_of(i1), g.xi2_of(i2));
            acc += std::pow(w, 2.0 * s) * std::norm(f.at(i1, i2));
        }
    return std::sqrt(acc);
}

double smoothstep5(double u) {
    if (u <= 0.0)
        return 0.0;
    if (u >= 1.0)
        return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double smoothstep_cinf(double u) {
    if (u <= 0.0)
        return 0.0;
    if (u >= 1.0)
        return 1.0;
    double a = std::exp(-1.0 / u);
    double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

double lp_bump(double t) {
    double a = std::abs(t);
    if (a <= 1.1)
        return 1.0;
    if (a >= 1.9)
        return 0.0;
    return 1.0 - smoothstep5((a - 1.1) / 0.8);
}

double lp_phi_k(int k, double bracket_xi) { return lp_bump(std::ldexp(bracket_xi, -k)); }

FourierField lp_block(const FourierField& f, int k) {
    if (k < 0)
        throw Error("lp_block: k must be >= 0");
    const TorusGrid& g = f.grid();
    FourierField out(g, f.parity());
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            double w = bracket(g.xi1_of(i1), g.xi2_of(i2));
            double filt = lp_phi_k(k, w) - lp_phi_k(k - 1, w);
            out.at(i1, i2) = filt * f.at(i1, i2);
        }
    return out;
}

int lp_max_block(const TorusGrid& grid) {
    double corner = bracket(grid.n1() / 2, grid.n2() / 2 / grid.ell());
    return static_cast<int>(std::ceil(std::log2(corner))) + 1;
}

FourierField random_field(const TorusGrid& grid, const RandomFieldSpec& spec,
                          std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    FourierField f(grid);
    const int n1 = grid.n1(), n2 = grid.n2();
    for (int i1 = 0; i1 < n1; ++i1) {
        int k1 = grid.k1_of(i1);
        if (k1 == -n1 / 2)
            continue;  // skip Nyquist rows: they have no Hermitian partner slot
        for (int i2 = 0; i2 < n2; ++i2) {
            int k2 = grid.k2_of(i2);
            if (n2 > 1 && k2 == -n2 / 2)
                continue;
            if (k1 < 0 || (k1 == 0 && k2 < 0))
                continue;  // fill upper half, mirror below
            double w = bracket(k1, k2 / grid.ell());
            if (w < spec.band_lo || w > spec.band_hi)
                continue;
            double amp = std::pow(w, -spec.decay);
            if (k1 == 0 && k2 == 0) {
                f.at(i1, i2) = amp * gauss(rng);
                continue;
            }
            cplx c(gauss(rng), gauss(rng));
            f.atk(k1, k2) = amp * c;
            f.atk(-k1, -k2) = amp * std::conj(c);
        }
    }
    if (spec.parity != Parity::none)
        f = enforce_parity(f, spec.parity);
    if (spec.unit_h0) {
        double n = sobolev_norm(f, 0.0);
        if (n > 0.0)
            f *= 1.0 / n;
    }
    return f;
}

FourierField random_band_field(const TorusGrid& grid, int k, std::mt19937_64& rng) {
    RandomFieldSpec spec;
    spec.band_lo = std::ldexp(1.0, k - 1);
    spec.band_hi = std::ldexp(1.0, k + 1);
    spec.unit_h0 = false;
    FourierField f = random_field(grid, spec, rng);
    // shape by the dyadic filter so the spectrum sits strictly in the shell
    f = lp_block(f, k);
    double n = sobolev_norm(f, 0.0);
    if (n > 0.0)
        f *= 1.0 / n;
    return f;
}

void save_field_csv(const FourierField& f, const std::string& path,
                    const std::string& extra_json) {
    std::ofstream out(path);
    if (!out)
        throw Error("save_field_csv: cannot open " + path);
    const TorusGrid& g = f.grid();
    out << "# {\"n1\":" << g.n1() << ",\"n2\":" << g.n2() << ",\"ell\":";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", g.ell());
    out << buf << ",\"parity\":\"" << parity_name(f.parity()) << "\"";
    if (!extra_json.empty())
        out << "," << extra_json;
    out << "}\n";
    out << "k1,k2,re,im\n";
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            cplx c = f.at(i1, i2);
            if (c == cplx(0.0, 0.0))
                continue;
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g", g.k1_of(i1), g.k2_of(i2),
                          c.real(), c.imag());
            out << buf << "\n";
        }
}

FourierField load_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("load_field_csv: cannot open " + path);
    std::string header;
    std::getline(in, header);
    auto grab = [&](const std::string& key) -> std::string {
        auto pos = header.find("\"" + key + "\":");
        if (pos == std::string::npos)
            throw Error("load_field_csv: missing header key " + key);
        pos += key.size() + 3;
        auto end = header.find_first_of(",}", pos);
        return header.substr(pos, end - pos);
    };
    int n1 = std::stoi(grab("n1"));
    int n2 = std::stoi(grab("n2"));
    double ell = std::stod(grab("ell"));
    FourierField f{TorusGrid(n1, n2, ell)};
    std::string line;
    std::getline(in, line);  // column header
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ss(line);
        int k1, k2;
        double re, im;
        char comma;
        ss >> k1 >> comma >> k2 >> comma >> re >> comma >> im;
        f.atk(k1, k2) = cplx(re, im);
    }
    return f;
}

}  // namespace dw
