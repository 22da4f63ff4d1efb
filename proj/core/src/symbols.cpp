#include "dw/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace dw {

namespace {
constexpr cplx I{0.0, 1.0};
}

DirectionMesh::DirectionMesh(int ndir, int dim) : ndir_(ndir), dim_(dim) {
    if (dim == 1) {
        ndir_ = 2;
        return;
    }
    if (ndir < 4 || ndir % 4 != 0)
        throw Error("DirectionMesh: ndir must be a positive multiple of 4");
}

double DirectionMesh::omega1(int j) const {
    if (dim_ == 1)
        return j == 0 ? 1.0 : -1.0;
    return std::cos(theta(j));
}

double DirectionMesh::omega2(int j) const {
    if (dim_ == 1)
        return 0.0;
    return std::sin(theta(j));
}

int DirectionMesh::reflect1(int j) const {
    if (dim_ == 1)
        return opposite(j);
    return ((ndir_ / 2 - j) % ndir_ + ndir_) % ndir_;
}

HomogeneousComponent::HomogeneousComponent(const TorusGrid& grid, const DirectionMesh& mesh,
                                           double degree, double x_regularity)
    : grid_(grid), mesh_(mesh), degree_(degree), x_reg_(x_regularity),
      data_(static_cast<size_t>(mesh.size()) * grid.size(), cplx(0, 0)) {}

double HomogeneousComponent::max_abs() const {
    double m = 0.0;
    for (const auto& c : data_)
        m = std::max(m, std::abs(c));
    return m;
}

const std::vector<cplx>& HomogeneousComponent::angular_coefficients() const {
    if (!angcoef_.empty())
        return angcoef_;
    const int nd = mesh_.size(), N = grid_.size();
    angcoef_.resize(data_.size());
    std::vector<cplx> line(nd), out(nd);
    for (int ix = 0; ix < N; ++ix) {
        for (int j = 0; j < nd; ++j)
            line[j] = data_[static_cast<size_t>(j) * N + ix];
        fft::forward1d(nd, line.data(), out.data());
        for (int j = 0; j < nd; ++j)
            angcoef_[static_cast<size_t>(j) * N + ix] = out[j];
    }
    return angcoef_;
}

namespace {

// angular spectral derivative d/dtheta of all planes
std::vector<cplx> angular_derivative(const HomogeneousComponent& a) {
    const int nd = a.mesh().size(), N = a.grid().size();
    std::vector<cplx> result(static_cast<size_t>(nd) * N);
    std::vector<cplx> line(nd), hat(nd);
    for (int ix = 0; ix < N; ++ix) {
        for (int j = 0; j < nd; ++j)
            line[j] = a.at(j, ix);
        fft::forward1d(nd, line.data(), hat.data());
        for (int j = 0; j < nd; ++j) {
            int q = j <= nd / 2 - 1 ? j : j - nd;
            if (j == nd / 2)
                q = 0;
            hat[j] *= cplx(0.0, q);
        }
        fft::inverse1d(nd, hat.data(), line.data());
        for (int j = 0; j < nd; ++j)
            result[static_cast<size_t>(j) * N + ix] = line[j];
    }
    return result;
}

}  // namespace

HomogeneousComponent HomogeneousComponent::dxi1() const {
    HomogeneousComponent r(grid_, mesh_, degree_ - 1.0, x_reg_);
    const int nd = mesh_.size(), N = grid_.size();
    if (mesh_.dim() == 1) {
        for (int j = 0; j < nd; ++j)
            for (int ix = 0; ix < N; ++ix)
                r.at(j, ix) = degree_ * mesh_.omega1(j) * at(j, ix);
        return r;
    }
    std::vector<cplx> gtheta = angular_derivative(*this);
    for (int j = 0; j < nd; ++j) {
        double c = mesh_.omega1(j), s = mesh_.omega2(j);
        for (int ix = 0; ix < N; ++ix)
            r.at(j, ix) = degree_ * c * at(j, ix) - s * gtheta[static_cast<size_t>(j) * N + ix];
    }
    return r;
}

HomogeneousComponent HomogeneousComponent::dxi2() const {
    HomogeneousComponent r(grid_, mesh_, degree_ - 1.0, x_reg_);
    const int nd = mesh_.size(), N = grid_.size();
    if (mesh_.dim() == 1)
        return r;  // symbols carry no xi2 dependence in d=1
    std::vector<cplx> gtheta = angular_derivative(*this);
    for (int j = 0; j < nd; ++j) {
        double c = mesh_.omega1(j), s = mesh_.omega2(j);
        for (int ix = 0; ix < N; ++ix)
            r.at(j, ix) = degree_ * s * at(j, ix) + c * gtheta[static_cast<size_t>(j) * N + ix];
    }
    return r;
}

HomogeneousComponent HomogeneousComponent::dxi(int a1, int a2) const {
    HomogeneousComponent r = *this;
    for (int i = 0; i < a1; ++i)
        r = r.dxi1();
    for (int i = 0; i < a2; ++i)
        r = r.dxi2();
    return r;
}

namespace {

HomogeneousComponent x_derivative(const HomogeneousComponent& a, bool along_x1) {
    HomogeneousComponent r(a.grid(), a.mesh(), a.degree(), a.x_regularity() - 1.0);
    const TorusGrid& g = a.grid();
    const int nd = a.mesh().size();
    std::vector<cplx> buf(g.size());
    for (int j = 0; j < nd; ++j) {
        std::copy(a.plane(j), a.plane(j) + g.size(), buf.begin());
        fft::forward(g.n1(), g.n2(), buf);
        for (int i1 = 0; i1 < g.n1(); ++i1)
            for (int i2 = 0; i2 < g.n2(); ++i2) {
                double k = along_x1 ? g.xi1_of(i1) : g.xi2_of(i2);
                if ((along_x1 && i1 == g.n1() / 2) || (!along_x1 && i2 == g.n2() / 2))
                    k = 0.0;
                buf[static_cast<size_t>(i1) * g.n2() + i2] *= cplx(0.0, k);
            }
        fft::inverse(g.n1(), g.n2(), buf);
        std::copy(buf.begin(), buf.end(), r.plane(j));
    }
    return r;
}

}  // namespace

HomogeneousComponent HomogeneousComponent::dx1() const { return x_derivative(*this, true); }
HomogeneousComponent HomogeneousComponent::dx2() const { return x_derivative(*this, false); }

HomogeneousComponent HomogeneousComponent::dx(int a1, int a2) const {
    HomogeneousComponent r = *this;
    for (int i = 0; i < a1; ++i)
        r = r.dx1();
    for (int i = 0; i < a2; ++i)
        r = r.dx2();
    return r;
}

HomogeneousComponent& HomogeneousComponent::operator+=(const HomogeneousComponent& o) {
    if (degree_ != o.degree_ || !(mesh_ == o.mesh_) || grid_ != o.grid_)
        throw Error("component add: mismatched degree/mesh/grid");
    for (size_t i = 0; i < data_.size(); ++i)
        data_[i] += o.data_[i];
    angcoef_.clear();
    return *this;
}

HomogeneousComponent operator*(cplx s, HomogeneousComponent a) {
    for (auto& c : a.data_)
        c *= s;
    a.angcoef_.clear();
    return a;
}

cplx HomogeneousComponent::eval(int ix, double xi1, double xi2) const {
    const int nd = mesh_.size(), N = grid_.size();
    if (mesh_.dim() == 1) {
        double r = std::abs(xi1);
        int j = xi1 >= 0 ? 0 : 1;
        return std::pow(r, degree_) * at(j, ix);
    }
    double r = std::hypot(xi1, xi2);
    if (r == 0.0)
        throw Error("symbol eval at xi = 0");
    double th = std::atan2(xi2, xi1);
    const auto& hat = angular_coefficients();
    cplx acc(0, 0);
    for (int j = 0; j < nd; ++j) {
        int q = j <= nd / 2 - 1 ? j : j - nd;
        acc += hat[static_cast<size_t>(j) * N + ix] * std::exp(cplx(0.0, q * th));
    }
    return std::pow(r, degree_) * acc;
}

std::vector<cplx> HomogeneousComponent::plane_at(double xi1, double xi2) const {
    const int nd = mesh_.size(), N = grid_.size();
    std::vector<cplx> out(N, cplx(0, 0));
    if (mesh_.dim() == 1) {
        int j = xi1 >= 0 ? 0 : 1;
        double r = std::pow(std::abs(xi1), degree_);
        for (int ix = 0; ix < N; ++ix)
            out[ix] = r * at(j, ix);
        return out;
    }
    double r = std::hypot(xi1, xi2);
    if (r == 0.0)
        throw Error("symbol eval at xi = 0");
    double th = std::atan2(xi2, xi1);
    const auto& hat = angular_coefficients();
    std::vector<cplx> phase(nd);
    for (int j = 0; j < nd; ++j) {
        int q = j <= nd / 2 - 1 ? j : j - nd;
        phase[j] = std::exp(cplx(0.0, q * th));
    }
    double rm = std::pow(r, degree_);
    for (int j = 0; j < nd; ++j) {
        const cplx* p = hat.data() + static_cast<size_t>(j) * N;
        cplx ph = rm * phase[j];
        for (int ix = 0; ix < N; ++ix)
            out[ix] += ph * p[ix];
    }
    return out;
}

SymbolExpansion::SymbolExpansion(std::vector<HomogeneousComponent> comps) {
    std::sort(comps.begin(), comps.end(),
              [](const HomogeneousComponent& a, const HomogeneousComponent& b) {
                  return a.degree() > b.degree();
              });
    for (auto& c : comps) {
        if (!comps_.empty() && comps_.back().degree() == c.degree())
            comps_.back() += c;
        else
            comps_.push_back(std::move(c));
    }
}

const HomogeneousComponent* SymbolExpansion::at_degree(double deg) const {
    for (const auto& c : comps_)
        if (c.degree() == deg)
            return &c;
    return nullptr;
}

cplx SymbolExpansion::eval(int ix, double xi1, double xi2) const {
    cplx acc(0, 0);
    for (const auto& c : comps_)
        acc += c.eval(ix, xi1, xi2);
    return acc;
}

HomogeneousComponent multiplier_component(const TorusGrid& grid, const DirectionMesh& mesh,
                                          double degree,
                                          const std::function<cplx(double, double)>& on_circle) {
    HomogeneousComponent r(grid, mesh, degree);
    for (int j = 0; j < mesh.size(); ++j) {
        cplx v = on_circle(mesh.omega1(j), mesh.omega2(j));
        for (int ix = 0; ix < grid.size(); ++ix)
            r.at(j, ix) = v;
    }
    return r;
}

HomogeneousComponent xonly_component(const FourierField& a, const DirectionMesh& mesh) {
    HomogeneousComponent r(a.grid(), mesh, 0.0);
    std::vector<cplx> v = a.values_complex();
    for (int j = 0; j < mesh.size(); ++j)
        std::copy(v.begin(), v.end(), r.plane(j));
    return r;
}

// --- DtN symbols ------------------------------------------------------------

HomogeneousComponent dtn_principal(const FourierField& sigma, const DirectionMesh& mesh) {
    const TorusGrid& g = sigma.grid();
    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    HomogeneousComponent r(g, mesh, 1.0);
    for (int j = 0; j < mesh.size(); ++j) {
        double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
        for (int ix = 0; ix < g.size(); ++ix) {
            double gs = s1[ix] * s1[ix] + s2[ix] * s2[ix];
            double dot = s1[ix] * w1 + s2[ix] * w2;
            r.at(j, ix) = std::sqrt((1.0 + gs) - dot * dot);
        }
    }
    return r;
}

FourierField dtn_principal_at(const FourierField& sigma, const FourierField& xi1,
                              const FourierField& xi2) {
    const TorusGrid& g = sigma.grid();
    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    std::vector<double> v1 = xi1.values(), v2 = xi2.values(), out(g.size());
    for (int ix = 0; ix < g.size(); ++ix) {
        double gs = s1[ix] * s1[ix] + s2[ix] * s2[ix];
        double dot = s1[ix] * v1[ix] + s2[ix] * v2[ix];
        out[ix] = std::sqrt((1.0 + gs) * (v1[ix] * v1[ix] + v2[ix] * v2[ix]) - dot * dot);
    }
    return forward_transform(g, out);
}

namespace {

// pointwise product of components; degrees add
HomogeneousComponent comp_mul(const HomogeneousComponent& a, const HomogeneousComponent& b) {
    HomogeneousComponent r(a.grid(), a.mesh(), a.degree() + b.degree());
    const size_t n = static_cast<size_t>(a.mesh().size()) * a.grid().size();
    for (size_t i = 0; i < n; ++i) {
        int j = static_cast<int>(i / a.grid().size());
        int ix = static_cast<int>(i % a.grid().size());
        r.at(j, ix) = a.at(j, ix) * b.at(j, ix);
    }
    return r;
}

// multiply a component by an x-only real table (physical values)
HomogeneousComponent comp_scale_x(const HomogeneousComponent& a, const std::vector<double>& w) {
    HomogeneousComponent r = a;
    for (int j = 0; j < a.mesh().size(); ++j) {
        cplx* p = r.plane(j);
        for (int ix = 0; ix < a.grid().size(); ++ix)
            p[ix] *= w[ix];
    }
    return r;
}

FourierField lowpass_two_thirds(const FourierField& f) {
    const TorusGrid& g = f.grid();
    FourierField out = f;
    for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
            if (std::abs(g.k1_of(i1)) > g.n1() / 3 ||
                (g.n2() > 1 && std::abs(g.k2_of(i2)) > g.n2() / 3))
                out.at(i1, i2) = cplx(0, 0);
        }
    return out;
}

}  // namespace

DtnFactorization dtn_factorization(const FourierField& sigma_in, const DirectionMesh& mesh,
                                   int order) {
    if (order < 1 || order > 3)
        throw Error("dtn_factorization: order must be in {1,2,3}");
    // Low-pass before repeated differentiation: the recursion takes up to
    // three x-derivatives of sigma-derived fields.
    FourierField sigma = lowpass_two_thirds(sigma_in);
    const TorusGrid& g = sigma.grid();
    const int N = g.size(), nd = mesh.size();

    std::vector<double> s1 = dx1(sigma).values(), s2 = dx2(sigma).values();
    std::vector<double> lap = laplacian(sigma).values();
    std::vector<double> b(N), one_gs(N);
    for (int ix = 0; ix < N; ++ix) {
        one_gs[ix] = 1.0 + s1[ix] * s1[ix] + s2[ix] * s2[ix];
        b[ix] = 1.0 / one_gs[ix];
    }

    HomogeneousComponent a1(g, mesh, 1.0), A1(g, mesh, 1.0);
    for (int j = 0; j < nd; ++j) {
        double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
        for (int ix = 0; ix < N; ++ix) {
            double dot = s1[ix] * w1 + s2[ix] * w2;
            double root = std::sqrt(b[ix] - b[ix] * b[ix] * dot * dot);
            cplx drift = I * b[ix] * dot;
            a1.at(j, ix) = drift - root;
            A1.at(j, ix) = drift + root;
        }
    }

    std::vector<HomogeneousComponent> av{a1}, Av{A1};

    if (order >= 2) {
        HomogeneousComponent da_x1 = a1.dxi1(), da_x2 = a1.dxi2();
        HomogeneousComponent dA_1 = A1.dx1(), dA_2 = A1.dx2();
        HomogeneousComponent num = comp_mul(da_x1, dA_1);
        num += comp_mul(da_x2, dA_2);
        num = I * num;  // i d_xi a1 . d_x A1
        HomogeneousComponent a0(g, mesh, 0.0), A0(g, mesh, 0.0);
        for (int j = 0; j < nd; ++j)
            for (int ix = 0; ix < N; ++ix) {
                cplx den = A1.at(j, ix) - a1.at(j, ix);
                if (std::abs(den) < 1e-300)
                    throw Error("factorization-degenerate");
                cplx n0 = num.at(j, ix) - b[ix] * lap[ix] * a1.at(j, ix);
                a0.at(j, ix) = n0 / den;
                A0.at(j, ix) = b[ix] * lap[ix] - a0.at(j, ix);
            }
        av.push_back(a0);
        Av.push_back(A0);
    }

    if (order >= 3) {
        const HomogeneousComponent& a0 = av[1];
        const HomogeneousComponent& A0 = Av[1];
        // sum over k,l in {0,1}, |alpha| = k + l, of 1/(i^alpha alpha!)
        // dxi^alpha a_k dx^alpha A_l   (the m = 0 step of the recursion)
        HomogeneousComponent acc = comp_mul(a0, A0);  // (k,l)=(0,0)
        auto add_alpha1 = [&](const HomogeneousComponent& p, const HomogeneousComponent& q) {
            // (1/i) * (dxi1 p dx1 q + dxi2 p dx2 q)
            HomogeneousComponent t = comp_mul(p.dxi1(), q.dx1());
            t += comp_mul(p.dxi2(), q.dx2());
            acc += -I * t;
        };
        add_alpha1(a1, A0);
        add_alpha1(a0, A1);
        // (k,l)=(1,1), |alpha|=2: coefficient 1/(i^2 alpha!)
        {
            HomogeneousComponent t20 = comp_mul(a1.dxi(2, 0), A1.dx(2, 0));
            HomogeneousComponent t11 = comp_mul(a1.dxi(1, 1), A1.dx(1, 1));
            HomogeneousComponent t02 = comp_mul(a1.dxi(0, 2), A1.dx(0, 2));
            acc += cplx(-0.5, 0.0) * t20;
            acc += cplx(-1.0, 0.0) * t11;
            acc += cplx(-0.5, 0.0) * t02;
        }
        HomogeneousComponent am1(g, mesh, -1.0), Am1(g, mesh, -1.0);
        for (int j = 0; j < nd; ++j)
            for (int ix = 0; ix < N; ++ix) {
                cplx den = a1.at(j, ix) - A1.at(j, ix);
                am1.at(j, ix) = acc.at(j, ix) / den;
                Am1.at(j, ix) = -am1.at(j, ix);
            }
        av.push_back(am1);
        Av.push_back(Am1);
    }

    // lambda = (1+|grad sigma|^2) A - i grad sigma . xi
    std::vector<HomogeneousComponent> lv;
    {
        HomogeneousComponent lam1 = comp_scale_x(Av[0], one_gs);
        for (int j = 0; j < nd; ++j) {
            double w1 = mesh.omega1(j), w2 = mesh.omega2(j);
            for (int ix = 0; ix < N; ++ix)
                lam1.at(j, ix) -= I * (s1[ix] * w1 + s2[ix] * w2);
        }
        lv.push_back(lam1);
        for (size_t k = 1; k < Av.size(); ++k)
            lv.push_back(comp_scale_x(Av[k], one_gs));
    }

    DtnFactorization out;
    out.a = SymbolExpansion(av);
    out.A = SymbolExpansion(Av);
    out.lambda = SymbolExpansion(lv);
    return out;
}

SymbolExpansion dtn_symbol_expansion(const FourierField& sigma, const DirectionMesh& mesh,
                                     int order) {
    return dtn_factorization(sigma, mesh, order).lambda;
}

// --- sharp composition --------------------------------------------------------

SymbolExpansion sharp_compose(const SymbolExpansion& a, const SymbolExpansion& b, double rho) {
    if (rho < 1.0)
        throw Error("sharp_compose: rho must be >= 1");
    std::map<double, HomogeneousComponent, std::greater<double>> acc;
    auto add = [&](HomogeneousComponent c) {
        auto it = acc.find(c.degree());
        if (it == acc.end())
            acc.emplace(c.degree(), std::move(c));
        else
            it->second += c;
    };
    auto fact = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i)
            f *= i;
        return f;
    };
    for (const auto& ca : a.components()) {
        for (const auto& cb : b.components()) {
            for (int n = 0; n < rho; ++n) {
                for (int a1 = 0; a1 <= n; ++a1) {
                    int a2 = n - a1;
                    cplx coef = std::pow(-I, n) / (fact(a1) * fact(a2));
                    HomogeneousComponent term =
                        comp_mul(ca.dxi(a1, a2), cb.dx(a1, a2));
                    add(coef * std::move(term));
                }
            }
        }
    }
    std::vector<HomogeneousComponent> comps;
    for (auto& [deg, c] : acc)
        comps.push_back(std::move(c));
    return SymbolExpansion(std::move(comps));
}

// --- pullback ------------------------------------------------------------------

namespace {

// evaluate a spectral plane at arbitrary points (direct series summation)
std::vector<cplx> eval_plane_at_points(const TorusGrid& g, const std::vector<cplx>& plane_phys,
                                       const std::vector<double>& y1,
                                       const std::vector<double>& y2) {
    std::vector<cplx> hat = plane_phys;
    fft::forward(g.n1(), g.n2(), hat);
    const int n1 = g.n1(), n2 = g.n2();
    std::vector<cplx> out(y1.size(), cplx(0, 0));
    std::vector<cplx> col(n1);
    for (size_t p = 0; p < y1.size(); ++p) {
        // contract over k2, then k1
        for (int i1 = 0; i1 < n1; ++i1) {
            cplx s(0, 0);
            for (int i2 = 0; i2 < n2; ++i2) {
                double k2 = g.xi2_of(i2);
                s += hat[static_cast<size_t>(i1) * n2 + i2] * std::exp(cplx(0.0, k2 * y2[p]));
            }
            col[i1] = s;
        }
        cplx s(0, 0);
        for (int i1 = 0; i1 < n1; ++i1) {
            double k1 = g.xi1_of(i1);
            s += col[i1] * std::exp(cplx(0.0, k1 * y1[p]));
        }
        out[p] = s;
    }
    return out;
}

}  // namespace

SymbolExpansion symbol_pullback(const SymbolExpansion& a, const DiffeoJacobian& chi, int order) {
    if (order < 1 || order > 2)
        throw Error("symbol_pullback: order must be 1 or 2");
    if (a.order_count() == 0)
        return a;
    const HomogeneousComponent& am = a.component(0);
    const TorusGrid& g = am.grid();
    const DirectionMesh& mesh = am.mesh();
    const int N = g.size(), nd = mesh.size();

    std::vector<double> j11 = chi.j11.values(), j12 = chi.j12.values();
    std::vector<double> j21 = chi.j21.values(), j22 = chi.j22.values();
    // Jacobian invertibility on the grid
    for (int ix = 0; ix < N; ++ix)
        if (std::abs(j11[ix] * j22[ix] - j12[ix] * j21[ix]) < 1e-12)
            throw Error("symbol_pullback: non-invertible Jacobian");

    HomogeneousComponent bm(g, mesh, am.degree());
    std::optional<HomogeneousComponent> bm1;
    if (order >= 2)
        bm1.emplace(g, mesh, am.degree() - 1.0);

    std::vector<double> h11, h12, h22;  // d_x^alpha (chi(x).eta) assembled per eta
    if (order >= 2) {
        h11 = chi.d2_1_11.values();
        h12 = chi.d2_1_12.values();
        h22 = chi.d2_1_22.values();
    }
    std::vector<double> g11, g12, g22;
    if (order >= 2) {
        g11 = chi.d2_2_11.values();
        g12 = chi.d2_2_12.values();
        g22 = chi.d2_2_22.values();
    }

    const HomogeneousComponent* am1 = a.order_count() > 1 ? &a.component(1) : nullptr;
    HomogeneousComponent d20 = am.dxi(2, 0), d11 = am.dxi(1, 1), d02 = am.dxi(0, 2);

    for (int j = 0; j < nd; ++j) {
        double e1 = mesh.omega1(j), e2 = mesh.omega2(j);
        for (int ix = 0; ix < N; ++ix) {
            // zeta = t(chi'(x)) eta
            double z1 = j11[ix] * e1 + j21[ix] * e2;
            double z2 = j12[ix] * e1 + j22[ix] * e2;
            bm.at(j, ix) = am.eval(ix, z1, z2);
            if (order >= 2) {
                cplx v = am1 ? am1->eval(ix, z1, z2) : cplx(0, 0);
                // |alpha| = 2 corrections: -i sum (1/alpha!) dxi^a a_m * dx^a(chi.eta)
                cplx c20 = d20.eval(ix, z1, z2) * (e1 * h11[ix] + e2 * g11[ix]) * 0.5;
                cplx c11 = d11.eval(ix, z1, z2) * (e1 * h12[ix] + e2 * g12[ix]);
                cplx c02 = d02.eval(ix, z1, z2) * (e1 * h22[ix] + e2 * g22[ix]) * 0.5;
                bm1->at(j, ix) = v - I * (c20 + c11 + c02);
            }
        }
    }

    // express on the image grid: values currently live at chi(x); compose
    // with chi^{-1} sampled at the grid points
    auto compose = [&](HomogeneousComponent& c) {
        if (chi.inv1.empty())
            return;
        std::vector<cplx> plane(N);
        for (int j = 0; j < nd; ++j) {
            std::copy(c.plane(j), c.plane(j) + N, plane.begin());
            auto vals = eval_plane_at_points(g, plane, chi.inv1, chi.inv2);
            std::copy(vals.begin(), vals.end(), c.plane(j));
        }
    };
    compose(bm);
    std::vector<HomogeneousComponent> comps{std::move(bm)};
    if (bm1) {
        compose(*bm1);
        comps.push_back(std::move(*bm1));
    }
    return SymbolExpansion(std::move(comps));
}

// --- diagnostics ----------------------------------------------------------------

double reality_defect(const SymbolExpansion& a) {
    double worst = 0.0;
    for (const auto& c : a.components()) {
        const int nd = c.mesh().size(), N = c.grid().size();
        for (int j = 0; j < nd; ++j) {
            int jo = c.mesh().opposite(j);
            for (int ix = 0; ix < N; ++ix)
                worst = std::max(worst, std::abs(std::conj(c.at(j, ix)) - c.at(jo, ix)));
        }
    }
    return worst;
}

double even_even_symmetry_defect(const SymbolExpansion& a) {
    double worst = 0.0;
    for (const auto& c : a.components()) {
        const TorusGrid& g = c.grid();
        const DirectionMesh& m = c.mesh();
        for (int j = 0; j < m.size(); ++j) {
            int jr1 = m.reflect1(j), jr2 = m.reflect2(j);
            for (int i1 = 0; i1 < g.n1(); ++i1)
                for (int i2 = 0; i2 < g.n2(); ++i2) {
                    int ix = i1 * g.n2() + i2;
                    int ix1 = ((g.n1() - i1) % g.n1()) * g.n2() + i2;
                    int ix2 = i1 * g.n2() + (g.n2() - i2) % g.n2();
                    worst = std::max(worst, std::abs(c.at(j, ix) - c.at(jr1, ix1)));
                    worst = std::max(worst, std::abs(c.at(j, ix) - c.at(jr2, ix2)));
                }
        }
    }
    return worst;
}

void save_symbol_csv(const SymbolExpansion& a, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("save_symbol_csv: cannot open " + path);
    out << "x_index,angle_index,degree,re,im\n";
    char buf[96];
    for (const auto& c : a.components())
        for (int j = 0; j < c.mesh().size(); ++j)
            for (int ix = 0; ix < c.grid().size(); ++ix) {
                std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g", ix, j, c.degree(),
                              c.at(j, ix).real(), c.at(j, ix).imag());
                out << buf << "\n";
            }
}

}  // namespace dw
