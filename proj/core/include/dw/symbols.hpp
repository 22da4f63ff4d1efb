#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dw/torus.hpp"

namespace dw {

// Uniform mesh of unit directions.  d=2: ndir angles theta_j = 2*pi*j/ndir
// (ndir divisible by 4 so that +/-e1, +/-e2 are mesh points); d=1: {+1,-1}.
class DirectionMesh {
  public:
    explicit DirectionMesh(int ndir, int dim = 2);
    int size() const { return ndir_; }
    int dim() const { return dim_; }
    double theta(int j) const { return 2.0 * TorusGrid::pi() * j / ndir_; }
    double omega1(int j) const;
    double omega2(int j) const;
    int opposite(int j) const { return (j + ndir_ / 2) % ndir_; }
    // mesh index of the reflection (-w1, w2), i.e. theta -> pi - theta
    int reflect1(int j) const;
    // mesh index of the reflection (w1, -w2), i.e. theta -> -theta
    int reflect2(int j) const { return (ndir_ - j) % ndir_; }
    bool operator==(const DirectionMesh& o) const { return ndir_ == o.ndir_ && dim_ == o.dim_; }

  private:
    int ndir_, dim_;
};

// One homogeneous symbol component a(x, xi) = |xi|^m g(x, xi/|xi|), stored as
// per-direction planes over the grid: plane(j)[i] = g(x_i, omega_j).
class HomogeneousComponent {
  public:
    HomogeneousComponent() = default;
    HomogeneousComponent(const TorusGrid& grid, const DirectionMesh& mesh, double degree,
                         double x_regularity = 0.0);

    const TorusGrid& grid() const { return grid_; }
    const DirectionMesh& mesh() const { return mesh_; }
    double degree() const { return degree_; }
    double x_regularity() const { return x_reg_; }

    cplx& at(int dir, int ix) { return data_[static_cast<size_t>(dir) * grid_.size() + ix]; }
    const cplx& at(int dir, int ix) const {
        return data_[static_cast<size_t>(dir) * grid_.size() + ix];
    }
    const cplx* plane(int dir) const { return data_.data() + static_cast<size_t>(dir) * grid_.size(); }
    cplx* plane(int dir) { return data_.data() + static_cast<size_t>(dir) * grid_.size(); }

    double max_abs() const;

    // Homogeneity-aware derivatives: d_xi1 / d_xi2 lower the degree by one;
    // the angular part is differentiated spectrally on the direction mesh.
    HomogeneousComponent dxi1() const;
    HomogeneousComponent dxi2() const;
    HomogeneousComponent dxi(int alpha1, int alpha2) const;
    // Spectral x-derivatives (per direction plane).
    HomogeneousComponent dx1() const;
    HomogeneousComponent dx2() const;
    HomogeneousComponent dx(int alpha1, int alpha2) const;

    HomogeneousComponent& operator+=(const HomogeneousComponent& o);
    friend HomogeneousComponent operator*(cplx s, HomogeneousComponent a);

    // a(x_i, xi) for arbitrary xi != 0 via the angular Fourier series.
    cplx eval(int ix, double xi1, double xi2) const;
    // whole-grid plane at a fixed nonzero xi
    std::vector<cplx> plane_at(double xi1, double xi2) const;

  private:
    TorusGrid grid_{2, 1, 1.0};
    DirectionMesh mesh_{4};
    double degree_ = 0.0;
    double x_reg_ = 0.0;
    std::vector<cplx> data_;
    // angular Fourier coefficients, built lazily for eval()
    mutable std::vector<cplx> angcoef_;
    const std::vector<cplx>& angular_coefficients() const;
};

// Pluri-homogeneous symbol: ordered components with strictly decreasing
// degrees (integer steps from the principal degree).
class SymbolExpansion {
  public:
    SymbolExpansion() = default;
    explicit SymbolExpansion(std::vector<HomogeneousComponent> comps);

    int order_count() const { return static_cast<int>(comps_.size()); }
    double principal_degree() const { return comps_.empty() ? 0.0 : comps_[0].degree(); }
    const HomogeneousComponent& component(int j) const { return comps_[j]; }
    HomogeneousComponent& component(int j) { return comps_[j]; }
    const std::vector<HomogeneousComponent>& components() const { return comps_; }
    // component of the given degree, if present
    const HomogeneousComponent* at_degree(double deg) const;

    cplx eval(int ix, double xi1, double xi2) const;

  private:
    std::vector<HomogeneousComponent> comps_;
};

// --- constructors -----------------------------------------------------------

// x-independent multiplier q(xi) sampled by homogeneity from a callable on
// the direction mesh, or x-only symbol a(x).
HomogeneousComponent multiplier_component(const TorusGrid& grid, const DirectionMesh& mesh,
                                          double degree,
                                          const std::function<cplx(double, double)>& on_circle);
HomogeneousComponent xonly_component(const FourierField& a, const DirectionMesh& mesh);

// --- Dirichlet-to-Neumann symbols -------------------------------------------

// Principal symbol sqrt((1+|grad s|^2)|xi|^2 - (grad s . xi)^2) on the mesh.
HomogeneousComponent dtn_principal(const FourierField& sigma, const DirectionMesh& mesh);
// Same, evaluated pointwise on the grid at one fixed covector field
// (xi1(x), xi2(x)); used where no direction mesh is wanted.
FourierField dtn_principal_at(const FourierField& sigma, const FourierField& xi1,
                              const FourierField& xi2);

// First-order elliptic factorization data: the forward/backward principal
// roots a1/A1 and the lower-order recursion terms, plus the assembled
// DtN symbol lambda = (1+|grad s|^2) A - i grad s . xi.
struct DtnFactorization {
    SymbolExpansion a;       // a1, a0, a_{-1}
    SymbolExpansion A;       // A1, A0, A_{-1}
    SymbolExpansion lambda;  // lambda^1, lambda^0, lambda^{-1}
};

// order in {1,2,3}: number of lambda components computed.
DtnFactorization dtn_factorization(const FourierField& sigma, const DirectionMesh& mesh,
                                   int order);
SymbolExpansion dtn_symbol_expansion(const FourierField& sigma, const DirectionMesh& mesh,
                                     int order);

// --- calculus ---------------------------------------------------------------

// a#b = sum_{|alpha|<rho} 1/(i^alpha alpha!) dxi^alpha a dx^alpha b.
SymbolExpansion sharp_compose(const SymbolExpansion& a, const SymbolExpansion& b, double rho);

// Symbol pullback under a diffeomorphism chi, through sub-principal order.
// The diffeo enters through its first/second derivative tables and the
// composition x -> chi^{-1}(x) used to express the result on the image grid.
struct DiffeoJacobian {
    // chi'(x) entries as grid fields (row-major 2x2), and the second
    // derivatives of each chi component: d2[c][alpha] with alpha in
    // {x1x1, x1x2, x2x2}.
    FourierField j11, j12, j21, j22;
    FourierField d2_1_11, d2_1_12, d2_1_22;
    FourierField d2_2_11, d2_2_12, d2_2_22;
    // physical-space samples of chi^{-1} at the grid points (x1-major),
    // empty means identity
    std::vector<double> inv1, inv2;
};

SymbolExpansion symbol_pullback(const SymbolExpansion& a, const DiffeoJacobian& chi, int order);

// --- predicates / diagnostics ------------------------------------------------

// max over mesh/grid of |conj(a(x,xi)) - a(x,-xi)| per component.
double reality_defect(const SymbolExpansion& a);
// defect of invariance under (x1,xi1)->(-x1,-xi1) and (x2,xi2)->(-x2,-xi2).
double even_even_symmetry_defect(const SymbolExpansion& a);

// Symbol dump: CSV rows "x_index,angle_index,degree,re,im".
void save_symbol_csv(const SymbolExpansion& a, const std::string& path);

}  // namespace dw
