#pragma once

#include <array>

#include "dw/dtn.hpp"
#include "dw/paradiff.hpp"
#include "dw/symbols.hpp"
#include "dw/torus.hpp"

namespace dw {

// Transport diffeomorphism chi1(x) = (x1, d(x)) with V . grad d = 0 and
// d(0, x2) = x2, plus the second straightening chi2 and the composite
// chi = chi2 o chi1.  d is stored as x2 + periodic part; the linear-in-x2
// monodromy d(x1, x2 + 2 pi ell) = d + 2 pi ell is handled exactly.
struct DiffeoPack {
    TorusGrid grid{2, 1, 1.0};

    // first stage
    FourierField d_periodic;  // d(x) - x2, parity (e,o) for diamond data
    double w_periodicity_defect = 0.0;  // ||w(2 pi,.) - w(0,.)||_inf
    double w_mean_defect = 0.0;         // max_x1 |mean_x2 w - 1| before renormalization
    double transport_residual = 0.0;    // ||V . grad d|| / ||V||

    // second stage (filled by compute_nu)
    bool has_second_stage = false;
    double nu = 0.0;
    FourierField dtilde;              // periodic part of chi2's first slot, at chi1(x)-free form
    std::vector<double> etilde;       // etilde(x2) on the x2 grid nodes
    std::vector<double> etilde_prime; // 1 + etilde' sampled minus 1
    FourierField gamma;               // gamma(x) > 0, coefficient of (|xi| - nu xi1^2)
    double dtilde_mean_defect = 0.0;
    double etilde_mean_defect = 0.0;

    // composite map chi(x) - x (cached on the grid) and its derivatives
    FourierField chi_tilde1, chi_tilde2;
    DiffeoJacobian jacobian() const;

    // d(x1_grid_index, x2) for arbitrary x2 (series in x2)
    double eval_d(int i1, double x2) const;
    // x2 with d(x1_i, x2) = y (Newton; monotone since dz d = w > 0)
    double invert_d(int i1, double y) const;
};

// Integrate the transport Cauchy problem
//   dx1 w + (V2/V1) dx2 w + w dx2(V2/V1) = 0,  w(0, x2) = 1,
// by RK4 in x1 (substeps per grid cell) with spectral x2 derivatives;
// then d = x2 + primitive of (w - 1).  Throws "transversality-lost" when
// min |V1| = 0 and fails when w reaches 0.
DiffeoPack transport_diffeo(const FourierField& V1, const FourierField& V2, int substeps = 8);

// P2(x) = lambda^1(x, t(chi1'(x)) e2)^2, the |xi|^2 coefficient of the
// pulled-back principal symbol.
FourierField transport_p2(const FourierField& sigma, const DiffeoPack& chi1);

// nu = (2 pi / ell) Int (Int sqrt(Gamma) dx1)^{-2} dx2 with
// Gamma = (P2 a / V1^2) o chi1^{-1}; fills the second stage of the pack
// (dtilde, etilde, gamma, composite map cache).  Throws when Gamma <= 0,
// naming the failing factor.
double compute_nu(const FourierField& P2, const FourierField& taylor, const FourierField& V1,
                  DiffeoPack& pack);

// --- paracomposition -----------------------------------------------------------

// Grid samples of a torus map y = chi(x) (x1-major ordering).
struct MapSamples {
    std::vector<double> y1, y2;
};
MapSamples map_samples(const DiffeoPack& pack);          // composite chi
MapSamples inverse_map_samples(const DiffeoPack& pack);  // chi^{-1} by 2-d Newton
MapSamples identity_samples(const TorusGrid& grid);

// chi* f = sum_j sum_{|k-j|<=N} Delta_k((Delta_j f) o chi).
FourierField paracomposition(const MapSamples& chi, const FourierField& f, int N = 2);

struct ParacompositionSensitivity {
    double drift = 0.0;  // ||chi*_{N+1} f - chi*_N f|| / ||f||
};
ParacompositionSensitivity paracomposition_sensitivity(const MapSamples& chi,
                                                       const FourierField& f, int N = 2);

// --- symbol decomposition (section of zero-order operators along the cone) -----

// For S homogeneous of degree -m (m in {0,1,2}), even in xi2 and supported
// away from the xi1 axis:
//   S_j(x) = (1/((-i)^j nu^j j!)) (d_xi1^j S)(x, 0, 1),
// computed from local stencil differentiation on the direction mesh.
// For m = 0 the full operator decomposition is returned:
//   T_S dx1 v = sum_j T_{S_j} dx1^{1-j} v
//             + sum_k T_{q_k} dx1^{1-k} (-i dx2 + nu dx1^2) v + T_w v
// exactly on v with spectrum in {xi2 >= c |xi1|} (the q_k and w tables
// absorb the cone cutoff J_c).
struct SymbolDecomposition {
    std::array<FourierField, 5> S;  // S_0..S_4 (complex tables)
    std::array<SymbolExpansion, 4> q;  // q_1..q_4
    SymbolExpansion w_residual;        // order <= -2 leftover symbol
    bool has_q = false;                // true only for degree-0 input
};
SymbolDecomposition symbol_decompose(const HomogeneousComponent& S, double nu,
                                     double cone_c = 0.2);

// --- coefficient cascade ---------------------------------------------------------

// Transport cascade of Z_c conjugation coefficients: five equations
// delta_k = delta'_k with
//   delta_0 = 2 nu dx1 c0, ...,
//   delta'_k = sum_{l+m+n=k} c_l (-dx1)^m a_n,
// solved in closed form by x1-primitives; kappa and kappa' are the two
// solvability constants.
struct CascadeResult {
    std::array<FourierField, 5> a;  // inputs (complex tables)
    std::array<FourierField, 5> c;  // c_0..c_4
    std::vector<cplx> C0;           // C_0(x2) on the x2 grid
    FourierField gamma_phase;       // dx1^{-1} a_0 (purely imaginary)
    cplx kappa{0.0, 0.0};
    cplx kappa_prime{0.0, 0.0};
    double nu = 0.0;
    double primitive_defect = 0.0;  // worst zero-mean defect met by the primitives
    std::array<double, 5> resubstitution_residual{};  // ||delta_k - delta'_k||

    std::string to_json() const;  // {nu, kappa, kappa_prime, defect norms}
};

CascadeResult coefficient_cascade(const std::array<FourierField, 5>& a, double nu, double ell);

// Recompute ||delta_k - delta'_k|| from the final coefficients.
std::array<double, 5> cascade_residuals(const CascadeResult& r);

// x1-primitive vanishing at x1 = 0; the x1-mean must vanish (defect is
// reported; above tol it throws, since the primitive would not be periodic).
FourierField x1_primitive(const FourierField& f, double* mean_defect = nullptr,
                          double tol = 1e-6);

}  // namespace dw
