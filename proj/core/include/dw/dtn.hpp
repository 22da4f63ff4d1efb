#pragma once

#include <memory>

#include "dw/cheb.hpp"
#include "dw/paradiff.hpp"
#include "dw/symbols.hpp"
#include "dw/torus.hpp"

namespace dw {

struct SolverConfig {
    double depth = 2.0;   // strip truncation: z in [-depth, 0]
    int nz = 48;          // Chebyshev degree in z
    double tol = 1e-11;   // relative fixed-point tolerance
    int max_iter = 200;
    bool neumann_bottom = false;  // finite-depth (flat bottom) variant
};

// Harmonic potential in flattened coordinates: v(x, z) = phi(x, z + sigma(x))
// on the strip z in [-depth, 0], spectral in x and collocated in z.
class FlattenedPotential {
  public:
    FlattenedPotential(const TorusGrid& grid, const SolverConfig& cfg);

    const TorusGrid& grid() const { return grid_; }
    const SolverConfig& config() const { return cfg_; }
    const ChebGrid& zgrid() const { return z_; }
    double depth() const { return cfg_.depth; }
    int nz() const { return cfg_.nz; }
    double residual() const { return residual_; }
    int iterations() const { return iters_; }

    // spectral coefficients of v(., z_j); node j = 0 is the surface z = 0
    std::vector<cplx>& slice(int j) { return hat_[j]; }
    const std::vector<cplx>& slice(int j) const { return hat_[j]; }
    FourierField slice_field(int j) const;

    // d/dz v(., z_j) via the collocation derivative
    std::vector<cplx> dz_slice(int j) const;

  private:
    friend class DtnSolver;
    TorusGrid grid_;
    SolverConfig cfg_;
    ChebGrid z_;
    std::vector<std::vector<cplx>> hat_;
    double residual_ = 0.0;
    int iters_ = 0;
};

// Variable-coefficient elliptic solve behind G(sigma):  Fourier in x,
// Chebyshev in z, flat-operator preconditioned fixed point.  The bottom
// closes with the half-space radiation condition dz v = |D| v (exact for
// sigma = 0), or homogeneous Neumann when cfg.neumann_bottom is set.
// Factorizations are cached per distinct |xi| and reused across solves.
class DtnSolver {
  public:
    DtnSolver(const TorusGrid& grid, const SolverConfig& cfg);
    ~DtnSolver();
    DtnSolver(DtnSolver&&) noexcept;

    const SolverConfig& config() const { return cfg_; }

    FlattenedPotential solve(const FourierField& sigma, const FourierField& psi) const;
    // trace (1+|grad sigma|^2) dz v - grad sigma . grad v at z = 0
    FourierField apply(const FourierField& sigma, const FourierField& psi) const;
    FourierField trace(const FourierField& sigma, const FlattenedPotential& v) const;

  private:
    struct Impl;
    TorusGrid grid_;
    SolverConfig cfg_;
    std::unique_ptr<Impl> impl_;
};

FlattenedPotential solve_flattened(const FourierField& sigma, const FourierField& psi,
                                   const SolverConfig& cfg = {});
FourierField dtn_apply(const FourierField& sigma, const FourierField& psi,
                       const SolverConfig& cfg = {});

// --- boundary coefficients ----------------------------------------------------

struct BoundaryCoefficients {
    FourierField b;        // (grad sigma . grad psi + G psi) / (1 + |grad sigma|^2)
    FourierField V1, V2;   // V = c + grad psi - b grad sigma, c = (1,0) if travelling
    FourierField taylor;   // a = mu + V . grad b
    double mu = 0.0;
    bool travelling = false;
};

BoundaryCoefficients boundary_coefficients(const FourierField& sigma, const FourierField& psi,
                                           const FourierField& gpsi, double mu,
                                           bool travelling);

// good unknown u = psi - T_b sigma
FourierField good_unknown(const FourierField& sigma, const FourierField& psi,
                          const FourierField& b, const CutoffPair& cut = {});

struct TaylorCheck {
    double min_value = 0.0;
    double x1 = 0.0, x2 = 0.0;  // grid location of the minimum
    bool positive = false;
};
TaylorCheck taylor_sign_check(const BoundaryCoefficients& coeffs);

// --- paralinearization ----------------------------------------------------------

struct DtnReport {
    FourierField trace;          // G(sigma) psi
    BoundaryCoefficients coeffs;
    FourierField good_unknown;
    FourierField remainder;      // R = G psi - (T_lambda u - T_V.grad sigma - T_divV sigma)
    // per-band diagnostics: k, ||Delta_k R||, ||Delta_k sigma||, ||Delta_k psi||
    struct BandRow {
        int k;
        double r_norm, sigma_norm, psi_norm;
    };
    std::vector<BandRow> bands;
    double r_h0 = 0.0;

    void save_diagnostics_csv(const std::string& path) const;
};

struct ParalinConfig {
    SolverConfig solver;
    int order = 3;    // lambda components
    int ndir = 64;    // direction mesh for the DtN symbol
    CutoffPair cut;
};

DtnReport paralin_remainder(const FourierField& sigma, const FourierField& psi,
                            const ParalinConfig& cfg = {});

}  // namespace dw
