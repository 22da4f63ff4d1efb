#pragma once

#include "dw/dtn.hpp"
#include "dw/torus.hpp"

namespace dw {

// Doubly periodic travelling wave data: sigma even/even, psi odd/even,
// travelling in x1 with Froude parameter mu.
struct DiamondWave {
    double mu = 0.0;
    FourierField sigma;
    FourierField psi;
    double ell = 1.0;

    void save(const std::string& path_prefix, const std::string& provenance) const;
};

struct StokesData {
    double eps = 0.0;
    double mu_c = 0.0;
    double mu1 = 0.0;
    FourierField sigma1;
    FourierField psi1;
};

// First-order small-amplitude wave on the given grid:
//   mu_c = ell / sqrt(1+ell^2),
//   sigma1 = -(1/mu_c) cos x1 cos(x2/ell),  psi1 = sin x1 cos(x2/ell),
//   mu = mu_c + eps^2 mu1.
// Only the first-order profiles are generated; higher Stokes corrections
// have no closed form here, so residuals of the output are O(eps^2).
std::pair<DiamondWave, StokesData> stokes_wave(const TorusGrid& grid, double eps);

double stokes_mu_c(double ell);
double stokes_mu1(double ell);

// Residuals of the reduced travelling-wave system:
//   r1 = G(sigma) psi - d_{x1} sigma,
//   r2 = mu sigma + d_{x1} psi + 1/2 |grad psi|^2
//        - 1/2 (grad sigma . grad psi + d_{x1} sigma)^2 / (1+|grad sigma|^2).
struct SystemResidual {
    FourierField r1, r2;
    double norm() const;  // ||(r1, r2)||_{H^0}
};
SystemResidual system_residual(const DiamondWave& w, const SolverConfig& cfg = {});

// Parity check plus the transversality condition: in the travelling frame
// the surface value of 1 + d_{x1} phi equals V1, so the check is
// min |V1| > 0 on the grid.
struct DiamondReport {
    bool parity_ok = false;
    bool transversal = false;
    bool pass = false;
    double sigma_parity_defect = 0.0;
    double psi_parity_defect = 0.0;
    double min_v1 = 0.0;       // signed minimum of V1
    double min_abs_v1 = 0.0;
};
DiamondReport validate_diamond(const DiamondWave& w, const SolverConfig& cfg = {});

}  // namespace dw
