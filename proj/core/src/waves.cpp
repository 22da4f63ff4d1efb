#include "dw/waves.hpp"

#include <cmath>

#include "dw/io.hpp"

namespace dw {

double stokes_mu_c(double ell) { return ell / std::sqrt(1.0 + ell * ell); }

double stokes_mu1(double ell) {
    double m = stokes_mu_c(ell);
    return 1.0 / (4.0 * m * m * m) - 1.0 / (2.0 * m * m) - 3.0 / (4.0 * m) + 2.0 + m / 2.0 -
           9.0 / (4.0 * (2.0 - m));
}

std::pair<DiamondWave, StokesData> stokes_wave(const TorusGrid& grid, double eps) {
    if (eps < 0.0 || eps > 0.2)
        throw Error("stokes_wave: eps must lie in [0, 0.2]");
    const double ell = grid.ell();
    const double mc = stokes_mu_c(ell);

    FourierField sigma1(grid, Parity::ee), psi1(grid, Parity::oe);
    // -(1/mu_c) cos x1 cos(x2/ell): coefficients -1/(4 mu_c) at (+-1, +-1)
    for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) {
            sigma1.atk(s1, s2) = -0.25 / mc;
            psi1.atk(s1, s2) = cplx(0.0, -0.25 * s1);  // sin x1 cos(x2/ell)
        }

    StokesData sd{eps, mc, stokes_mu1(ell), sigma1, psi1};
    DiamondWave w{mc + eps * eps * sd.mu1, eps * sigma1, eps * psi1, ell};
    w.sigma.set_parity(Parity::ee);
    w.psi.set_parity(Parity::oe);
    return {std::move(w), std::move(sd)};
}

double SystemResidual::norm() const {
    double a = sobolev_norm(r1, 0.0), b = sobolev_norm(r2, 0.0);
    return std::sqrt(a * a + b * b);
}

SystemResidual system_residual(const DiamondWave& w, const SolverConfig& cfg) {
    const TorusGrid& g = w.sigma.grid();
    FourierField gpsi = dtn_apply(w.sigma, w.psi, cfg);
    FourierField r1 = gpsi - dx1(w.sigma);

    std::vector<double> s1 = dx1(w.sigma).values(), s2 = dx2(w.sigma).values();
    std::vector<double> p1 = dx1(w.psi).values(), p2 = dx2(w.psi).values();
    std::vector<double> sv = w.sigma.values();
    std::vector<double> r2(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double cross = s1[i] * p1[i] + s2[i] * p2[i] + s1[i];
        r2[i] = w.mu * sv[i] + p1[i] + 0.5 * (p1[i] * p1[i] + p2[i] * p2[i]) -
                0.5 * cross * cross / (1.0 + s1[i] * s1[i] + s2[i] * s2[i]);
    }
    return {r1, forward_transform(g, r2)};
}

DiamondReport validate_diamond(const DiamondWave& w, const SolverConfig& cfg) {
    DiamondReport rep;
    rep.sigma_parity_defect = parity_defect(w.sigma, Parity::ee);
    rep.psi_parity_defect = parity_defect(w.psi, Parity::oe);
    rep.parity_ok = rep.sigma_parity_defect < 1e-12 && rep.psi_parity_defect < 1e-12;

    FourierField gpsi = dtn_apply(w.sigma, w.psi, cfg);
    BoundaryCoefficients bc = boundary_coefficients(w.sigma, w.psi, gpsi, w.mu, true);
    std::vector<double> v1 = bc.V1.values();
    rep.min_v1 = v1[0];
    rep.min_abs_v1 = std::abs(v1[0]);
    for (double x : v1) {
        rep.min_v1 = std::min(rep.min_v1, x);
        rep.min_abs_v1 = std::min(rep.min_abs_v1, std::abs(x));
    }
    rep.transversal = rep.min_abs_v1 > 1e-12 && rep.min_v1 > 0.0;
    rep.pass = rep.parity_ok && rep.transversal;
    return rep;
}

void DiamondWave::save(const std::string& path_prefix, const std::string& provenance) const {
    std::string extra = "\"mu\":" + format_double(mu) + ",\"wave_ell\":" + format_double(ell) +
                        ",\"provenance\":\"" + provenance + "\"";
    save_field_csv(sigma, path_prefix + "_sigma.csv", extra);
    save_field_csv(psi, path_prefix + "_psi.csv", extra);
}

}  // namespace dw
