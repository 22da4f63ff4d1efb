#pragma once

#include <functional>

#include "dw/symbols.hpp"
#include "dw/torus.hpp"

namespace dw {

// Admissible cutoff pair (chi, psi) for the paradifferential quantization:
//   chi(theta,eta) = 1 for |theta| <= eps1|eta|, = 0 for |theta| >= eps2|eta|,
// homogeneous of degree 0 (a radially smoothed step in |theta|/|eta|), and
//   psi(eta) = 0 for |eta| <= 1, = 1 for |eta| >= 2.
struct CutoffPair {
    double eps1 = 0.1;
    double eps2 = 0.2;

    double chi(double theta_norm, double eta_norm) const {
        if (eta_norm <= 0.0)
            return 0.0;
        double t = theta_norm / eta_norm;
        if (t <= eps1)
            return 1.0;
        if (t >= eps2)
            return 0.0;
        return 1.0 - smoothstep5((t - eps1) / (eps2 - eps1));
    }
    double psi(double eta_norm) const {
        if (eta_norm <= 1.0)
            return 0.0;
        if (eta_norm >= 2.0)
            return 1.0;
        return smoothstep5(eta_norm - 1.0);
    }
};

// Symbol in separable form: a(x,xi) = sum_t |xi|^{m_t} e^{i q_t theta} g_t(x).
// This is the quantization engine's native format; pluri-homogeneous mesh
// symbols are converted to it by angular Fourier analysis with pruning of
// numerically-zero angular modes.
struct SeparableSymbol {
    struct Term {
        double degree = 0.0;
        int q = 0;
        FourierField g;
    };
    std::vector<Term> terms;

    static SeparableSymbol from_field(const FourierField& g, double degree = 0.0, int q = 0);
    SeparableSymbol& consolidate();  // merge terms with equal (degree, q)

    SeparableSymbol dxi1() const;
    SeparableSymbol dxi2() const;
    SeparableSymbol dx1() const;
    SeparableSymbol dx2() const;
    friend SeparableSymbol operator*(const SeparableSymbol& a, const SeparableSymbol& b);
    SeparableSymbol& operator+=(const SeparableSymbol& o);

    // pointwise evaluation (testing aid)
    cplx eval(int ix, double xi1, double xi2) const;
};

// a#b = sum_{|alpha|<rho} 1/(i^alpha alpha!) dxi^alpha a dx^alpha b, exactly,
// in separable form.
SeparableSymbol sharp_compose(const SeparableSymbol& a, const SeparableSymbol& b, double rho);

// Angular-FFT conversion; angular modes below rel_tol * max are dropped.
SeparableSymbol to_separable(const SymbolExpansion& a, double rel_tol = 1e-15);

// --- quantization ------------------------------------------------------------

// T_a u on the lattice: (T_a u)^(xi) = sum_eta chi(xi-eta,eta) a^(xi-eta,eta)
// psi(eta) u^(eta), where a^(.,eta) is the x-transform of a(.,eta).
// Contributions whose bound is below rel_cut * (largest contribution) are
// skipped; they are orders of magnitude below round-off of the retained sum
// and the skip can only shrink the output spectrum, never grow it.
FourierField apply_paradiff(const SeparableSymbol& a, const FourierField& u,
                            const CutoffPair& cut = {}, double rel_cut = 1e-16);
FourierField apply_paradiff(const SymbolExpansion& a, const FourierField& u,
                            const CutoffPair& cut = {}, double rel_cut = 1e-16);

// Paraproduct T_b u (x-only symbol).
FourierField paraproduct(const FourierField& b, const FourierField& u,
                         const CutoffPair& cut = {});

// Plain Fourier multiplier p(D_x)u (no cutoffs).
FourierField fourier_multiplier(const std::function<double(double, double)>& p,
                                const FourierField& u);
FourierField fourier_multiplier(const std::vector<cplx>& table, const FourierField& u);

// --- section 5.7 multipliers ---------------------------------------------------

// eta(t): 0 on [-1/2,1/2], 1 for |t| >= 1 (quintic ramp); J(s): 0 for
// s <= 0.8, 1 for s >= 0.9 (C^inf ramp). j+- = J((|xi| +- xi2)/(2|xi|)),
// j0 = 1 - j- - j+.
class MultiplierBank {
  public:
    explicit MultiplierBank(const TorusGrid& grid);

    static double eta_profile(double t);
    static double J_profile(double s);

    const std::vector<cplx>& j0() const { return j0_; }
    const std::vector<cplx>& jplus() const { return jp_; }
    const std::vector<cplx>& jminus() const { return jm_; }

    FourierField apply_j0(const FourierField& u) const { return fourier_multiplier(j0_, u); }
    FourierField apply_jplus(const FourierField& u) const { return fourier_multiplier(jp_, u); }
    FourierField apply_jminus(const FourierField& u) const { return fourier_multiplier(jm_, u); }

  private:
    TorusGrid grid_;
    std::vector<cplx> j0_, jp_, jm_;
};

// dx1^{-k}: multiplier eta(xi1) (i xi1)^{-k}; on the integer lattice this
// removes the x1-mean and divides by (i k1)^k.
FourierField dx1_inverse(const FourierField& u, int k);
// dx1^0 = remove the x1-mean.
FourierField dx1_zero(const FourierField& u);

// --- empirical operator order ---------------------------------------------------

struct ProbeResult {
    double slope = 0.0;
    double halfwidth = 0.0;                        // ~2 standard errors
    std::vector<std::pair<int, double>> band_log;  // (k, mean log2 ||T u||)
};

// For random unit-H^0 inputs supported in each dyadic band 2^k, regress
// log2||T u|| against k. Throws if fewer than 3 bands.
ProbeResult operator_order_probe(const std::function<FourierField(const FourierField&)>& apply,
                                 const TorusGrid& grid, const std::vector<int>& bands,
                                 int trials, std::mt19937_64& rng);

}  // namespace dw
