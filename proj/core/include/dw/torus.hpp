#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dw/fft.hpp"

namespace dw {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Discrete torus (R/2piZ) x (R/2pi*ell*Z), sampled on an n1 x n2 grid.
// The frequency lattice is {(k1, k2/ell)} with integer k1 in [-n1/2, n1/2)
// and k2 in [-n2/2, n2/2).  n2 == 1 gives the one-dimensional torus.
class TorusGrid {
  public:
    TorusGrid(int n1, int n2, double ell);

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    double ell() const { return ell_; }
    int dim() const { return n2_ == 1 ? 1 : 2; }
    int size() const { return n1_ * n2_; }

    // Integer lattice index for storage slot i (FFT ordering).
    int k1_of(int i1) const { return i1 <= n1_ / 2 - 1 ? i1 : i1 - n1_; }
    int k2_of(int i2) const { return n2_ == 1 ? 0 : (i2 <= n2_ / 2 - 1 ? i2 : i2 - n2_); }
    int i1_of(int k1) const { return k1 >= 0 ? k1 : k1 + n1_; }
    int i2_of(int k2) const { return k2 >= 0 ? k2 : k2 + n2_; }
    bool holds(int k1, int k2) const {
        return k1 >= -n1_ / 2 && k1 < (n1_ + 1) / 2 && k2 >= -n2_ / 2 && k2 < (n2_ + 1) / 2;
    }

    // Real frequencies xi = (k1, k2/ell).
    double xi1_of(int i1) const { return k1_of(i1); }
    double xi2_of(int i2) const { return k2_of(i2) / ell_; }

    double x1(int i1) const { return 2.0 * pi() * i1 / n1_; }
    double x2(int i2) const { return 2.0 * pi() * ell_ * i2 / n2_; }

    bool operator==(const TorusGrid& o) const {
        return n1_ == o.n1_ && n2_ == o.n2_ && ell_ == o.ell_;
    }
    bool operator!=(const TorusGrid& o) const { return !(*this == o); }

    static double pi() { return 3.14159265358979323846; }

  private:
    int n1_, n2_;
    double ell_;
};

enum class Parity : std::uint8_t { none, ee, oe, eo, oo };

std::string parity_name(Parity p);

// Real bi-periodic function stored as spectral coefficients on the torus
// lattice (FFT ordering, index i1*n2 + i2).  Hermitian symmetry of the
// coefficients is the reality invariant; it is preserved by every operation
// here and enforced on construction from spectra.
class FourierField {
  public:
    FourierField() : grid_(2, 1, 1.0) {}
    explicit FourierField(const TorusGrid& grid, Parity parity = Parity::none)
        : grid_(grid), parity_(parity), coef_(grid.size(), cplx(0.0, 0.0)) {}

    const TorusGrid& grid() const { return grid_; }
    Parity parity() const { return parity_; }
    void set_parity(Parity p) { parity_ = p; }

    cplx& at(int i1, int i2) { return coef_[static_cast<size_t>(i1) * grid_.n2() + i2]; }
    const cplx& at(int i1, int i2) const {
        return coef_[static_cast<size_t>(i1) * grid_.n2() + i2];
    }
    cplx& atk(int k1, int k2) { return at(grid_.i1_of(k1), grid_.i2_of(k2)); }
    const cplx& atk(int k1, int k2) const { return at(grid_.i1_of(k1), grid_.i2_of(k2)); }

    std::vector<cplx>& coeffs() { return coef_; }
    const std::vector<cplx>& coeffs() const { return coef_; }

    // Physical samples (row-major, x1-major).
    std::vector<double> values() const;
    std::vector<cplx> values_complex() const;

    FourierField& operator+=(const FourierField& o);
    FourierField& operator-=(const FourierField& o);
    FourierField& operator*=(double s);
    friend FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
    friend FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
    friend FourierField operator*(double s, FourierField a) { return a *= s; }

    // Enforce the Hermitian (reality) symmetry by averaging c(k), conj(c(-k)).
    void make_real();

  private:
    TorusGrid grid_;
    Parity parity_ = Parity::none;
    std::vector<cplx> coef_;
};

// --- transforms ------------------------------------------------------------

// Samples -> spectral coefficients. Throws on size mismatch.
FourierField forward_transform(const TorusGrid& grid, const std::vector<double>& samples);
FourierField field_from(const TorusGrid& grid, const std::function<double(double, double)>& f);

// --- calculus on fields ----------------------------------------------------

FourierField dx1(const FourierField& f);
FourierField dx2(const FourierField& f);
FourierField laplacian(const FourierField& f);

// Pointwise product with 2x zero-padding (removes aliasing of quadratic
// products entirely; the classical 2/3 rule is a weaker form of the same).
FourierField multiply(const FourierField& a, const FourierField& b);
// Pointwise quotient a/b evaluated on the grid (b must not vanish).
FourierField divide(const FourierField& a, const FourierField& b);

double mean(const FourierField& f);          // zero-frequency coefficient
double mean_square(const FourierField& f);   // grid average of f^2
double max_abs(const FourierField& f);       // max over grid of |f|
double min_value(const FourierField& f, int* argmin = nullptr);

// H^s norm: ( sum <xi>^{2s} |c(xi)|^2 )^{1/2},  <xi> = (1+|xi|^2)^{1/2}.
double sobolev_norm(const FourierField& f, double s);

// --- Littlewood-Paley ------------------------------------------------------

// The fixed bump: 1 on [-1.1,1.1], 0 outside [-1.9,1.9], the C^2 monotone
// quintic in between.  phi_k(xi) = lp_bump(2^{-k} <xi>).
double lp_bump(double t);
double lp_phi_k(int k, double bracket_xi);

// Dyadic block Delta_k f; spectrum contained in {2^{k-1} < <xi> < 2^{k+1}}.
FourierField lp_block(const FourierField& f, int k);
// max k with possibly nonempty block on this grid.
int lp_max_block(const TorusGrid& grid);

// --- parity ----------------------------------------------------------------

// Projection onto the parity class (idempotent).
FourierField enforce_parity(const FourierField& f, Parity p);
// Relative distance to the parity class.
double parity_defect(const FourierField& f, Parity p);

// --- randomized fields (property suites, probes) ---------------------------

struct RandomFieldSpec {
    Parity parity = Parity::none;
    double band_lo = 0.0;    // keep modes with band_lo <= <xi>
    double band_hi = 1e300;  // ... and <xi> <= band_hi
    double decay = 0.0;      // coefficient magnitude ~ <xi>^{-decay}
    bool unit_h0 = true;     // normalize ||f||_{H^0} = 1
};
FourierField random_field(const TorusGrid& grid, const RandomFieldSpec& spec,
                          std::mt19937_64& rng);

// Random field with spectrum in the dyadic shell of Delta_k, shaped by the
// block filter, normalized to ||f||_{H^0} = 1.
FourierField random_band_field(const TorusGrid& grid, int k, std::mt19937_64& rng);

// --- quintic and C^inf profiles --------------------------------------------

// C^2 monotone quintic step: 0 for u<=0, 1 for u>=1.
double smoothstep5(double u);
// C^inf step built from exp(-1/u): 0 for u<=0, 1 for u>=1.
double smoothstep_cinf(double u);

// --- serialization ----------------------------------------------------------

// Self-describing dump: first line "# {json grid header}", then CSV rows
// "k1,k2,re,im" for the nonzero coefficients.
void save_field_csv(const FourierField& f, const std::string& path,
                    const std::string& extra_json = "");
FourierField load_field_csv(const std::string& path);

}  // namespace dw
