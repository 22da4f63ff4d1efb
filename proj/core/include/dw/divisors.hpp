#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dw {

// Query for the small-divisor condition
//   |k2 - (nu k1^2 + kappa0 + kappa1/k1^2)| >= 1/k1^{2+delta}
// over integer pairs with k1 in [N, k1max].
struct DiophantineQuery {
    double nu = 0.0;
    double kappa0 = 0.0;
    double kappa1 = 0.0;
    double delta = 0.5;   // in [0, 1)
    int N = 2;
    int k1max = 10000;
    // exponent override: the base-point check of the measure analysis uses
    // |k2 - nu k1^2 - kappa0| >= 1/k1^{1+delta'}
    double exponent() const { return 2.0 + delta; }
};

struct Violation {
    long long k1 = 0, k2 = 0;
    double gap = 0.0;
    double threshold = 0.0;
};

// Lipschitz-certified perturbation: piecewise-linear table through (xs, ys)
// with declared constant L; empty table means identically zero.
struct LipschitzPL {
    std::vector<double> xs, ys;
    double L = 0.0;
    double operator()(double x) const;
};

// One-parameter family nu(eps) = nu_bar + nu_prime eps^2 + eps phi1(eps^2),
// kappa0(eps) = kappa0_bar + phi2(eps^2), kappa1(eps) = kappa1_bar + phi3(eps^2).
struct FamilyModel {
    double nu_bar = 0.0, nu_prime = 1.0;
    double kappa0_bar = 0.0, kappa1_bar = 0.0;
    LipschitzPL phi1, phi2, phi3;
    double delta = 0.5, delta_prime = 0.25;  // 1 > delta > delta' > 0
    int n = 2;                               // base-point check starts at k1 = n
    int k1max = 20000;

    double omega(double lambda, long long k1) const;  // drift of the divisor
    double d_of(long long k1, long long k2) const;    // base-point divisor
};

struct MeasurePoint {
    double r = 0.0;
    double excluded_fraction = 0.0;
    long long min_nonempty_k1 = 0;
    bool non_asymptotic = false;
};

struct DiophantineReport {
    std::vector<Violation> violations;
    bool pass = false;
    long long scanned_k1 = 0;
    std::vector<MeasurePoint> measure_curve;
    double fitted_K = 0.0;
    double fitted_exponent = 0.0;

    std::string to_json() const;
    void save_measure_csv(const std::string& path) const;
};

// Scan the condition over k1 in [N, k1max]; candidates k2 are the integers
// within +-2 of the parabola (the bound cannot fail elsewhere since the
// threshold is < 1).  Comparisons within a factor 2 of the threshold are
// re-evaluated in 128-bit float arithmetic.
DiophantineReport scan_condition(const DiophantineQuery& q);
// Same inequality with a caller-chosen exponent p: |k2 - ...| >= 1/k1^p.
DiophantineReport scan_condition_power(const DiophantineQuery& q, double power,
                                       bool use_kappa1);

// Exclusion sets E(r,k1,k2) = {lambda in [0,r] : |d(k) - omega(lambda,k1)| <
// k1^{-4-delta}}: measure their union over k for each r, fit the measure law,
// and flag r outside the asymptotic regime r <= 1/(4|nu'| n^{3+delta'}).
// Throws when the base point fails its diophantine hypothesis.
DiophantineReport exclusion_measure(const FamilyModel& m, const std::vector<double>& r_grid,
                                    int samples = 64);

// Enumeration-based check of the three exclusion-set claims at a given r:
// a nonempty-E lower bound on k1, a count bound per k1, and a length bound.
struct LemmaClaims {
    double r = 0.0;
    long long min_nonempty_k1 = 0;
    double predicted_min_k1 = 0.0;       // (4 |nu'| r)^{-1/(3+delta')}
    long long max_count_per_k1 = 0;
    double count_bound_constant = 0.0;   // fitted A2 with count <= A2 (r k1^2 + 1)
    double max_scaled_length = 0.0;      // max |E| k1^{4+delta}
    double length_bound_constant = 0.0;  // 4/|nu'|
    bool count_bound_ok = false;
    bool length_bound_ok = false;
};
LemmaClaims verify_lemma_claims(const FamilyModel& m, double r, int samples = 64);

}  // namespace dw
