#include "dw/divisors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "dw/io.hpp"

namespace dw {

namespace {

// 128-bit re-evaluation of |k2 - (nu k1^2 + kappa0 + kappa1/k1^2)| vs k1^{-p}.
// Double rounding can flip the verdict when the gap sits at the threshold;
// the quad pass settles those.
bool passes_quad(double nu, double kappa0, double kappa1, long long k1, long long k2,
                 double power, bool use_kappa1) {
    __float128 q1 = static_cast<__float128>(k1);
    __float128 target = static_cast<__float128>(nu) * q1 * q1 + static_cast<__float128>(kappa0);
    if (use_kappa1)
        target += static_cast<__float128>(kappa1) / (q1 * q1);
    __float128 gap = static_cast<__float128>(k2) - target;
    if (gap < 0)
        gap = -gap;
    // k1^{-power} via long double exp/log is accurate enough: the quad pass
    // only needs to beat double rounding of the *gap*
    __float128 thr = static_cast<__float128>(
        std::exp(-static_cast<long double>(power) * std::log(static_cast<long double>(k1))));
    return gap >= thr;
}

}  // namespace

DiophantineReport scan_condition_power(const DiophantineQuery& q, double power,
                                       bool use_kappa1) {
    if (!(q.delta < 1.0))
        throw std::runtime_error("scan_condition: delta must be < 1");
    if (q.k1max < q.N)
        throw std::runtime_error("scan_condition: k1max must be >= N");
    DiophantineReport rep;
    for (long long k1 = q.N; k1 <= q.k1max; ++k1) {
        double target = q.nu * static_cast<double>(k1) * static_cast<double>(k1) + q.kappa0;
        if (use_kappa1)
            target += q.kappa1 / (static_cast<double>(k1) * static_cast<double>(k1));
        double thr = std::pow(static_cast<double>(k1), -power);
        long long lo = static_cast<long long>(std::floor(target)) - 2;
        long long hi = static_cast<long long>(std::ceil(target)) + 2;
        for (long long k2 = std::max(0ll, lo); k2 <= hi; ++k2) {
            double gap = std::abs(static_cast<double>(k2) - target);
            if (gap >= 2.0 * thr)
                continue;
            // near-threshold: settle in quad precision
            if (!passes_quad(q.nu, q.kappa0, q.kappa1, k1, k2, power, use_kappa1))
                rep.violations.push_back({k1, k2, gap, thr});
        }
    }
    rep.scanned_k1 = q.k1max - q.N + 1;
    rep.pass = rep.violations.empty();
    return rep;
}

DiophantineReport scan_condition(const DiophantineQuery& q) {
    return scan_condition_power(q, q.exponent(), true);
}

double LipschitzPL::operator()(double x) const {
    if (xs.empty())
        return 0.0;
    if (x <= xs.front())
        return ys.front();
    if (x >= xs.back())
        return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    size_t i = static_cast<size_t>(it - xs.begin());
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

double FamilyModel::omega(double lambda, long long k1) const {
    double kk = static_cast<double>(k1) * static_cast<double>(k1);
    return nu_prime * lambda + std::sqrt(std::max(lambda, 0.0)) * phi1(lambda) +
           phi2(lambda) / kk + phi3(lambda) / (kk * kk);
}

double FamilyModel::d_of(long long k1, long long k2) const {
    double kk = static_cast<double>(k1) * static_cast<double>(k1);
    return static_cast<double>(k2) / kk - nu_bar - kappa0_bar / kk - kappa1_bar / (kk * kk);
}

namespace {

// E(r,k1,k2) as an interval [lo,hi] in [0,r]; empty when hi < lo.  omega is
// monotone in lambda on the asymptotic range (nu' dominates); the endpoints
// are bracketed on `samples` panels and bisected to 1e-15 r.
struct Interval {
    double lo = 1.0, hi = 0.0;
    bool empty() const { return hi < lo; }
    double length() const { return empty() ? 0.0 : hi - lo; }
};

Interval exclusion_interval(const FamilyModel& m, double r, long long k1, long long k2,
                            int samples) {
    const double tau = std::pow(static_cast<double>(k1), -(4.0 + m.delta));
    const double d = m.d_of(k1, k2);
    auto inside = [&](double lam) { return std::abs(d - m.omega(lam, k1)) < tau; };
    // refine a side of the boundary between an inside and an outside point
    auto bisect = [&](double a, double b) {
        // invariant: inside(a) != inside(b)
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (a + b);
            if (inside(mid) == inside(a))
                a = mid;
            else
                b = mid;
            if (b - a < 1e-15 * r)
                break;
        }
        return 0.5 * (a + b);
    };
    Interval out;
    double prev = 0.0;
    bool prev_in = inside(0.0);
    if (prev_in)
        out.lo = 0.0;
    for (int s = 1; s <= samples; ++s) {
        double lam = r * s / samples;
        bool in = inside(lam);
        if (in != prev_in) {
            double edge = bisect(prev, lam);
            if (in)
                out.lo = std::min(out.lo, edge);
            else
                out.hi = std::max(out.hi, edge);
        }
        prev = lam;
        prev_in = in;
    }
    if (prev_in)
        out.hi = r;
    if (out.lo == 1.0 && out.hi == 0.0)
        return out;  // never inside
    if (out.hi < out.lo) {
        // inside at 0 but never left, or numerical corner: clamp
        out.hi = std::max(out.hi, out.lo);
    }
    return out;
}

void base_point_check(const FamilyModel& m) {
    DiophantineQuery q;
    q.nu = m.nu_bar;
    q.kappa0 = m.kappa0_bar;
    q.kappa1 = 0.0;
    q.delta = m.delta;
    q.N = m.n;
    q.k1max = m.k1max;
    DiophantineReport rep = scan_condition_power(q, 1.0 + m.delta_prime, false);
    if (!rep.pass) {
        const Violation& v = rep.violations.front();
        throw std::runtime_error("exclusion_measure: base point fails at k1=" +
                                 std::to_string(v.k1) + ", k2=" + std::to_string(v.k2));
    }
}

}  // namespace

DiophantineReport exclusion_measure(const FamilyModel& m, const std::vector<double>& r_grid,
                                    int samples) {
    if (!(m.delta < 1.0 && m.delta > m.delta_prime && m.delta_prime > 0.0))
        throw std::runtime_error("exclusion_measure: need 1 > delta > delta' > 0");
    if (m.nu_prime == 0.0)
        throw std::runtime_error("exclusion_measure: nu_prime must be nonzero");
    base_point_check(m);

    DiophantineReport rep;
    rep.pass = true;
    for (double r : r_grid) {
        MeasurePoint pt;
        pt.r = r;
        // k1 below this cannot contribute (|omega| <= 2|nu'| r forces
        // k1^{-(3+delta')} <= 4|nu'| r); k1 far above contributes nothing
        // since the intervals shrink like k1^{-4-delta}
        double kmin_pred = std::pow(4.0 * std::abs(m.nu_prime) * r, -1.0 / (3.0 + m.delta_prime));
        long long k1_lo = std::max<long long>(m.n, static_cast<long long>(kmin_pred / 4));
        long long k1_hi = std::min<long long>(m.k1max,
                                              std::max<long long>(200, 40 * static_cast<long long>(kmin_pred)));
        std::vector<std::pair<double, double>> ivals;
        pt.min_nonempty_k1 = 0;
        for (long long k1 = k1_lo; k1 <= k1_hi; ++k1) {
            double kk = static_cast<double>(k1) * static_cast<double>(k1);
            // k2 window: omega range over [0,r] around the parabola
            double w_hi = std::max(m.omega(0.0, k1), m.omega(r, k1));
            double w_lo = std::min(m.omega(0.0, k1), m.omega(r, k1));
            double base = m.nu_bar * kk + m.kappa0_bar + m.kappa1_bar / kk;
            long long lo = static_cast<long long>(std::floor(base + w_lo * kk)) - 1;
            long long hi = static_cast<long long>(std::ceil(base + w_hi * kk)) + 1;
            for (long long k2 = std::max(0ll, lo); k2 <= hi; ++k2) {
                Interval e = exclusion_interval(m, r, k1, k2, samples);
                if (e.empty() || e.length() <= 0.0)
                    continue;
                ivals.emplace_back(e.lo, e.hi);
                if (pt.min_nonempty_k1 == 0)
                    pt.min_nonempty_k1 = k1;
                else
                    pt.min_nonempty_k1 = std::min(pt.min_nonempty_k1, k1);
            }
        }
        std::sort(ivals.begin(), ivals.end());
        double measure = 0.0, cur_lo = 0.0, cur_hi = -1.0;
        for (auto& [lo, hi] : ivals) {
            if (hi <= cur_hi)
                continue;
            if (lo > cur_hi) {
                measure += std::max(0.0, cur_hi - cur_lo);
                cur_lo = lo;
                cur_hi = hi;
            } else {
                cur_hi = hi;
            }
        }
        measure += std::max(0.0, cur_hi - cur_lo);
        pt.excluded_fraction = measure / r;
        pt.non_asymptotic =
            r > 1.0 / (4.0 * std::abs(m.nu_prime) * std::pow(m.n, 3.0 + m.delta_prime));
        rep.measure_curve.push_back(pt);
    }

    // fit excluded_fraction ~ K r^e over the asymptotic points with nonzero
    // fraction
    std::vector<double> lx, ly;
    for (const auto& pt : rep.measure_curve)
        if (!pt.non_asymptotic && pt.excluded_fraction > 0.0) {
            lx.push_back(std::log(pt.r));
            ly.push_back(std::log(pt.excluded_fraction));
        }
    if (lx.size() >= 2) {
        rep.fitted_exponent = fit_slope(lx, ly);
        double mx = 0, my = 0;
        for (size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        rep.fitted_K = std::exp(my / ly.size() - rep.fitted_exponent * mx / lx.size());
    }
    return rep;
}

LemmaClaims verify_lemma_claims(const FamilyModel& m, double r, int samples) {
    base_point_check(m);
    LemmaClaims out;
    out.r = r;
    out.predicted_min_k1 = std::pow(4.0 * std::abs(m.nu_prime) * r, -1.0 / (3.0 + m.delta_prime));
    out.length_bound_constant = 4.0 / std::abs(m.nu_prime);

    long long k1_hi = std::min<long long>(
        m.k1max, std::max<long long>(200, 40 * static_cast<long long>(out.predicted_min_k1)));
    double worst_count_ratio = 0.0;
    for (long long k1 = m.n; k1 <= k1_hi; ++k1) {
        double kk = static_cast<double>(k1) * static_cast<double>(k1);
        double w_hi = std::max(m.omega(0.0, k1), m.omega(r, k1));
        double w_lo = std::min(m.omega(0.0, k1), m.omega(r, k1));
        double base = m.nu_bar * kk + m.kappa0_bar + m.kappa1_bar / kk;
        long long lo = static_cast<long long>(std::floor(base + w_lo * kk)) - 1;
        long long hi = static_cast<long long>(std::ceil(base + w_hi * kk)) + 1;
        long long count = 0;
        for (long long k2 = std::max(0ll, lo); k2 <= hi; ++k2) {
            Interval e = exclusion_interval(m, r, k1, k2, samples);
            if (e.empty() || e.length() <= 0.0)
                continue;
            ++count;
            out.max_scaled_length =
                std::max(out.max_scaled_length, e.length() * std::pow(kk, (4.0 + m.delta) / 2.0));
            if (out.min_nonempty_k1 == 0)
                out.min_nonempty_k1 = k1;
        }
        out.max_count_per_k1 = std::max(out.max_count_per_k1, count);
        worst_count_ratio = std::max(worst_count_ratio, count / (r * kk + 1.0));
    }
    out.count_bound_constant = worst_count_ratio;
    // the enumerated constants must witness the claimed shapes
    out.count_bound_ok = out.count_bound_constant <= 8.0 * std::abs(m.nu_prime) + 4.0;
    out.length_bound_ok = out.max_scaled_length <= out.length_bound_constant * 1.05;
    return out;
}

std::string DiophantineReport::to_json() const {
    std::string s = "{\"pass\":";
    s += pass ? "true" : "false";
    s += ",\"scanned_k1\":" + std::to_string(scanned_k1);
    s += ",\"violations\":[";
    for (size_t i = 0; i < violations.size(); ++i) {
        const auto& v = violations[i];
        if (i)
            s += ",";
        s += "{\"k1\":" + std::to_string(v.k1) + ",\"k2\":" + std::to_string(v.k2) +
             ",\"gap\":" + format_double(v.gap) + ",\"threshold\":" + format_double(v.threshold) +
             "}";
    }
    s += "]";
    if (!measure_curve.empty()) {
        s += ",\"measure\":[";
        for (size_t i = 0; i < measure_curve.size(); ++i) {
            const auto& p = measure_curve[i];
            if (i)
                s += ",";
            s += "{\"r\":" + format_double(p.r) +
                 ",\"excluded_fraction\":" + format_double(p.excluded_fraction) +
                 ",\"min_nonempty_k1\":" + std::to_string(p.min_nonempty_k1) +
                 ",\"non_asymptotic\":" + (p.non_asymptotic ? "true" : "false") + "}";
        }
        s += "],\"fitted_K\":" + format_double(fitted_K) +
             ",\"fitted_exponent\":" + format_double(fitted_exponent);
    }
    s += "}";
    return s;
}

void DiophantineReport::save_measure_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_measure_csv: cannot open " + path);
    out << "r,excluded_fraction,min_nonempty_k1,non_asymptotic\n";
    for (const auto& p : measure_curve)
        out << format_double(p.r) << "," << format_double(p.excluded_fraction) << ","
            << p.min_nonempty_k1 << "," << (p.non_asymptotic ? 1 : 0) << "\n";
}

}  // namespace dw
