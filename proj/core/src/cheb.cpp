#include "dw/cheb.hpp"

#include <cmath>
#include <stdexcept>

namespace dw {

// Standard CGL differentiation matrix with the negative-sum trick on the
// diagonal for round-off robustness.
ChebGrid::ChebGrid(int n_, double a_, double b_) : n(n_), a(a_), b(b_) {
    if (n < 2)
        throw std::runtime_error("ChebGrid: need n >= 2");
    const double pi = 3.14159265358979323846;
    std::vector<double> t(n + 1);
    for (int j = 0; j <= n; ++j)
        t[j] = std::cos(pi * j / n);
    nodes.resize(n + 1);
    for (int j = 0; j <= n; ++j)
        nodes[j] = a + (b - a) * 0.5 * (t[j] + 1.0);

    std::vector<double> c(n + 1, 1.0);
    c[0] = c[n] = 2.0;
    D.assign(static_cast<size_t>(n + 1) * (n + 1), 0.0);
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            if (i == j)
                continue;
            double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            D[static_cast<size_t>(i) * (n + 1) + j] = (c[i] / c[j]) * sgn / (t[i] - t[j]);
        }
    }
    for (int i = 0; i <= n; ++i) {
        double s = 0.0;
        for (int j = 0; j <= n; ++j)
            if (j != i)
                s += D[static_cast<size_t>(i) * (n + 1) + j];
        D[static_cast<size_t>(i) * (n + 1) + i] = -s;
    }
    // chain rule for the affine map t -> x
    double scale = 2.0 / (b - a);
    for (auto& v : D)
        v *= scale;
}

void ChebGrid::apply_D(const double* x, double* y) const {
    for (int i = 0; i <= n; ++i) {
        double s = 0.0;
        const double* row = D.data() + static_cast<size_t>(i) * (n + 1);
        for (int j = 0; j <= n; ++j)
            s += row[j] * x[j];
        y[i] = s;
    }
}

}  // namespace dw
