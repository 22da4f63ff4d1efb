#pragma once

#include <vector>

namespace dw {

// Chebyshev-Gauss-Lobatto collocation on an interval [a, b].
// Nodes are ordered from b (j = 0) down to a (j = n), matching the usual
// cos(pi j / n) ordering mapped affinely.
struct ChebGrid {
    ChebGrid(int n, double a, double b);
    int n;                       // polynomial degree; n+1 nodes
    double a, b;
    std::vector<double> nodes;   // size n+1
    std::vector<double> D;       // (n+1)x(n+1) first-derivative matrix, row-major
    // y = D x
    void apply_D(const double* x, double* y) const;
};

}  // namespace dw
