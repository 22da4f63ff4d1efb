#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace dw {

using cplx = std::complex<double>;

// Thin FFTW wrapper for complex 2D transforms on a row-major (n1 x n2)
// array indexed as a[i1*n2 + i2].
//
// Conventions: forward() returns Fourier-series coefficients, i.e.
//   u(x) = sum_k  c_k exp(i k.x)   with   c_k = (1/N) sum_x u(x) exp(-i k.x),
// so forward() scales by 1/(n1*n2) and inverse() does not scale.
//
// Plans are cached per (n1,n2,direction); plan creation is serialized
// (FFTW planning is not thread-safe), execution uses the new-array
// interface and may run concurrently.
namespace fft {

void forward(int n1, int n2, const cplx* in, cplx* out);
void inverse(int n1, int n2, const cplx* in, cplx* out);

// In-place variants.
void forward(int n1, int n2, std::vector<cplx>& a);
void inverse(int n1, int n2, std::vector<cplx>& a);

// 1D helpers (used for angular spectra of symbols and x2-line transforms).
void forward1d(int n, const cplx* in, cplx* out);
void inverse1d(int n, const cplx* in, cplx* out);

}  // namespace fft
}  // namespace dw
