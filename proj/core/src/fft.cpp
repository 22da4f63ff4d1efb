#include "dw/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace dw {
namespace fft {

namespace {

std::mutex g_plan_mutex;

fftw_plan plan_for(int n1, int n2, int sign) {
    // Plans created once with FFTW_ESTIMATE on a scratch buffer, then reused
    // via fftw_execute_dft on caller arrays (alignment-agnostic: ESTIMATE
    // plans do not assume SIMD alignment).
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto key = std::make_tuple(n1, n2, sign);
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    std::vector<cplx> scratch(static_cast<size_t>(n1) * (n2 > 0 ? n2 : 1));
    fftw_complex* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = (n2 == 0)
                         ? fftw_plan_dft_1d(n1, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
                         : fftw_plan_dft_2d(n1, n2, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan)
        throw std::runtime_error("fftw plan creation failed");
    cache.emplace(key, plan);
    return plan;
}

void exec(int n1, int n2, int sign, const cplx* in, cplx* out) {
    fftw_plan plan = plan_for(n1, n2, sign);
    // fftw_execute_dft does not modify the input array for out-of-place
    // transforms; the const_cast is required by the C API only.
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void forward(int n1, int n2, const cplx* in, cplx* out) {
    exec(n1, n2, FFTW_FORWARD, in, out);
    const double scale = 1.0 / (static_cast<double>(n1) * n2);
    const size_t n = static_cast<size_t>(n1) * n2;
    for (size_t i = 0; i < n; ++i)
        out[i] *= scale;
}

void inverse(int n1, int n2, const cplx* in, cplx* out) { exec(n1, n2, FFTW_BACKWARD, in, out); }

void forward(int n1, int n2, std::vector<cplx>& a) { forward(n1, n2, a.data(), a.data()); }
void inverse(int n1, int n2, std::vector<cplx>& a) { inverse(n1, n2, a.data(), a.data()); }

void forward1d(int n, const cplx* in, cplx* out) {
    exec(n, 0, FFTW_FORWARD, in, out);
    const double scale = 1.0 / n;
    for (int i = 0; i < n; ++i)
        out[i] *= scale;
}

void inverse1d(int n, const cplx* in, cplx* out) { exec(n, 0, FFTW_BACKWARD, in, out); }

}  // namespace fft
}  // namespace dw
