#include <cmath>

#include "seadet/simd/kernels.hpp"
#include "simd/kernels_internal.hpp"

namespace seadet::simd {
namespace {

inline double distance(const Points3& pts, const double* c, std::size_t k, KernelForm form) {
  const double dx = pts.x[k] - c[0];
  const double dy = pts.y[k] - c[1];
  const double dz = pts.z[k] - c[2];
  const double sq = dx * dx + dy * dy + dz * dz;
  return form == KernelForm::Laplacian ? std::sqrt(sq) : sq;
}

void kernel_row(Points3 pts, const double* center, double gamma, KernelForm form,
                const double* sign, double scale, double* out) {
  for (std::size_t k = 0; k < pts.n; ++k) {
    const double v = std::exp(-gamma * distance(pts, center, k, form));
    out[k] = sign ? scale * sign[k] * v : scale * v;
  }
}

double kernel_sum(Points3 pts, const double* center, double gamma, KernelForm form,
                  const double* weight) {
  double acc = 0.0;
  for (std::size_t k = 0; k < pts.n; ++k) {
    acc += weight[k] * std::exp(-gamma * distance(pts, center, k, form));
  }
  return acc;
}

void axpy2(double* g, double a, const double* u, double b, const double* v, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) g[k] += a * u[k] + b * v[k];
}

void cabs(const std::complex<double>* z, std::size_t n, double* out) {
  for (std::size_t k = 0; k < n; ++k) {
    const double re = z[k].real();
    const double im = z[k].imag();
    out[k] = std::sqrt(re * re + im * im);
  }
}

void vexp(const double* in, std::size_t n, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = std::exp(in[k]);
}

constexpr KernelTable kScalar{Isa::Scalar, kernel_row, kernel_sum, axpy2, cabs, vexp};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace seadet::simd
