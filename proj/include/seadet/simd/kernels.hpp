#pragma once

// Data-parallel inner loops used by the SVM solver and the spectral feature.
// Every routine has a scalar reference implementation; wider variants are
// chosen at runtime from the CPU feature set and must agree with the scalar
// reference (see tests/simd_kernels_test.cpp).

#include <complex>
#include <cstddef>
#include <string_view>

namespace seadet::simd {

enum class Isa { Scalar, Avx2 };

// Distance used inside the exponential of the radial kernel:
//   Laplacian -> exp(-gamma * ||a - b||)
//   Gaussian  -> exp(-gamma * ||a - b||^2)
enum class KernelForm { Laplacian, Gaussian };

/// Structure-of-arrays view over n three-dimensional points.
struct Points3 {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  std::size_t n = 0;
};

struct KernelTable {
  Isa isa;
  // out[k] = scale * sign[k] * exp(-gamma * dist(center, p_k)); sign may be null.
  void (*kernel_row)(Points3 pts, const double* center, double gamma, KernelForm form,
                     const double* sign, double scale, double* out);
  // sum_k weight[k] * exp(-gamma * dist(center, p_k))
  double (*kernel_sum)(Points3 pts, const double* center, double gamma, KernelForm form,
                       const double* weight);
  // g[k] += a * u[k] + b * v[k]
  void (*axpy2)(double* g, double a, const double* u, double b, const double* v, std::size_t n);
  // out[k] = |z[k]|
  void (*cabs)(const std::complex<double>* z, std::size_t n, double* out);
  // out[k] = exp(in[k])
  void (*exp)(const double* in, std::size_t n, double* out);
};

const KernelTable& scalar_kernels();

/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// Table used by the library. Defaults to the widest supported ISA; the
/// SEADET_ISA environment variable ("scalar" or "avx2") overrides it.
const KernelTable& active_kernels();

/// Throws seadet::Error(InvalidParameter) if the ISA is unavailable.
void select_isa(Isa isa);

Isa active_isa();
std::string_view to_string(Isa isa);

}  // namespace seadet::simd
