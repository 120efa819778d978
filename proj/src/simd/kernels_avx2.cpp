// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "seadet/simd/kernels.hpp"
#include "simd/kernels_internal.hpp"

namespace seadet::simd::detail {
namespace {

// Cephes-style double exponential: range reduction by ln2 in two parts and a
// (3,4) rational approximation on [-ln2/2, ln2/2].
inline __m256d exp_pd(__m256d x) {
  const __m256d kHi = _mm256_set1_pd(709.78271289338397);
  const __m256d kLo = _mm256_set1_pd(-708.39641853226408);
  const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  const __m256d under = _mm256_cmp_pd(x, kLo, _CMP_LT_OQ);
  const __m256d over = _mm256_cmp_pd(x, kHi, _CMP_GT_OQ);
  __m256d v = _mm256_min_pd(_mm256_max_pd(x, kLo), kHi);

  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(v, _mm256_set1_pd(1.4426950408889634073599)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  v = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125e-1), v);
  v = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212e-6), v);

  const __m256d xx = _mm256_mul_pd(v, v);
  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, v);
  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.00000000000000000009e0));
  __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  r = _mm256_fmadd_pd(r, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^n applied as 2^(n/2) * 2^(n - n/2) so n = 1024 near the top of the range does not overflow.
  const __m128i n32 = _mm256_cvtpd_epi32(fx);
  const __m128i h1 = _mm_srai_epi32(n32, 1);
  const __m128i h2 = _mm_sub_epi32(n32, h1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256i p1 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(h1), bias), 52);
  const __m256i p2 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(h2), bias), 52);
  r = _mm256_mul_pd(_mm256_mul_pd(r, _mm256_castsi256_pd(p1)), _mm256_castsi256_pd(p2));

  r = _mm256_blendv_pd(r, _mm256_setzero_pd(), under);
  r = _mm256_blendv_pd(r, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
  return _mm256_blendv_pd(r, x, nan_mask);
}

inline __m256d distance_pd(__m256d dx, __m256d dy, __m256d dz, KernelForm form) {
  __m256d sq = _mm256_mul_pd(dx, dx);
  sq = _mm256_fmadd_pd(dy, dy, sq);
  sq = _mm256_fmadd_pd(dz, dz, sq);
  return form == KernelForm::Laplacian ? _mm256_sqrt_pd(sq) : sq;
}

inline __m256d kernel_block(const double* x, const double* y, const double* z, const double* c,
                            __m256d neg_gamma, KernelForm form) {
  const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x), _mm256_set1_pd(c[0]));
  const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y), _mm256_set1_pd(c[1]));
  const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(z), _mm256_set1_pd(c[2]));
  return exp_pd(_mm256_mul_pd(neg_gamma, distance_pd(dx, dy, dz, form)));
}

void kernel_row(Points3 pts, const double* center, double gamma, KernelForm form,
                const double* sign, double scale, double* out) {
  const __m256d neg_gamma = _mm256_set1_pd(-gamma);
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 4 <= pts.n; k += 4) {
    __m256d v = _mm256_mul_pd(vscale, kernel_block(pts.x + k, pts.y + k, pts.z + k, center,
                                                   neg_gamma, form));
    if (sign) v = _mm256_mul_pd(v, _mm256_loadu_pd(sign + k));
    _mm256_storeu_pd(out + k, v);
  }
  if (k < pts.n) {
    alignas(32) double bx[4] = {}, by[4] = {}, bz[4] = {}, bs[4] = {}, bo[4];
    const std::size_t rem = pts.n - k;
    std::copy_n(pts.x + k, rem, bx);
    std::copy_n(pts.y + k, rem, by);
    std::copy_n(pts.z + k, rem, bz);
    __m256d v = _mm256_mul_pd(vscale, kernel_block(bx, by, bz, center, neg_gamma, form));
    if (sign) {
      std::copy_n(sign + k, rem, bs);
      v = _mm256_mul_pd(v, _mm256_load_pd(bs));
    }
    _mm256_store_pd(bo, v);
    std::copy_n(bo, rem, out + k);
  }
}

double kernel_sum(Points3 pts, const double* center, double gamma, KernelForm form,
                  const double* weight) {
  const __m256d neg_gamma = _mm256_set1_pd(-gamma);
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= pts.n; k += 4) {
    const __m256d v = kernel_block(pts.x + k, pts.y + k, pts.z + k, center, neg_gamma, form);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(weight + k), v, acc);
  }
  if (k < pts.n) {
    alignas(32) double bx[4] = {}, by[4] = {}, bz[4] = {}, bw[4] = {};
    const std::size_t rem = pts.n - k;
    std::copy_n(pts.x + k, rem, bx);
    std::copy_n(pts.y + k, rem, by);
    std::copy_n(pts.z + k, rem, bz);
    std::copy_n(weight + k, rem, bw);
    const __m256d v = kernel_block(bx, by, bz, center, neg_gamma, form);
    acc = _mm256_fmadd_pd(_mm256_load_pd(bw), v, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void axpy2(double* g, double a, const double* u, double b, const double* v, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d acc = _mm256_loadu_pd(g + k);
    acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(u + k), acc);
    acc = _mm256_fmadd_pd(vb, _mm256_loadu_pd(v + k), acc);
    _mm256_storeu_pd(g + k, acc);
  }
  for (; k < n; ++k) g[k] = std::fma(b, v[k], std::fma(a, u[k], g[k]));
}

void cabs(const std::complex<double>* z, std::size_t n, double* out) {
  const double* p = reinterpret_cast<const double*>(z);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d a = _mm256_loadu_pd(p + 2 * k);
    const __m256d b = _mm256_loadu_pd(p + 2 * k + 4);
    // hadd pairs within 128-bit lanes: [|z0|^2, |z2|^2, |z1|^2, |z3|^2]
    const __m256d s = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
    const __m256d ordered = _mm256_permute4x64_pd(s, _MM_SHUFFLE(3, 1, 2, 0));
    _mm256_storeu_pd(out + k, _mm256_sqrt_pd(ordered));
  }
  for (; k < n; ++k) {
    const double re = z[k].real();
    const double im = z[k].imag();
    out[k] = std::sqrt(re * re + im * im);
  }
}

void vexp(const double* in, std::size_t n, double* out) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) _mm256_storeu_pd(out + k, exp_pd(_mm256_loadu_pd(in + k)));
  if (k < n) {
    alignas(32) double buf[4] = {};
    std::copy_n(in + k, n - k, buf);
    _mm256_store_pd(buf, exp_pd(_mm256_load_pd(buf)));
    std::copy_n(buf, n - k, out + k);
  }
}

constexpr KernelTable kAvx2{Isa::Avx2, kernel_row, kernel_sum, axpy2, cabs, vexp};

}  // namespace

const KernelTable& avx2_table() { return kAvx2; }

}  // namespace seadet::simd::detail
