#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace seadet::fft {

using cplx = std::complex<double>;

/// Reusable plan for the unnormalized forward DFT
///   X[k] = sum_n x[n] exp(-2 pi i n k / N),  k = 0..N-1.
/// Power-of-two lengths use an iterative radix-2 transform; other lengths go
/// through Bluestein's chirp-z convolution on a padded power-of-two plan.
class Plan {
 public:
  explicit Plan(std::size_t n);
  ~Plan();
  Plan(Plan&&) noexcept;
  Plan& operator=(Plan&&) noexcept;

  std::size_t size() const noexcept { return n_; }

  /// In-place forward transform; data.size() must equal size().
  void forward(std::span<cplx> data) const;

  /// In-place inverse transform including the 1/N factor.
  void inverse(std::span<cplx> data) const;

 private:
  void radix2(std::span<cplx> data, bool invert) const;
  void bluestein(std::span<cplx> data) const;

  std::size_t n_ = 0;
  bool pow2_ = false;
  std::vector<cplx> twiddle_;          // exp(-2 pi i k / n), k < n/2 (pow2 only)
  std::vector<std::size_t> bitrev_;
  std::vector<cplx> chirp_;            // exp(-i pi k^2 / n)  (Bluestein only)
  std::vector<cplx> chirp_filter_fft_;
  std::unique_ptr<Plan> inner_;
};

/// One-shot forward transform of a complex sequence.
std::vector<cplx> forward(std::span<const cplx> x);

/// One-shot forward transform of a real sequence.
std::vector<cplx> forward_real(std::span<const double> x);

bool is_power_of_two(std::size_t n) noexcept;

}  // namespace seadet::fft
