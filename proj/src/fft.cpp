#include "seadet/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seadet/error.hpp"

namespace seadet::fft {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

Plan::Plan(std::size_t n) : n_(n), pow2_(is_power_of_two(n)) {
  if (n == 0) throw Error(ErrorCode::InvalidParameter, "FFT length must be positive");
  if (pow2_) {
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(ang), std::sin(ang)};
    }
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    return;
  }

  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  inner_ = std::make_unique<Plan>(m);
  chirp_.resize(n);
  const std::size_t two_n = 2 * n;
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle small for large k.
    const std::size_t k2 = static_cast<std::size_t>((static_cast<unsigned __int128>(k) * k) % two_n);
    const double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp_[k] = {std::cos(ang), std::sin(ang)};
  }
  chirp_filter_fft_.assign(m, cplx{});
  chirp_filter_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_filter_fft_[k] = std::conj(chirp_[k]);
    chirp_filter_fft_[m - k] = std::conj(chirp_[k]);
  }
  inner_->forward(chirp_filter_fft_);
}

Plan::~Plan() = default;
Plan::Plan(Plan&&) noexcept = default;
Plan& Plan::operator=(Plan&&) noexcept = default;

void Plan::forward(std::span<cplx> data) const {
  if (data.size() != n_) throw Error(ErrorCode::InvalidParameter, "FFT buffer size mismatch");
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data);
  }
}

void Plan::inverse(std::span<cplx> data) const {
  if (data.size() != n_) throw Error(ErrorCode::InvalidParameter, "FFT buffer size mismatch");
  if (pow2_) {
    radix2(data, true);
  } else {
    for (auto& v : data) v = std::conj(v);
    bluestein(data);
    for (auto& v : data) v = std::conj(v);
  }
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

void Plan::radix2(std::span<cplx> data, bool invert) const {
  const std::size_t n = n_;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cplx w = invert ? std::conj(twiddle_[j * stride]) : twiddle_[j * stride];
        const cplx u = data[start + j];
        const cplx v = data[start + j + half] * w;
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

void Plan::bluestein(std::span<cplx> data) const {
  const std::size_t m = inner_->size();
  std::vector<cplx> a(m, cplx{});
  for (std::size_t k = 0; k < n_; ++k) a[k] = data[k] * chirp_[k];
  inner_->forward(a);
  for (std::size_t k = 0; k < m; ++k) a[k] *= chirp_filter_fft_[k];
  inner_->inverse(a);
  for (std::size_t k = 0; k < n_; ++k) data[k] = a[k] * chirp_[k];
}

std::vector<cplx> forward(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  Plan(x.size()).forward(out);
  return out;
}

std::vector<cplx> forward_real(std::span<const double> x) {
  std::vector<cplx> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return cplx{v, 0.0}; });
  Plan(x.size()).forward(out);
  return out;
}

}  // namespace seadet::fft
