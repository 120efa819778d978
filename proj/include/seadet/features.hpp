#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "seadet/fft.hpp"
#include "seadet/signal_model.hpp"
#include "seadet/types.hpp"

namespace seadet::features {

/// Log-spaced scales 128 ... 2048 samples (powers of sqrt(2)).
std::vector<std::size_t> default_tau_grid();

struct FeatureConfig {
  int k_bins = 100;
  std::vector<std::size_t> tau_grid = default_tau_grid();
};

struct FeatureVector {
  double tie = 0.0;   // bits
  double the = 0.0;   // Hurst exponent
  double fpar = 1.0;  // spectral peak / mean
  Label label = Label::Clutter;
  int source_cell = 0;
  std::size_t start_index = 0;

  std::array<double, 3> values() const { return {tie, the, fpar}; }
  bool operator==(const FeatureVector&) const = default;
};

/// Shannon entropy (bits) of a K-bin equal-width histogram over [min, max].
double tie(std::span<const double> amplitudes, int k_bins);

/// Mean rescaled range (R/S) over the floor(N/tau) full sub-periods of
/// length tau. Sub-periods with zero deviation are skipped; throws
/// DegenerateInput when all of them are.
double rescaled_range(std::span<const double> amplitudes, std::size_t tau);

/// Least-squares slope of log2(rs) against log2(tau).
double log_log_slope(std::span<const std::size_t> taus, std::span<const double> rs);

/// Hurst exponent by rescaled-range analysis.
double the(std::span<const double> amplitudes, std::span<const std::size_t> tau_grid);

/// max_k |X(k)| / mean_k |X(k)| of the length-N DFT.
double fpar(std::span<const double> amplitudes);
double fpar(std::span<const std::complex<double>> samples);

/// Holds FFT plans and scratch space; extract() is the per-segment entry
/// point. Not thread-safe; use one instance per thread.
class Extractor {
 public:
  explicit Extractor(FeatureConfig config);
  ~Extractor();

  const FeatureConfig& config() const noexcept { return config_; }

  FeatureVector extract(const signal::Segment& segment);

  /// Segments every non-secondary cell and extracts all windows.
  std::vector<FeatureVector> extract_dataset(const signal::Dataset& ds, std::size_t step,
                                             std::size_t window);

 private:
  double spectral_ratio(std::span<const double> amplitudes);

  FeatureConfig config_;
  std::unique_ptr<fft::Plan> plan_;
  std::vector<std::complex<double>> spectrum_;
  std::vector<double> magnitude_;
};

FeatureVector extract(const signal::Segment& segment, const FeatureConfig& config);

/// Throws InvalidParameter unless k_bins >= 1, every tau >= 8, and there are
/// at least three distinct taus.
void validate(const FeatureConfig& config);

// ---------------------------------------------------------------------------
// z-score normalization

struct NormalizationStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  bool operator==(const NormalizationStats&) const = default;
};

/// Population mean/std per dimension; zero-variance dimensions get std = 1.
NormalizationStats fit_normalization(std::span<const FeatureVector> vectors);
FeatureVector apply_normalization(const FeatureVector& v, const NormalizationStats& stats);
std::array<double, 3> normalize(const std::array<double, 3>& v, const NormalizationStats& stats);

// ---------------------------------------------------------------------------
// CSV: tie,the,fpar,label,source_cell,start_index

void write_csv(std::ostream& out, std::span<const FeatureVector> vectors);
void write_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors);
std::vector<FeatureVector> read_csv(std::istream& in);
std::vector<FeatureVector> read_csv(const std::filesystem::path& path);

}  // namespace seadet::features
