#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seadet/types.hpp"

namespace seadet::signal {

enum class CellRole { Primary, Secondary, ClutterOnly };

enum class FileFormat { Csv, BinaryF32 };

std::string_view to_string(CellRole r);
std::string_view to_string(FileFormat f);
FileFormat parse_format(std::string_view s);

/// One range cell's I/Q returns. Samples are single precision, matching the
/// on-disk float32 layout, so every supported file format round-trips exactly.
struct ComplexSeries {
  std::vector<std::complex<float>> samples;
  double sample_rate_hz = 1000.0;
  int cell_index = 0;
  CellRole role = CellRole::ClutterOnly;

  bool operator==(const ComplexSeries&) const = default;
};

struct SyntheticOrigin {
  std::uint64_t seed = 0;
  double scr_db = 0.0;

  bool operator==(const SyntheticOrigin&) const = default;
};

struct Dataset {
  std::vector<ComplexSeries> cells;
  Polarization polarization = Polarization::HH;
  std::string name;
  std::optional<SyntheticOrigin> origin;  // nullopt: loaded from disk

  std::size_t primary_index() const;
  bool operator==(const Dataset&) const = default;
};

/// Throws InconsistentCells / MissingMetadata when the dataset invariants fail.
void validate(const Dataset& ds);

struct Segment {
  std::vector<double> amplitudes;
  Label label = Label::Clutter;
  int source_cell = 0;
  std::size_t start_index = 0;
};

// Directory layout: cell_<k>.csv (lines "I,Q") or cell_<k>.bin (little-endian
// interleaved float32 I,Q) for k = 0, 1, ... plus meta.json:
//   {sample_rate_hz, primary_cell, secondary_cells: [...], polarization, ...}
Dataset load_dataset(const std::filesystem::path& dir, std::optional<Polarization> polarization,
                     FileFormat format);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir, FileFormat format);

struct SynthesisParams {
  std::uint64_t seed = 1;
  double scr_db = 10.0;
  int n_cells = 14;
  std::size_t n_samples = std::size_t{1} << 17;
  double clutter_shape = 1.0;
  double sample_rate_hz = 1000.0;
  int n_secondary = 2;        // target-contaminated neighbours of the primary cell
  double secondary_attenuation_db = 10.0;
  double texture_corr_s = 0.1;
  double speckle_corr_s = 0.01;
  double target_corr_s = 0.5;
  // Sea spikes: Poisson bursts of slowly decorrelating, Doppler-shifted
  // returns added to every cell's clutter. spike_rate_hz = 0 disables them.
  double spike_rate_hz = 0.1;
  double spike_min_duration_s = 0.5;
  double spike_max_duration_s = 3.0;
  double spike_min_power_db = 10.0;  // peak power relative to mean clutter power
  double spike_max_power_db = 20.0;
  double spike_corr_s = 0.25;
  Polarization polarization = Polarization::HH;
};

/// Compound-Gaussian (K-distributed envelope) clutter plus sea spikes in every cell; the
/// primary cell adds a fluctuating target whose power is exactly
/// 10^(scr_db/10) times the power of that cell's clutter component.
/// scr_db = -inf produces a target-free primary cell.
Dataset synthesize_dataset(const SynthesisParams& params);

/// Number of full windows u_j = x[step*(j-1) .. step*(j-1)+window).
std::size_t segment_count(std::size_t cell_length, std::size_t step, std::size_t window);

/// Overlapped windows of the complex modulus. Secondary cells are rejected.
std::vector<Segment> segment_cell(const ComplexSeries& cell, std::size_t step, std::size_t window);

std::vector<double> amplitudes(const ComplexSeries& cell);

}  // namespace seadet::signal
