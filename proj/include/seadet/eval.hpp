#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seadet/far_controller.hpp"
#include "seadet/features.hpp"
#include "seadet/svm.hpp"
#include "seadet/types.hpp"

namespace seadet::eval {

/// All clutter goes to training; targets are shuffled by seed and the first
/// floor(fraction * count) of them are used for training.
struct SplitSpec {
  double target_train_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<features::FeatureVector> train;
  std::vector<features::FeatureVector> test;
};

Split split(std::span<const features::FeatureVector> vectors, const SplitSpec& spec);

/// Fraction of target-labelled test vectors declared targets.
double detection_probability(const svm::SvmModel& model, std::span<const features::FeatureVector> test);

struct RocPoint {
  double target_p_f = 0.0;
  double p_f = 0.0;  // achieved on the training clutter
  double p_d = 0.0;
  bool converged = false;
  double beta0 = 0.0;
  double threshold = 0.0;  // threshold detectors only
  std::string error;       // non-empty when the point failed
};

struct DetectorReport {
  std::string detector;  // "svm" or "hurst"
  std::string dataset_name;
  Polarization polarization = Polarization::HH;
  // Operating point: the first entry of the requested grid.
  double p_d = 0.0;
  double p_F_train = 0.0;
  double target_p_f = 0.0;
  double beta0_final = 0.0;
  double beta1 = 0.0;
  std::vector<RocPoint> roc_points;  // sorted by achieved p_f
};

/// Runs the FAR controller at every grid point and measures P_d on `test`.
/// Failed points are recorded with their error and the sweep continues.
DetectorReport roc_sweep(std::span<const features::FeatureVector> training,
                         std::span<const features::FeatureVector> test, const svm::KernelConfig& kernel,
                         std::span<const double> p_f_grid, const far::FarTarget& base_target = {},
                         const far::ControllerOptions& options = {});

struct ThresholdResult {
  double threshold = 0.0;
  double p_F_train = 0.0;
  double p_d = 0.0;
};

/// Single-feature Hurst detector: declares a target when THE exceeds the
/// largest threshold that keeps the clutter exceedance rate at or below p_f.
ThresholdResult hurst_threshold(std::span<const features::FeatureVector> training,
                                std::span<const features::FeatureVector> test, double p_f);

DetectorReport hurst_threshold_baseline(std::span<const features::FeatureVector> training,
                                        std::span<const features::FeatureVector> test,
                                        std::span<const double> p_f_grid);

/// Mean of per-dataset P_d at roc_points[point] (no pooling over samples).
double average_detection_probability(std::span<const DetectorReport> reports, std::size_t point);

nlohmann::json to_json(const DetectorReport& report);
/// One row per ROC point: detector,dataset,target_p_f,p_f,p_d,converged
void write_roc_csv(std::ostream& out, std::span<const DetectorReport> reports);

}  // namespace seadet::eval
