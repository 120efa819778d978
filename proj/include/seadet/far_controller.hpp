#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seadet/features.hpp"
#include "seadet/svm.hpp"

namespace seadet::far {

/// Target false-alarm rate and bisection bracket on the clutter penalty.
struct FarTarget {
  double p_f = 0.01;
  double eta = 1e-4;
  double beta_h = 2.0;
  double beta_l = 0.0;
  double beta1 = 1.0;
  int max_iters = 50;
};

void validate(const FarTarget& t);

struct ControllerOptions {
  double kkt_tol = 1e-3;
  std::size_t max_passes = 100;
  std::size_t cache_bytes = svm::Problem::kDefaultCacheBytes;
  bool warm_start = true;
  // Upper limit for doubling beta_h when the initial bracket is too narrow.
  double beta_h_limit = 1024.0;
  // Called after every solve with the normalized training set.
  std::function<void(std::span<const features::FeatureVector>, const svm::TrainConfig&,
                     const svm::TrainResult&)>
      on_solve;
};

struct Iteration {
  double beta0 = 0.0;
  double beta_l = 0.0;
  double beta_h = 0.0;
  double p_F = 0.0;
  std::size_t n_clutter_errors = 0;
  bool bracket_probe = false;  // training at beta_h while widening the bracket
  bool solver_converged = true;
  std::size_t solver_iterations = 0;
};

struct ControllerTrace {
  FarTarget target;
  std::vector<Iteration> iterations;
  bool converged = false;
  std::size_t best_iteration = 0;  // index into iterations of final_model
  std::size_t n_clutter = 0;
  svm::SvmModel final_model;
  std::vector<std::string> warnings;

  double final_p_F() const { return iterations.at(best_iteration).p_F; }
  double final_beta0() const { return iterations.at(best_iteration).beta0; }
};

struct FarCount {
  std::size_t errors = 0;
  std::size_t clutter = 0;
  double rate() const { return static_cast<double>(errors) / static_cast<double>(clutter); }
};

/// Clutter-labelled vectors that the model declares targets. Throws
/// NoClutterSamples when there is no clutter.
FarCount count_false_alarms(const svm::SvmModel& model,
                            std::span<const features::FeatureVector> training);
double empirical_far(const svm::SvmModel& model, std::span<const features::FeatureVector> training);

/// Bisection on beta0 until the training false-alarm rate is within eta of
/// p_f. Normalization statistics are fitted on `training` (raw features).
ControllerTrace fit_with_far(std::span<const features::FeatureVector> training,
                             const svm::KernelConfig& kernel, const FarTarget& target,
                             const ControllerOptions& options = {});

/// Trace file: {target, iterations: [{beta0, p_F, errors, ...}], converged, model_ref, ...}
nlohmann::json to_json(const ControllerTrace& trace, const std::string& model_ref);

}  // namespace seadet::far
