#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seadet/features.hpp"
#include "seadet/simd/kernels.hpp"
#include "seadet/types.hpp"

namespace seadet::svm {

using simd::KernelForm;
using Point = std::array<double, 3>;

/// Model files and the CLI call the Laplacian form "paper"; "laplacian" is accepted too.
std::string_view to_string(KernelForm form);
KernelForm parse_kernel_form(std::string_view s);

struct KernelConfig {
  double delta = 1.0;
  KernelForm form = KernelForm::Laplacian;

  /// Coefficient of the distance term: 1 / (2 delta^2).
  double gamma() const { return 1.0 / (2.0 * delta * delta); }
  bool operator==(const KernelConfig&) const = default;
};

/// exp(-||a-b|| / (2 delta^2)) for the Laplacian form, exp(-||a-b||^2 / (2 delta^2))
/// for the Gaussian form.
double rbf_kernel(const Point& a, const Point& b, const KernelConfig& config);

struct TrainConfig {
  double beta0 = 1.0;  // box bound for clutter (y = -1)
  double beta1 = 1.0;  // box bound for targets (y = +1)
  double kkt_tol = 1e-3;
  // Pair-update budget is max_passes * M.
  std::size_t max_passes = 100;

  double bound(Label y) const { return y == Label::Target ? beta1 : beta0; }
};

void validate(const KernelConfig& k);
void validate(const TrainConfig& t);

struct SvmModel {
  std::vector<Point> support_vectors;  // normalized coordinates
  std::vector<double> alphas;
  std::vector<Label> labels;
  double bias = 0.0;
  KernelConfig kernel;
  features::NormalizationStats norm_stats;
  double beta0 = 1.0;
  double beta1 = 1.0;
  bool converged = true;

  bool operator==(const SvmModel&) const = default;
};

struct Decision {
  Label label = Label::Clutter;
  double margin = 0.0;
};

/// g(F) = sum_i alpha_i y_i k(SV_i, F) - b on the normalized input; g <= 0 is clutter.
double decision_value_normalized(const SvmModel& model, const Point& z);
Decision decide(const SvmModel& model, const features::FeatureVector& raw);
std::vector<double> decision_values(const SvmModel& model,
                                    std::span<const features::FeatureVector> raw);

struct TrainDiagnostics {
  bool converged = false;
  std::size_t iterations = 0;
  double final_gap = 0.0;          // max KKT violating-pair gap at exit
  double dual_objective = 0.0;     // sum alpha - 1/2 alpha' Q alpha
  std::size_t kernel_rows_computed = 0;
  std::vector<double> objective_trace;  // filled when requested
  std::string message;
};

struct TrainResult {
  SvmModel model;
  TrainDiagnostics diagnostics;
  std::vector<double> alpha;  // one per training point, zeros included
};

/// Training points plus a cache of signed kernel rows Q_ij = y_i y_j k(F_i, F_j).
/// Rows do not depend on the penalties, so repeated solves with different
/// (beta0, beta1) reuse the cache.
class Problem {
 public:
  static constexpr std::size_t kDefaultCacheBytes = std::size_t{1} << 30;

  Problem(std::span<const features::FeatureVector> normalized, features::NormalizationStats stats,
          KernelConfig kernel, std::size_t cache_bytes = kDefaultCacheBytes);
  ~Problem();
  Problem(Problem&&) noexcept;
  Problem& operator=(Problem&&) noexcept;

  std::size_t size() const noexcept;
  const KernelConfig& kernel() const noexcept;
  std::span<const double> labels() const noexcept;  // +1 / -1
  Point point(std::size_t i) const;

  /// Solves the class-weighted dual. warm_start (size M, optional) is clipped
  /// to the new box and rebalanced onto sum alpha_i y_i = 0 before use.
  TrainResult solve(const TrainConfig& config, std::span<const double> warm_start = {},
                    bool trace_objective = false);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Single-shot training on normalized vectors.
TrainResult train(std::span<const features::FeatureVector> normalized,
                  const features::NormalizationStats& stats, const KernelConfig& kernel,
                  const TrainConfig& config);

/// Dual objective sum alpha - 1/2 alpha' Q alpha evaluated from scratch.
double dual_objective(std::span<const features::FeatureVector> normalized,
                      std::span<const double> alpha, const KernelConfig& kernel);

struct KktReport {
  double equality_residual = 0.0;  // |sum alpha_i y_i|
  bool box_feasible = true;        // 0 <= alpha_i <= C_i exactly
  double max_violation = 0.0;      // worst KKT violation of y_i g(F_i)
  std::size_t violators = 0;       // points violating by more than tol
};

/// Checks dual feasibility and the complementary-slackness conditions of a
/// solution against decisions recomputed from the model.
KktReport check_kkt(std::span<const features::FeatureVector> normalized, const TrainResult& result,
                    const TrainConfig& config, double tol);

// Model file (JSON).
nlohmann::json to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::json& j);
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace seadet::svm
