#include "seadet/far_controller.hpp"

#include <cmath>
#include <optional>

#include <nlohmann/json.hpp>

#include "seadet/error.hpp"

namespace seadet::far {

using features::FeatureVector;

void validate(const FarTarget& t) {
  if (!(t.p_f > 0.0 && t.p_f < 1.0)) throw Error(ErrorCode::InvalidParameter, "p_f must lie in (0, 1)");
  if (!(t.eta > 0.0)) throw Error(ErrorCode::InvalidParameter, "eta must be positive");
  if (!(t.beta_l >= 0.0) || !(t.beta_h > t.beta_l) || !std::isfinite(t.beta_h)) {
    throw Error(ErrorCode::InvalidParameter, "need 0 <= beta_l < beta_h");
  }
  if (!(t.beta1 > 0.0)) throw Error(ErrorCode::InvalidParameter, "beta1 must be positive");
  if (t.max_iters < 1) throw Error(ErrorCode::InvalidParameter, "max_iters must be >= 1");
}

FarCount count_false_alarms(const svm::SvmModel& model, std::span<const FeatureVector> training) {
  std::vector<FeatureVector> clutter;
  for (const auto& v : training) {
    if (v.label == Label::Clutter) clutter.push_back(v);
  }
  if (clutter.empty()) throw Error(ErrorCode::NoClutterSamples, "no clutter samples to measure FAR on");
  const auto g = svm::decision_values(model, clutter);
  FarCount c;
  c.clutter = clutter.size();
  for (double v : g) {
    if (v > 0.0) ++c.errors;
  }
  return c;
}

double empirical_far(const svm::SvmModel& model, std::span<const FeatureVector> training) {
  return count_false_alarms(model, training).rate();
}

ControllerTrace fit_with_far(std::span<const FeatureVector> training, const svm::KernelConfig& kernel,
                             const FarTarget& target, const ControllerOptions& options) {
  validate(target);
  const auto stats = features::fit_normalization(training);
  std::vector<FeatureVector> normalized;
  normalized.reserve(training.size());
  for (const auto& v : training) normalized.push_back(features::apply_normalization(v, stats));
  svm::Problem problem(normalized, stats, kernel, options.cache_bytes);

  ControllerTrace trace;
  trace.target = target;
  for (const auto& v : training) trace.n_clutter += v.label == Label::Clutter ? 1 : 0;
  if (trace.n_clutter == 0) throw Error(ErrorCode::NoClutterSamples, "training set has no clutter");
  if (target.eta < 1.0 / static_cast<double>(trace.n_clutter)) {
    trace.warnings.push_back("InfeasibleTolerance: eta " + std::to_string(target.eta) +
                             " is below the FAR granularity 1/" + std::to_string(trace.n_clutter));
  }

  std::vector<double> warm;
  std::optional<svm::SvmModel> best_model;
  double best_err = std::numeric_limits<double>::infinity();

  auto run = [&](double beta0, double beta_l, double beta_h, bool probe) {
    svm::TrainConfig cfg;
    cfg.beta0 = beta0;
    cfg.beta1 = target.beta1;
    cfg.kkt_tol = options.kkt_tol;
    cfg.max_passes = options.max_passes;
    auto res = problem.solve(cfg, options.warm_start ? std::span<const double>(warm) : std::span<const double>{});
    if (options.on_solve) options.on_solve(normalized, cfg, res);
    const auto count = count_false_alarms(res.model, training);
    Iteration it;
    it.beta0 = beta0;
    it.beta_l = beta_l;
    it.beta_h = beta_h;
    it.p_F = count.rate();
    it.n_clutter_errors = count.errors;
    it.bracket_probe = probe;
    it.solver_converged = res.diagnostics.converged;
    it.solver_iterations = res.diagnostics.iterations;
    const double err = std::abs(it.p_F - target.p_f);
    if (err < best_err) {
      best_err = err;
      best_model = res.model;
      trace.best_iteration = trace.iterations.size();
    }
    trace.iterations.push_back(it);
    if (options.warm_start) warm = std::move(res.alpha);
    return it.p_F;
  };
  auto within = [&](double p) { return p == target.p_f || std::abs(p - target.p_f) <= target.eta; };

  double beta_l = target.beta_l;
  double beta_h = target.beta_h;
  double beta0 = 0.5 * (beta_h + beta_l);
  // The upper bound is known to give P_F < p_f once any run did.
  bool upper_verified = false;

  while (static_cast<int>(trace.iterations.size()) < target.max_iters) {
    const double p = run(beta0, beta_l, beta_h, false);
    if (within(p)) {
      trace.converged = true;
      break;
    }
    if (p < target.p_f) {
      upper_verified = true;
      beta_h = beta0;
      beta0 = 0.5 * (beta_h + beta_l);
      continue;
    }
    beta_l = beta0;
    if (!upper_verified) {
      // The FAR is still too high; make sure the upper end of the bracket
      // actually reaches below p_f before bisecting towards it.
      upper_verified = true;
      bool done = false;
      while (static_cast<int>(trace.iterations.size()) < target.max_iters) {
        const double ph = run(beta_h, beta_l, beta_h, true);
        if (within(ph)) {
          done = true;
          break;
        }
        if (ph < target.p_f || beta_h >= options.beta_h_limit) break;
        beta_l = beta_h;
        beta_h = std::min(2.0 * beta_h, options.beta_h_limit);
      }
      if (done) {
        trace.converged = true;
        break;
      }
    }
    beta0 = 0.5 * (beta_h + beta_l);
  }

  trace.final_model = std::move(*best_model);
  return trace;
}

nlohmann::json to_json(const ControllerTrace& trace, const std::string& model_ref) {
  nlohmann::json j;
  const auto& t = trace.target;
  j["target"] = {{"p_f", t.p_f},       {"eta", t.eta},     {"beta_h", t.beta_h},
                 {"beta_l", t.beta_l}, {"beta1", t.beta1}, {"max_iters", t.max_iters}};
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : trace.iterations) {
    its.push_back({{"beta0", it.beta0},
                   {"p_F", it.p_F},
                   {"errors", it.n_clutter_errors},
                   {"beta_l", it.beta_l},
                   {"beta_h", it.beta_h},
                   {"bracket_probe", it.bracket_probe},
                   {"solver_converged", it.solver_converged},
                   {"solver_iterations", it.solver_iterations}});
  }
  j["iterations"] = its;
  j["converged"] = trace.converged;
  j["best_iteration"] = trace.best_iteration;
  j["n_clutter"] = trace.n_clutter;
  j["warnings"] = trace.warnings;
  j["model_ref"] = model_ref;
  return j;
}

}  // namespace seadet::far
