#include "seadet/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "seadet/error.hpp"

namespace seadet::eval {

using features::FeatureVector;

Split split(std::span<const FeatureVector> vectors, const SplitSpec& spec) {
  if (!(spec.target_train_fraction > 0.0 && spec.target_train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "target_train_fraction must lie in (0, 1)");
  }
  Split out;
  std::vector<FeatureVector> targets;
  for (const auto& v : vectors) {
    if (v.label == Label::Clutter) {
      out.train.push_back(v);
    } else {
      targets.push_back(v);
    }
  }
  if (targets.empty()) throw Error(ErrorCode::NoTargets, "no target vectors to split");
  if (out.train.empty()) throw Error(ErrorCode::NoClutter, "no clutter vectors to train on");
  std::mt19937_64 rng(spec.seed);
  std::shuffle(targets.begin(), targets.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(spec.target_train_fraction * static_cast<double>(targets.size())));
  out.train.insert(out.train.end(), targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(targets.begin() + static_cast<std::ptrdiff_t>(n_train), targets.end());
  return out;
}

double detection_probability(const svm::SvmModel& model, std::span<const FeatureVector> test) {
  std::vector<FeatureVector> targets;
  for (const auto& v : test) {
    if (v.label == Label::Target) targets.push_back(v);
  }
  if (targets.empty()) throw Error(ErrorCode::EmptyTestSet, "test set has no target vectors");
  const auto g = svm::decision_values(model, targets);
  const auto hits = std::count_if(g.begin(), g.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

namespace {

void sort_points(std::vector<RocPoint>& pts) {
  std::stable_sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) { return a.p_f < b.p_f; });
}

}  // namespace

DetectorReport roc_sweep(std::span<const FeatureVector> training, std::span<const FeatureVector> test,
                         const svm::KernelConfig& kernel, std::span<const double> p_f_grid,
                         const far::FarTarget& base_target, const far::ControllerOptions& options) {
  if (p_f_grid.empty()) throw Error(ErrorCode::InvalidParameter, "empty p_f grid");
  for (double p : p_f_grid) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidParameter, "p_f grid values must lie in (0, 1)");
  }
  DetectorReport report;
  report.detector = "svm";
  report.beta1 = base_target.beta1;
  for (std::size_t k = 0; k < p_f_grid.size(); ++k) {
    RocPoint pt;
    pt.target_p_f = p_f_grid[k];
    try {
      far::FarTarget t = base_target;
      t.p_f = p_f_grid[k];
      const auto trace = far::fit_with_far(training, kernel, t, options);
      pt.p_f = trace.final_p_F();
      pt.beta0 = trace.final_beta0();
      pt.converged = trace.converged;
      pt.p_d = detection_probability(trace.final_model, test);
    } catch (const Error& e) {
      pt.error = e.what();
      pt.p_f = std::numeric_limits<double>::quiet_NaN();
      pt.p_d = std::numeric_limits<double>::quiet_NaN();
    }
    if (k == 0) {
      report.target_p_f = pt.target_p_f;
      report.p_F_train = pt.p_f;
      report.p_d = pt.p_d;
      report.beta0_final = pt.beta0;
    }
    report.roc_points.push_back(pt);
  }
  sort_points(report.roc_points);
  return report;
}

ThresholdResult hurst_threshold(std::span<const FeatureVector> training, std::span<const FeatureVector> test,
                                double p_f) {
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw Error(ErrorCode::InvalidParameter, "p_f must lie in [0, 1]");
  std::vector<double> clutter;
  for (const auto& v : training) {
    if (v.label == Label::Clutter) clutter.push_back(v.the);
  }
  if (clutter.empty()) throw Error(ErrorCode::NoClutter, "no clutter vectors in training");
  std::vector<double> targets;
  for (const auto& v : test) {
    if (v.label == Label::Target) targets.push_back(v.the);
  }
  if (targets.empty()) throw Error(ErrorCode::EmptyTestSet, "test set has no target vectors");

  std::sort(clutter.begin(), clutter.end());
  const std::size_t n = clutter.size();
  const auto allowed = static_cast<std::size_t>(std::floor(p_f * static_cast<double>(n)));
  ThresholdResult r;
  // Strict exceedance of the (n - 1 - allowed)-th order statistic.
  r.threshold = allowed >= n ? -std::numeric_limits<double>::infinity() : clutter[n - 1 - allowed];
  const auto exceed = [&](double v) { return v > r.threshold; };
  r.p_F_train = static_cast<double>(std::count_if(clutter.begin(), clutter.end(), exceed)) /
                static_cast<double>(n);
  r.p_d = static_cast<double>(std::count_if(targets.begin(), targets.end(), exceed)) /
          static_cast<double>(targets.size());
  return r;
}

DetectorReport hurst_threshold_baseline(std::span<const FeatureVector> training,
                                        std::span<const FeatureVector> test, std::span<const double> p_f_grid) {
  if (p_f_grid.empty()) throw Error(ErrorCode::InvalidParameter, "empty p_f grid");
  DetectorReport report;
  report.detector = "hurst";
  for (std::size_t k = 0; k < p_f_grid.size(); ++k) {
    const auto r = hurst_threshold(training, test, p_f_grid[k]);
    RocPoint pt;
    pt.target_p_f = p_f_grid[k];
    pt.p_f = r.p_F_train;
    pt.p_d = r.p_d;
    pt.converged = true;
    pt.threshold = r.threshold;
    if (k == 0) {
      report.target_p_f = pt.target_p_f;
      report.p_F_train = pt.p_f;
      report.p_d = pt.p_d;
    }
    report.roc_points.push_back(pt);
  }
  sort_points(report.roc_points);
  return report;
}

double average_detection_probability(std::span<const DetectorReport> reports, std::size_t point) {
  if (reports.empty()) throw Error(ErrorCode::InvalidParameter, "no reports to average");
  double acc = 0.0;
  for (const auto& r : reports) acc += r.roc_points.at(point).p_d;
  return acc / static_cast<double>(reports.size());
}

nlohmann::json to_json(const DetectorReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["detector"] = r.detector;
  j["dataset_name"] = r.dataset_name;
  j["polarization"] = std::string(to_string(r.polarization));
  j["p_d"] = num(r.p_d);
  j["p_F_train"] = num(r.p_F_train);
  j["target_p_f"] = r.target_p_f;
  j["beta0_final"] = r.beta0_final;
  j["beta1"] = r.beta1;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.roc_points) {
    nlohmann::json e = {{"target_p_f", p.target_p_f}, {"p_f", num(p.p_f)}, {"p_d", num(p.p_d)},
                        {"converged", p.converged},   {"beta0", p.beta0}};
    if (r.detector == "hurst") e["threshold"] = num(p.threshold);
    if (!p.error.empty()) e["error"] = p.error;
    pts.push_back(e);
  }
  j["roc_points"] = pts;
  return j;
}

void write_roc_csv(std::ostream& out, std::span<const DetectorReport> reports) {
  out << "detector,dataset,target_p_f,p_f,p_d,converged\n";
  char buf[64];
  auto put = [&](double v) {
    if (std::isnan(v)) {
      out << "nan";
      return;
    }
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, r.ptr - buf);
  };
  for (const auto& report : reports) {
    for (const auto& p : report.roc_points) {
      out << report.detector << ',' << report.dataset_name << ',';
      put(p.target_p_f);
      out << ',';
      put(p.p_f);
      out << ',';
      put(p.p_d);
      out << ',' << (p.converged ? "true" : "false") << '\n';
    }
  }
}

}  // namespace seadet::eval
