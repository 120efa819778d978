#include "seadet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "seadet/error.hpp"

namespace seadet::svm {

using features::FeatureVector;
using json = nlohmann::json;

std::string_view to_string(KernelForm form) {
  return form == KernelForm::Laplacian ? "paper" : "gaussian";
}

KernelForm parse_kernel_form(std::string_view s) {
  if (s == "paper" || s == "laplacian") return KernelForm::Laplacian;
  if (s == "gaussian") return KernelForm::Gaussian;
  throw Error(ErrorCode::InvalidParameter, "kernel form must be 'paper' or 'gaussian'");
}

void validate(const KernelConfig& k) {
  if (!(k.delta > 0.0) || !std::isfinite(k.delta)) {
    throw Error(ErrorCode::InvalidParameter, "kernel delta must be positive and finite");
  }
}

void validate(const TrainConfig& t) {
  if (!(t.beta0 > 0.0) || !(t.beta1 > 0.0) || !std::isfinite(t.beta0) || !std::isfinite(t.beta1)) {
    throw Error(ErrorCode::InvalidParameter, "beta0 and beta1 must be positive and finite");
  }
  if (!(t.kkt_tol > 0.0) || !(t.kkt_tol < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "kkt_tol must lie in (0, 1)");
  }
  if (t.max_passes == 0) throw Error(ErrorCode::InvalidParameter, "max_passes must be >= 1");
}

double rbf_kernel(const Point& a, const Point& b, const KernelConfig& config) {
  for (int d = 0; d < 3; ++d) {
    if (!std::isfinite(a[static_cast<std::size_t>(d)]) || !std::isfinite(b[static_cast<std::size_t>(d)])) {
      throw Error(ErrorCode::InvalidParameter, "kernel input is not finite");
    }
  }
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  const double sq = dx * dx + dy * dy + dz * dz;
  const double dist = config.form == KernelForm::Laplacian ? std::sqrt(sq) : sq;
  return std::exp(-dist / (2.0 * config.delta * config.delta));
}

// ---------------------------------------------------------------------------
// Decision function

namespace {

struct SupportSet {
  std::vector<double> x, y, z, coef;

  explicit SupportSet(const SvmModel& m) {
    const std::size_t n = m.support_vectors.size();
    x.resize(n);
    y.resize(n);
    z.resize(n);
    coef.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = m.support_vectors[i][0];
      y[i] = m.support_vectors[i][1];
      z[i] = m.support_vectors[i][2];
      coef[i] = m.alphas[i] * to_double(m.labels[i]);
    }
  }

  double sum(const Point& p, const KernelConfig& k) const {
    const simd::Points3 pts{x.data(), y.data(), z.data(), x.size()};
    return simd::active_kernels().kernel_sum(pts, p.data(), k.gamma(), k.form, coef.data());
  }
};

}  // namespace

double decision_value_normalized(const SvmModel& model, const Point& z) {
  return SupportSet(model).sum(z, model.kernel) - model.bias;
}

Decision decide(const SvmModel& model, const FeatureVector& raw) {
  const auto z = features::normalize(raw.values(), model.norm_stats);
  const double g = decision_value_normalized(model, z);
  return {g > 0.0 ? Label::Target : Label::Clutter, g};
}

std::vector<double> decision_values(const SvmModel& model, std::span<const FeatureVector> raw) {
  const SupportSet sv(model);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = sv.sum(features::normalize(raw[i].values(), model.norm_stats), model.kernel) - model.bias;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem / SMO

struct Problem::Impl {
  std::vector<double> x, y, z;
  std::vector<double> sign;
  KernelConfig kernel;
  features::NormalizationStats stats;

  // Row cache with least-recently-used eviction.
  std::size_t capacity = 0;
  std::vector<std::vector<double>> slots;
  std::vector<std::size_t> slot_stamp;
  std::vector<std::ptrdiff_t> slot_row;
  std::vector<std::ptrdiff_t> row_slot;
  std::size_t clock = 0;
  std::size_t rows_computed = 0;

  std::size_t size() const { return x.size(); }
  simd::Points3 points() const { return {x.data(), y.data(), z.data(), x.size()}; }

  const double* row(std::size_t i) {
    ++clock;
    if (row_slot[i] >= 0) {
      const auto s = static_cast<std::size_t>(row_slot[i]);
      slot_stamp[s] = clock;
      return slots[s].data();
    }
    std::size_t s = 0;
    if (slots.size() < capacity) {
      s = slots.size();
      slots.emplace_back(size());
      slot_stamp.push_back(0);
      slot_row.push_back(-1);
    } else {
      s = static_cast<std::size_t>(
          std::min_element(slot_stamp.begin(), slot_stamp.end()) - slot_stamp.begin());
      if (slot_row[s] >= 0) row_slot[static_cast<std::size_t>(slot_row[s])] = -1;
    }
    const double center[3] = {x[i], y[i], z[i]};
    simd::active_kernels().kernel_row(points(), center, kernel.gamma(), kernel.form, sign.data(),
                                      sign[i], slots[s].data());
    ++rows_computed;
    slot_stamp[s] = clock;
    slot_row[s] = static_cast<std::ptrdiff_t>(i);
    row_slot[i] = static_cast<std::ptrdiff_t>(s);
    return slots[s].data();
  }
};

Problem::Problem(std::span<const FeatureVector> normalized, features::NormalizationStats stats,
                 KernelConfig kernel, std::size_t cache_bytes)
    : impl_(std::make_unique<Impl>()) {
  validate(kernel);
  if (normalized.size() < 2) throw Error(ErrorCode::SingleClassData, "need at least two samples");
  bool has_target = false, has_clutter = false;
  auto& d = *impl_;
  const std::size_t m = normalized.size();
  d.x.resize(m);
  d.y.resize(m);
  d.z.resize(m);
  d.sign.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto v = normalized[i].values();
    for (double c : v) {
      if (!std::isfinite(c)) throw Error(ErrorCode::InvalidParameter, "training vector is not finite");
    }
    d.x[i] = v[0];
    d.y[i] = v[1];
    d.z[i] = v[2];
    d.sign[i] = to_double(normalized[i].label);
    has_target |= normalized[i].label == Label::Target;
    has_clutter |= normalized[i].label == Label::Clutter;
  }
  if (!has_target || !has_clutter) {
    throw Error(ErrorCode::SingleClassData, "training data must contain both classes");
  }
  d.kernel = kernel;
  d.stats = stats;
  d.capacity = std::max<std::size_t>(2, cache_bytes / (m * sizeof(double)));
  d.row_slot.assign(m, -1);
}

Problem::~Problem() = default;
Problem::Problem(Problem&&) noexcept = default;
Problem& Problem::operator=(Problem&&) noexcept = default;

std::size_t Problem::size() const noexcept { return impl_->size(); }
const KernelConfig& Problem::kernel() const noexcept { return impl_->kernel; }
std::span<const double> Problem::labels() const noexcept { return impl_->sign; }
Point Problem::point(std::size_t i) const { return {impl_->x[i], impl_->y[i], impl_->z[i]}; }

TrainResult Problem::solve(const TrainConfig& config, std::span<const double> warm_start,
                           bool trace_objective) {
  validate(config);
  auto& d = *impl_;
  const std::size_t m = d.size();
  const auto& yv = d.sign;
  const auto& kt = simd::active_kernels();

  std::vector<double> cap(m);
  for (std::size_t i = 0; i < m; ++i) cap[i] = yv[i] > 0 ? config.beta1 : config.beta0;

  std::vector<double> alpha(m, 0.0);
  std::vector<double> grad(m, -1.0);  // G = Q alpha - 1
  if (!warm_start.empty()) {
    if (warm_start.size() != m) throw Error(ErrorCode::InvalidParameter, "warm start size mismatch");
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      alpha[i] = std::clamp(warm_start[i], 0.0, cap[i]);
      (yv[i] > 0 ? pos : neg) += alpha[i];
    }
    // Restore sum alpha_i y_i = 0 by shrinking the heavier class.
    if (pos > neg && pos > 0.0) {
      const double f = neg / pos;
      for (std::size_t i = 0; i < m; ++i) if (yv[i] > 0) alpha[i] *= f;
    } else if (neg > pos && neg > 0.0) {
      const double f = pos / neg;
      for (std::size_t i = 0; i < m; ++i) if (yv[i] < 0) alpha[i] *= f;
    }
    std::vector<double> sx, sy, sz, sc;
    for (std::size_t i = 0; i < m; ++i) {
      if (alpha[i] > 0.0) {
        sx.push_back(d.x[i]);
        sy.push_back(d.y[i]);
        sz.push_back(d.z[i]);
        sc.push_back(alpha[i] * yv[i]);
      }
    }
    if (!sc.empty()) {
      const simd::Points3 sv{sx.data(), sy.data(), sz.data(), sx.size()};
      for (std::size_t k = 0; k < m; ++k) {
        const double c[3] = {d.x[k], d.y[k], d.z[k]};
        grad[k] = yv[k] * kt.kernel_sum(sv, c, d.kernel.gamma(), d.kernel.form, sc.data()) - 1.0;
      }
    }
  }

  auto objective = [&] {
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i) w += alpha[i] * (1.0 - grad[i]);
    return 0.5 * w;
  };

  TrainResult result;
  auto& diag = result.diagnostics;
  const std::size_t rows_before = d.rows_computed;
  const std::size_t budget = config.max_passes * m;
  constexpr double kTau = 1e-12;
  if (trace_objective) diag.objective_trace.push_back(objective());

  double gap = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  while (true) {
    // First-order working set: maximal violating pair.
    double g_up = -std::numeric_limits<double>::infinity();
    double g_low = std::numeric_limits<double>::infinity();
    std::size_t i = m, j = m;
    for (std::size_t t = 0; t < m; ++t) {
      const double v = -yv[t] * grad[t];
      const bool below_cap = alpha[t] < cap[t];
      const bool above_zero = alpha[t] > 0.0;
      const bool in_up = yv[t] > 0 ? below_cap : above_zero;
      const bool in_low = yv[t] > 0 ? above_zero : below_cap;
      if (in_up && v >= g_up) {
        g_up = v;
        i = t;
      }
      if (in_low && v <= g_low) {
        g_low = v;
        j = t;
      }
    }
    gap = (i == m || j == m) ? 0.0 : g_up - g_low;
    if (gap <= config.kkt_tol) {
      diag.converged = true;
      break;
    }
    if (iter >= budget) {
      diag.converged = false;
      diag.message = "pair-update budget of " + std::to_string(budget) +
                     " exhausted with KKT gap " + std::to_string(gap);
      break;
    }
    ++iter;

    const double* qi = d.row(i);
    const double* qj = d.row(j);
    const double ci = cap[i], cj = cap[j];
    const double old_i = alpha[i], old_j = alpha[j];
    double ai = old_i, aj = old_j;

    if (yv[i] != yv[j]) {
      double quad = 2.0 + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else {
        if (ai < 0) { ai = 0; aj = -diff; }
      }
      if (diff > ci - cj) {
        if (ai > ci) { ai = ci; aj = ci - diff; }
      } else {
        if (aj > cj) { aj = cj; ai = cj + diff; }
      }
    } else {
      double quad = 2.0 - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) { ai = ci; aj = sum - ci; }
      } else {
        if (aj < 0) { aj = 0; ai = sum; }
      }
      if (sum > cj) {
        if (aj > cj) { aj = cj; ai = sum - cj; }
      } else {
        if (ai < 0) { ai = 0; aj = sum; }
      }
    }
    ai = std::clamp(ai, 0.0, ci);
    aj = std::clamp(aj, 0.0, cj);
    alpha[i] = ai;
    alpha[j] = aj;
    kt.axpy2(grad.data(), ai - old_i, qi, aj - old_j, qj, m);
    if (trace_objective) diag.objective_trace.push_back(objective());
  }

  // Bias: mean of y G over free vectors, midpoint of the feasible interval otherwise.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = yv[t] * grad[t];
    if (alpha[t] >= cap[t]) {
      if (yv[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (yv[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double bias = 0.0;
  if (n_free > 0) {
    bias = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    bias = 0.5 * (ub + lb);
  } else {
    bias = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }

  diag.iterations = iter;
  diag.final_gap = gap;
  diag.dual_objective = objective();
  diag.kernel_rows_computed = d.rows_computed - rows_before;

  SvmModel& model = result.model;
  model.bias = bias;
  model.kernel = d.kernel;
  model.norm_stats = d.stats;
  model.beta0 = config.beta0;
  model.beta1 = config.beta1;
  model.converged = diag.converged;
  for (std::size_t t = 0; t < m; ++t) {
    if (alpha[t] > 0.0) {
      model.support_vectors.push_back({d.x[t], d.y[t], d.z[t]});
      model.alphas.push_back(alpha[t]);
      model.labels.push_back(yv[t] > 0 ? Label::Target : Label::Clutter);
    }
  }
  result.alpha = std::move(alpha);
  return result;
}

TrainResult train(std::span<const FeatureVector> normalized, const features::NormalizationStats& stats,
                  const KernelConfig& kernel, const TrainConfig& config) {
  Problem p(normalized, stats, kernel);
  return p.solve(config);
}

double dual_objective(std::span<const FeatureVector> normalized, std::span<const double> alpha,
                      const KernelConfig& kernel) {
  const std::size_t m = normalized.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    lin += alpha[i];
    if (alpha[i] == 0.0) continue;
    const auto pi = normalized[i].values();
    for (std::size_t j = 0; j < m; ++j) {
      if (alpha[j] == 0.0) continue;
      quad += alpha[i] * alpha[j] * to_double(normalized[i].label) * to_double(normalized[j].label) *
              rbf_kernel(pi, normalized[j].values(), kernel);
    }
  }
  return lin - 0.5 * quad;
}

KktReport check_kkt(std::span<const FeatureVector> normalized, const TrainResult& result,
                    const TrainConfig& config, double tol) {
  KktReport r;
  double eq = 0.0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const double a = result.alpha[i];
    const double c = config.bound(normalized[i].label);
    eq += a * to_double(normalized[i].label);
    if (a < 0.0 || a > c) r.box_feasible = false;
  }
  r.equality_residual = std::abs(eq);

  const SupportSet sv(result.model);
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const double a = result.alpha[i];
    const double c = config.bound(normalized[i].label);
    const double margin = to_double(normalized[i].label) *
                          (sv.sum(normalized[i].values(), result.model.kernel) - result.model.bias);
    double v = 0.0;
    if (a <= 0.0) {
      v = std::max(0.0, 1.0 - margin);
    } else if (a >= c) {
      v = std::max(0.0, margin - 1.0);
    } else {
      v = std::abs(margin - 1.0);
    }
    r.max_violation = std::max(r.max_violation, v);
    if (v > tol) ++r.violators;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const SvmModel& m) {
  json j;
  j["kernel"] = {{"delta", m.kernel.delta}, {"form", std::string(to_string(m.kernel.form))}};
  j["bias"] = m.bias;
  json svs = json::array();
  for (const auto& p : m.support_vectors) svs.push_back({p[0], p[1], p[2]});
  j["support_vectors"] = svs;
  j["alphas"] = m.alphas;
  json labels = json::array();
  for (auto l : m.labels) labels.push_back(to_int(l));
  j["labels"] = labels;
  j["norm_stats"] = {{"mean", m.norm_stats.mean}, {"std", m.norm_stats.std}};
  j["training_meta"] = {{"beta0", m.beta0}, {"beta1", m.beta1}, {"converged", m.converged}};
  return j;
}

SvmModel model_from_json(const json& j) {
  try {
    SvmModel m;
    m.kernel.delta = j.at("kernel").at("delta").get<double>();
    m.kernel.form = parse_kernel_form(j.at("kernel").at("form").get<std::string>());
    m.bias = j.at("bias").get<double>();
    for (const auto& p : j.at("support_vectors")) {
      if (p.size() != 3) throw Error(ErrorCode::MalformedFile, "support vector must have 3 entries");
      m.support_vectors.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    m.alphas = j.at("alphas").get<std::vector<double>>();
    for (const auto& l : j.at("labels")) m.labels.push_back(label_from_int(l.get<int>()));
    m.norm_stats.mean = j.at("norm_stats").at("mean").get<std::array<double, 3>>();
    m.norm_stats.std = j.at("norm_stats").at("std").get<std::array<double, 3>>();
    const auto& meta = j.at("training_meta");
    m.beta0 = meta.at("beta0").get<double>();
    m.beta1 = meta.at("beta1").get<double>();
    m.converged = meta.at("converged").get<bool>();
    if (m.alphas.size() != m.support_vectors.size() || m.labels.size() != m.support_vectors.size() ||
        m.support_vectors.empty()) {
      throw Error(ErrorCode::MalformedFile, "model arrays must be non-empty and equal-length");
    }
    validate(m.kernel);
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("model JSON: ") + e.what());
  }
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("model JSON: ") + e.what());
  }
}

}  // namespace seadet::svm
