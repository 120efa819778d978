#pragma once

// Test-only reference implementations. Nothing here calls into the library's
// solver, FFT or feature code.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace oracle {

// O(N^2) DFT, X[k] = sum_n x[n] exp(-2 pi i n k / N), with exact angle reduction.
inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t r = (t * k) % n;
      const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(r) /
                              static_cast<long double>(n);
      re += x[t].real() * std::cos(ang) - x[t].imag() * std::sin(ang);
      im += x[t].real() * std::sin(ang) + x[t].imag() * std::cos(ang);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

inline double naive_fpar(const std::vector<double>& x) {
  std::vector<std::complex<double>> c(x.begin(), x.end());
  const auto spec = naive_dft(c);
  double peak = 0.0, sum = 0.0;
  for (const auto& v : spec) {
    peak = std::max(peak, std::abs(v));
    sum += std::abs(v);
  }
  return peak / (sum / static_cast<double>(spec.size()));
}

// Entropy of a K-bin histogram by explicit edge comparison: element v falls in
// bin k when lo + k*w <= v < lo + (k+1)*w (last bin closed).
inline double direct_count_entropy(const std::vector<double>& x, int k_bins) {
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  if (hi == lo) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(k_bins), 0);
  for (double v : x) {
    for (int k = 0; k < k_bins; ++k) {
      // Same edge arithmetic as a scaled comparison: (v - lo) * K / (hi - lo) in [k, k+1).
      const double pos = (v - lo) * k_bins / (hi - lo);
      const bool last = k == k_bins - 1;
      if (pos >= k && (pos < k + 1 || last)) {
        ++counts[static_cast<std::size_t>(k)];
        break;
      }
    }
  }
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(x.size());
    h -= p * std::log2(p);
  }
  return h;
}

// Fractional Gaussian noise (increments of fBm) by circulant embedding.
inline std::vector<double> fgn(std::size_t n, double hurst, std::uint64_t seed) {
  const std::size_t m = 2 * n;
  auto gamma = [hurst](double k) {
    return 0.5 * (std::pow(std::abs(k + 1.0), 2 * hurst) - 2.0 * std::pow(std::abs(k), 2 * hurst) +
                  std::pow(std::abs(k - 1.0), 2 * hurst));
  };
  std::vector<std::complex<double>> row(m);
  for (std::size_t j = 0; j <= n; ++j) row[j] = gamma(static_cast<double>(j));
  for (std::size_t j = n + 1; j < m; ++j) row[j] = gamma(static_cast<double>(m - j));
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> lambda;
  fft.fwd(lambda, row);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::complex<double>> z(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double l = std::max(0.0, lambda[k].real());
    z[k] = std::sqrt(l / static_cast<double>(m)) * std::complex<double>(normal(rng), normal(rng));
  }
  std::vector<std::complex<double>> y;
  fft.fwd(y, z);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = y[j].real();
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic critical value.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

inline double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation with average ranks for ties; NaN when a side is constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// Dense QP for the weighted SVM dual:
//   min 1/2 a'Qa - 1'a  s.t. 0 <= a_i <= C_i, y'a = 0,  Q_ij = y_i y_j K_ij.
// Accelerated projected gradient followed by an active-set polish (exact
// KKT solve on the identified free set).

struct QpSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;           // decision g(x) = sum a_j y_j K(x_j, x) - bias
  double objective = 0.0;      // sum a - 1/2 a'Qa  (maximization form)
  bool polished = false;
};

inline Eigen::VectorXd project(const Eigen::VectorXd& v, const Eigen::VectorXd& y, const Eigen::VectorXd& c) {
  auto clip = [&](double lam) {
    Eigen::VectorXd a(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::clamp(v[i] - lam * y[i], 0.0, c[i]);
    return a;
  };
  double lo = -(v.cwiseAbs().maxCoeff() + c.maxCoeff() + 1.0);
  double hi = -lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (y.dot(clip(mid)) > 0.0) lo = mid; else hi = mid;
  }
  return clip(0.5 * (lo + hi));
}

inline QpSolution solve_svm_dual(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const Eigen::VectorXd& c) {
  const Eigen::Index m = y.size();
  const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(k);
  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
  const double step = 1.0 / lip;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m), z = a, a_prev = a;
  double t = 1.0;
  for (int it = 0; it < 400000; ++it) {
    const Eigen::VectorXd grad = q * z - Eigen::VectorXd::Ones(m);
    a = project(z - step * grad, y, c);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = a + ((t - 1.0) / t_next) * (a - a_prev);
    t = t_next;
    if ((a - a_prev).norm() < 1e-15 && it > 100) break;
    a_prev = a;
  }

  QpSolution sol;
  sol.alpha = a;
  // Polish: treat near-bound entries as fixed, solve the equality-constrained
  // system for the rest and the multiplier nu (bias = -nu).
  const double eps = 1e-7;
  std::vector<Eigen::Index> free_idx;
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (a[i] <= eps * c[i]) fixed[i] = 0.0;
    else if (a[i] >= c[i] * (1 - eps)) fixed[i] = c[i];
    else free_idx.push_back(i);
  }
  if (!free_idx.empty()) {
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
    Eigen::VectorXd rhs(nf + 1);
    Eigen::VectorXd fixed_only = fixed;
    for (auto i : free_idx) fixed_only[i] = 0.0;
    const Eigen::VectorXd q_fixed = q * fixed_only;
    for (Eigen::Index r = 0; r < nf; ++r) {
      for (Eigen::Index s = 0; s < nf; ++s) sys(r, s) = q(free_idx[r], free_idx[s]);
      sys(r, nf) = y[free_idx[r]];
      sys(nf, r) = y[free_idx[r]];
      rhs[r] = 1.0 - q_fixed[free_idx[r]];
    }
    rhs[nf] = -y.dot(fixed_only);
    const Eigen::VectorXd solx = sys.fullPivLu().solve(rhs);
    Eigen::VectorXd cand = fixed_only;
    bool ok = true;
    for (Eigen::Index r = 0; r < nf; ++r) {
      cand[free_idx[r]] = solx[r];
      if (solx[r] < 0.0 || solx[r] > c[free_idx[r]]) ok = false;
    }
    const double nu = solx[nf];
    const Eigen::VectorXd g = q * cand - Eigen::VectorXd::Ones(m) + nu * y;
    for (Eigen::Index i = 0; i < m && ok; ++i) {
      const bool is_free = std::find(free_idx.begin(), free_idx.end(), i) != free_idx.end();
      if (is_free) continue;
      if (cand[i] == 0.0 && g[i] < -1e-9) ok = false;
      if (cand[i] == c[i] && g[i] > 1e-9) ok = false;
    }
    if (ok) {
      sol.alpha = cand;
      sol.bias = -nu;
      sol.polished = true;
    }
  }
  if (!sol.polished) {
    // Midpoint of the feasible bias interval from the unpolished iterate.
    const Eigen::VectorXd f = k * sol.alpha.cwiseProduct(y);
    double lo = -1e300, hi = 1e300;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double r = f[i] - y[i];  // bias making y_i g_i = 1
      const bool at_lo = sol.alpha[i] <= eps * c[i];
      const bool at_hi = sol.alpha[i] >= c[i] * (1 - eps);
      if (!at_lo && !at_hi) { lo = std::max(lo, r); hi = std::min(hi, r); continue; }
      // y g >= 1 at lower bound, y g <= 1 at upper bound.
      const bool upper_on_bias = (y[i] > 0) == at_lo;
      if (upper_on_bias) hi = std::min(hi, r); else lo = std::max(lo, r);
    }
    sol.bias = 0.5 * (lo + hi);
  }
  sol.objective = sol.alpha.sum() - 0.5 * sol.alpha.dot(q * sol.alpha);
  return sol;
}

// Fisher linear discriminant with the training-error-minimizing threshold.
// Returns the training error rate.
inline double lda_training_error(const std::vector<std::array<double, 3>>& x, const std::vector<int>& y) {
  Eigen::Vector3d m0 = Eigen::Vector3d::Zero(), m1 = Eigen::Vector3d::Zero();
  double n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector3d v(x[i][0], x[i][1], x[i][2]);
    if (y[i] > 0) { m1 += v; n1 += 1; } else { m0 += v; n0 += 1; }
  }
  m0 /= n0;
  m1 /= n1;
  Eigen::Matrix3d sw = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector3d v(x[i][0], x[i][1], x[i][2]);
    const Eigen::Vector3d d = v - (y[i] > 0 ? m1 : m0);
    sw += d * d.transpose();
  }
  const Eigen::Vector3d w = sw.ldlt().solve(m1 - m0);
  std::vector<std::pair<double, int>> proj;
  for (std::size_t i = 0; i < x.size(); ++i) proj.emplace_back(w.dot(Eigen::Vector3d(x[i][0], x[i][1], x[i][2])), y[i]);
  std::sort(proj.begin(), proj.end());
  // Threshold between positions: everything above is +1.
  std::size_t best = static_cast<std::size_t>(n0);  // threshold below all
  std::size_t neg_below = 0, pos_below = 0;
  for (const auto& [p, lab] : proj) {
    if (lab > 0) ++pos_below; else ++neg_below;
    const std::size_t errors = pos_below + (static_cast<std::size_t>(n0) - neg_below);
    best = std::min(best, errors);
  }
  return static_cast<double>(best) / static_cast<double>(x.size());
}

}  // namespace oracle
