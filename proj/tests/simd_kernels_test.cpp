#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "seadet/error.hpp"
#include "seadet/simd/kernels.hpp"

using namespace seadet::simd;

namespace {

const KernelTable* wide() { return avx2_kernels(); }

struct Cloud {
  std::vector<double> x, y, z, sign, weight;
  Points3 view() const { return {x.data(), y.data(), z.data(), x.size()}; }
};

Cloud make_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.5);
  std::uniform_real_distribution<double> ud(0.0, 2.0);
  Cloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.x.push_back(nd(rng));
    c.y.push_back(nd(rng));
    c.z.push_back(nd(rng));
    c.sign.push_back(i % 3 == 0 ? -1.0 : 1.0);
    c.weight.push_back(ud(rng) * c.sign.back());
  }
  return c;
}

}  // namespace

TEST(SimdKernels, ScalarTableIsAlwaysAvailable) {
  EXPECT_EQ(scalar_kernels().isa, Isa::Scalar);
  EXPECT_EQ(to_string(Isa::Scalar), "scalar");
}

TEST(SimdKernels, KernelRowMatchesScalarForEveryTailLength) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 1001u}) {
    const auto c = make_cloud(n, 7 + n);
    const double center[3] = {0.3, -0.2, 1.1};
    for (auto form : {KernelForm::Laplacian, KernelForm::Gaussian}) {
      for (double gamma : {0.5, 0.125, 3.0}) {
        std::vector<double> a(n, -9.0), b(n, -9.0);
        scalar_kernels().kernel_row(c.view(), center, gamma, form, c.sign.data(), 0.75, a.data());
        wide()->kernel_row(c.view(), center, gamma, form, c.sign.data(), 0.75, b.data());
        for (std::size_t i = 0; i < n; ++i) {
          EXPECT_NEAR(a[i], b[i], 1e-14 * std::max(1.0, std::abs(a[i]))) << "n=" << n << " i=" << i;
        }
        scalar_kernels().kernel_row(c.view(), center, gamma, form, nullptr, 1.0, a.data());
        wide()->kernel_row(c.view(), center, gamma, form, nullptr, 1.0, b.data());
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-14);
      }
    }
  }
}

TEST(SimdKernels, KernelRowMatchesClosedForm) {
  const auto c = make_cloud(9, 3);
  const double center[3] = {0.0, 0.0, 0.0};
  std::vector<double> out(9);
  const KernelTable& t = active_kernels();
  t.kernel_row(c.view(), center, 0.5, KernelForm::Laplacian, nullptr, 1.0, out.data());
  for (std::size_t i = 0; i < 9; ++i) {
    const double d = std::sqrt(c.x[i] * c.x[i] + c.y[i] * c.y[i] + c.z[i] * c.z[i]);
    EXPECT_NEAR(out[i], std::exp(-0.5 * d), 1e-14);
  }
  t.kernel_row(c.view(), center, 0.5, KernelForm::Gaussian, nullptr, 1.0, out.data());
  for (std::size_t i = 0; i < 9; ++i) {
    const double d2 = c.x[i] * c.x[i] + c.y[i] * c.y[i] + c.z[i] * c.z[i];
    EXPECT_NEAR(out[i], std::exp(-0.5 * d2), 1e-14);
  }
}

TEST(SimdKernels, KernelSumMatchesScalar) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  for (std::size_t n : {1u, 3u, 4u, 6u, 250u, 4099u}) {
    const auto c = make_cloud(n, 100 + n);
    const double center[3] = {-0.4, 0.9, 0.1};
    for (auto form : {KernelForm::Laplacian, KernelForm::Gaussian}) {
      const double a = scalar_kernels().kernel_sum(c.view(), center, 0.5, form, c.weight.data());
      const double b = wide()->kernel_sum(c.view(), center, 0.5, form, c.weight.data());
      double mag = 0.0;
      for (double w : c.weight) mag += std::abs(w);
      EXPECT_NEAR(a, b, 1e-13 * std::max(1.0, mag)) << n;
    }
  }
}

TEST(SimdKernels, Axpy2MatchesScalar) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  for (std::size_t n : {0u, 1u, 5u, 8u, 31u, 1000u}) {
    const auto c = make_cloud(n, 55 + n);
    std::vector<double> g1 = c.z, g2 = c.z;
    scalar_kernels().axpy2(g1.data(), 0.3, c.x.data(), -1.7, c.y.data(), n);
    wide()->axpy2(g2.data(), 0.3, c.x.data(), -1.7, c.y.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g1[i], g2[i], 1e-14 * std::max(1.0, std::abs(g1[i])));
  }
}

TEST(SimdKernels, CabsIsBitIdentical) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 10.0);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 4096u, 4097u}) {
    std::vector<std::complex<double>> z(n);
    for (auto& v : z) v = {nd(rng), nd(rng)};
    std::vector<double> a(n), b(n);
    scalar_kernels().cabs(z.data(), n, a.data());
    wide()->cabs(z.data(), n, b.data());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(a[i], b[i]);
      EXPECT_NEAR(a[i], std::abs(z[i]), 1e-12 * std::max(1.0, a[i]));
    }
  }
}

TEST(SimdKernels, ExpHandlesRangeEdges) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> in = {0.0, -1.0, 1.0, -700.0, -708.0, -709.0, -745.0, -1e6, 700.0, 709.7, 710.0,
                            1e6, -inf, inf, 1e-300, -0.5};
  std::vector<double> out(in.size());
  wide()->exp(in.data(), in.size(), out.data());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double ref = std::exp(in[i]);
    if (std::isinf(ref)) {
      EXPECT_TRUE(std::isinf(out[i])) << in[i];
    } else if (ref < 1e-307) {
      EXPECT_LE(out[i], 1e-300) << in[i];
      EXPECT_GE(out[i], 0.0);
    } else {
      EXPECT_NEAR(out[i], ref, 4e-16 * ref) << in[i];
    }
  }
  const double nan_in[1] = {std::numeric_limits<double>::quiet_NaN()};
  double nan_out[1];
  wide()->exp(nan_in, 1, nan_out);
  EXPECT_TRUE(std::isnan(nan_out[0]));
}

TEST(SimdKernels, ExpDenseSweepAgreesWithLibm) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  std::vector<double> in;
  for (double v = -700.0; v <= 700.0; v += 0.0137) in.push_back(v);
  std::vector<double> out(in.size());
  wide()->exp(in.data(), in.size(), out.data());
  double worst = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    worst = std::max(worst, std::abs(out[i] - std::exp(in[i])) / std::exp(in[i]));
  }
  EXPECT_LT(worst, 5e-16);
}

TEST(SimdKernels, SelectIsaRoundTrips) {
  const Isa before = active_isa();
  select_isa(Isa::Scalar);
  EXPECT_EQ(active_isa(), Isa::Scalar);
  EXPECT_EQ(active_kernels().isa, Isa::Scalar);
  if (wide()) {
    select_isa(Isa::Avx2);
    EXPECT_EQ(active_kernels().isa, Isa::Avx2);
  } else {
    EXPECT_THROW(select_isa(Isa::Avx2), seadet::Error);
  }
  select_isa(before);
}

// Whole-pipeline equivalence: the solver and the feature extractor give the
// same answers under either kernel table.
#include "seadet/features.hpp"
#include "seadet/signal_model.hpp"
#include "seadet/svm.hpp"
#include "test_support.hpp"

namespace {

class IsaGuard {
 public:
  explicit IsaGuard(Isa isa) : before_(active_isa()) { select_isa(isa); }
  ~IsaGuard() { select_isa(before_); }

 private:
  Isa before_;
};

}  // namespace

TEST(SimdEquivalence, SmoSolutionsAgree) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  const auto pts = testing_support::gaussian_clouds(400, 200, 1.0, 1.0, 77);
  seadet::svm::TrainConfig cfg;
  cfg.beta0 = 0.5;
  cfg.beta1 = 2.0;
  cfg.kkt_tol = 1e-6;
  for (auto form : {KernelForm::Laplacian, KernelForm::Gaussian}) {
    const seadet::svm::KernelConfig k{1.0, form};
    seadet::svm::TrainResult a, b;
    {
      IsaGuard g(Isa::Scalar);
      a = seadet::svm::train(pts, {}, k, cfg);
    }
    {
      IsaGuard g(Isa::Avx2);
      b = seadet::svm::train(pts, {}, k, cfg);
    }
    EXPECT_NEAR(a.diagnostics.dual_objective, b.diagnostics.dual_objective, 1e-8 * std::abs(a.diagnostics.dual_objective));
    std::size_t disagree = 0;
    for (const auto& p : pts) {
      const double ga = seadet::svm::decision_value_normalized(a.model, p.values());
      const double gb = seadet::svm::decision_value_normalized(b.model, p.values());
      disagree += (ga > 0) != (gb > 0) && std::abs(ga) > 1e-4;
    }
    EXPECT_EQ(disagree, 0u);
  }
}

TEST(SimdEquivalence, FeaturesAreIdentical) {
  if (!wide()) GTEST_SKIP() << "AVX2 not available";
  seadet::signal::SynthesisParams p;
  p.n_cells = 2;
  p.n_samples = 1 << 13;
  const auto ds = seadet::signal::synthesize_dataset(p);
  std::vector<seadet::features::FeatureVector> a, b;
  {
    IsaGuard g(Isa::Scalar);
    seadet::features::Extractor ex({});
    a = ex.extract_dataset(ds, 512, 4096);
  }
  {
    IsaGuard g(Isa::Avx2);
    seadet::features::Extractor ex({});
    b = ex.extract_dataset(ds, 512, 4096);
  }
  EXPECT_EQ(a, b);
}
