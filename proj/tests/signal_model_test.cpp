#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles/oracles.hpp"
#include "seadet/error.hpp"
#include "seadet/signal_model.hpp"
#include "test_support.hpp"

using namespace seadet;
using namespace seadet::signal;
using testing_support::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected seadet::Error";
  return ErrorCode::Io;
}

Dataset small_dataset(int cells, std::size_t n, int primary) {
  Dataset ds;
  ds.name = "hand";
  ds.polarization = Polarization::VV;
  for (int c = 0; c < cells; ++c) {
    ComplexSeries s;
    s.cell_index = c;
    s.sample_rate_hz = 1000.0;
    s.role = c == primary ? CellRole::Primary : CellRole::ClutterOnly;
    for (std::size_t t = 0; t < n; ++t) {
      s.samples.emplace_back(0.1f * static_cast<float>(t) - 1.0f / 3.0f, static_cast<float>(c) + 1e-7f * t);
    }
    ds.cells.push_back(s);
  }
  return ds;
}

void write_meta(const std::filesystem::path& dir, const nlohmann::json& j) {
  std::ofstream(dir / "meta.json") << j.dump();
}

SynthesisParams quick_params() {
  SynthesisParams p;
  p.n_cells = 4;
  p.n_samples = 1 << 14;
  p.seed = 5;
  return p;
}

}  // namespace

TEST(SegmentCount, MatchesFormula) {
  EXPECT_EQ(segment_count(131072, 64, 4096), 1985u);
  EXPECT_EQ(segment_count(4096, 64, 4096), 1u);
  EXPECT_EQ(segment_count(4096 + 63, 64, 4096), 1u);
  EXPECT_EQ(segment_count(4096 + 64, 64, 4096), 2u);
  EXPECT_EQ(segment_count(10, 1, 1), 10u);
}

TEST(SegmentCount, RandomGeometriesAgreeWithEnumeration) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 400;
    const std::size_t window = 1 + rng() % n;
    const std::size_t step = 1 + rng() % window;
    std::size_t brute = 0;
    for (std::size_t s = 0; s + window <= n; s += step) ++brute;
    EXPECT_EQ(segment_count(n, step, window), brute) << n << " " << step << " " << window;
  }
}

TEST(SegmentCount, RejectsInvalidWindows) {
  EXPECT_EQ(code_of([] { segment_count(100, 0, 10); }), ErrorCode::InvalidWindow);
  EXPECT_EQ(code_of([] { segment_count(100, 11, 10); }), ErrorCode::InvalidWindow);
  EXPECT_EQ(code_of([] { segment_count(100, 5, 101); }), ErrorCode::InvalidWindow);
  EXPECT_EQ(code_of([] { segment_count(4095, 64, 4096); }), ErrorCode::InvalidWindow);
}

TEST(SegmentCell, WindowsAreModulusSlices) {
  auto ds = small_dataset(2, 300, 1);
  const auto segs = segment_cell(ds.cells[1], 7, 20);
  ASSERT_EQ(segs.size(), (300u - 20u) / 7u + 1u);
  const auto amp = amplitudes(ds.cells[1]);
  for (const auto& s : segs) {
    EXPECT_EQ(s.label, Label::Target);
    EXPECT_EQ(s.source_cell, 1);
    ASSERT_EQ(s.amplitudes.size(), 20u);
    for (std::size_t k = 0; k < 20; ++k) EXPECT_EQ(s.amplitudes[k], amp[s.start_index + k]);
  }
  EXPECT_EQ(segs[3].start_index, 21u);
  const auto clutter = segment_cell(ds.cells[0], 7, 20);
  EXPECT_EQ(clutter.front().label, Label::Clutter);
}

TEST(SegmentCell, AmplitudeIsComplexModulus) {
  ComplexSeries s;
  s.samples = {{3.0f, 4.0f}, {-1.0f, 0.0f}, {0.0f, 0.0f}};
  const auto a = amplitudes(s);
  EXPECT_DOUBLE_EQ(a[0], 5.0);
  EXPECT_DOUBLE_EQ(a[1], 1.0);
  EXPECT_DOUBLE_EQ(a[2], 0.0);
}

TEST(SegmentCell, SecondaryCellsAreRejected) {
  auto ds = small_dataset(3, 100, 1);
  ds.cells[2].role = CellRole::Secondary;
  EXPECT_EQ(code_of([&] { segment_cell(ds.cells[2], 4, 16); }), ErrorCode::SecondaryCellNotAllowed);
}

class DatasetRoundTrip : public ::testing::TestWithParam<FileFormat> {};

TEST_P(DatasetRoundTrip, IsLossless) {
  TempDir dir;
  auto ds = small_dataset(3, 257, 2);
  ds.cells[0].role = CellRole::Secondary;
  ds.origin = SyntheticOrigin{77, -std::numeric_limits<double>::infinity()};
  save_dataset(ds, dir.path(), GetParam());
  const auto back = load_dataset(dir.path(), std::nullopt, GetParam());
  EXPECT_EQ(back, ds);
}

TEST_P(DatasetRoundTrip, SyntheticDataSurvives) {
  TempDir dir;
  const auto ds = synthesize_dataset(quick_params());
  save_dataset(ds, dir.path(), GetParam());
  EXPECT_EQ(load_dataset(dir.path(), Polarization::HH, GetParam()), ds);
}

INSTANTIATE_TEST_SUITE_P(Formats, DatasetRoundTrip, ::testing::Values(FileFormat::Csv, FileFormat::BinaryF32));

TEST(LoadDataset, FourteenCellsWithDeclaredPrimary) {
  TempDir dir;
  auto ds = small_dataset(14, 64, 9);
  save_dataset(ds, dir.path(), FileFormat::BinaryF32);
  const auto back = load_dataset(dir.path(), Polarization::VV, FileFormat::BinaryF32);
  ASSERT_EQ(back.cells.size(), 14u);
  EXPECT_EQ(back.primary_index(), 9u);
  int primaries = 0;
  for (const auto& c : back.cells) primaries += c.role == CellRole::Primary;
  EXPECT_EQ(primaries, 1);
  for (const auto& c : back.cells) EXPECT_EQ(c.samples.size(), 64u);
}

TEST(LoadDataset, InconsistentCellLengths) {
  TempDir dir;
  auto ds = small_dataset(3, 40, 0);
  save_dataset(ds, dir.path(), FileFormat::Csv);
  std::ofstream(dir / "cell_1.csv", std::ios::app) << "1.0,2.0\n";
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::Csv); }),
            ErrorCode::InconsistentCells);
}

TEST(LoadDataset, MissingPrimaryDeclaration) {
  TempDir dir;
  save_dataset(small_dataset(2, 16, 0), dir.path(), FileFormat::Csv);
  write_meta(dir.path(), {{"sample_rate_hz", 1000.0}, {"polarization", "HH"}});
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::Csv); }),
            ErrorCode::MissingMetadata);
}

TEST(LoadDataset, MissingMetaFile) {
  TempDir dir;
  save_dataset(small_dataset(2, 16, 0), dir.path(), FileFormat::Csv);
  std::filesystem::remove(dir / "meta.json");
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::Csv); }),
            ErrorCode::MissingMetadata);
}

TEST(LoadDataset, PrimaryOutsideCells) {
  TempDir dir;
  save_dataset(small_dataset(2, 16, 0), dir.path(), FileFormat::Csv);
  write_meta(dir.path(), {{"sample_rate_hz", 1000.0}, {"primary_cell", 5}, {"polarization", "HH"}});
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::Csv); }),
            ErrorCode::MissingMetadata);
}

TEST(LoadDataset, PolarizationMismatch) {
  TempDir dir;
  save_dataset(small_dataset(2, 16, 0), dir.path(), FileFormat::Csv);
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), Polarization::HV, FileFormat::Csv); }),
            ErrorCode::MissingMetadata);
}

TEST(LoadDataset, MalformedCsvLine) {
  TempDir dir;
  save_dataset(small_dataset(2, 16, 0), dir.path(), FileFormat::Csv);
  std::ofstream(dir / "cell_0.csv", std::ios::app) << "abc,1\n";
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::Csv); }),
            ErrorCode::MalformedFile);
}

TEST(LoadDataset, TruncatedBinaryFile) {
  TempDir dir;
  save_dataset(small_dataset(2, 16, 0), dir.path(), FileFormat::BinaryF32);
  std::ofstream(dir / "cell_1.bin", std::ios::app | std::ios::binary) << "xyz";
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::BinaryF32); }),
            ErrorCode::MalformedFile);
}

TEST(LoadDataset, NoCellFiles) {
  TempDir dir;
  write_meta(dir.path(), {{"sample_rate_hz", 1000.0}, {"primary_cell", 0}, {"polarization", "HH"}});
  EXPECT_EQ(code_of([&] { load_dataset(dir.path(), std::nullopt, FileFormat::Csv); }),
            ErrorCode::MalformedFile);
}

TEST(Synthesis, DeterministicPerSeed) {
  const auto a = synthesize_dataset(quick_params());
  const auto b = synthesize_dataset(quick_params());
  EXPECT_EQ(a, b);
  auto p = quick_params();
  p.seed = 6;
  EXPECT_NE(synthesize_dataset(p).cells[0].samples, a.cells[0].samples);
}

TEST(Synthesis, LayoutHasPrimaryAndNeighbouringSecondaries) {
  SynthesisParams p = quick_params();
  p.n_cells = 14;
  const auto ds = synthesize_dataset(p);
  ASSERT_EQ(ds.cells.size(), 14u);
  EXPECT_EQ(ds.primary_index(), 7u);
  EXPECT_EQ(ds.cells[6].role, CellRole::Secondary);
  EXPECT_EQ(ds.cells[8].role, CellRole::Secondary);
  int clutter = 0;
  for (const auto& c : ds.cells) clutter += c.role == CellRole::ClutterOnly;
  EXPECT_EQ(clutter, 11);
  ASSERT_TRUE(ds.origin.has_value());
  EXPECT_EQ(ds.origin->seed, p.seed);
}

TEST(Synthesis, TargetPowerMatchesRequestedScr) {
  for (double scr : {-5.0, 0.0, 10.0, 17.0}) {
    auto p = quick_params();
    p.scr_db = scr;
    const auto with = synthesize_dataset(p);
    p.scr_db = -std::numeric_limits<double>::infinity();
    const auto without = synthesize_dataset(p);
    const std::size_t k = with.primary_index();
    double pt = 0.0, pc = 0.0;
    for (std::size_t t = 0; t < with.cells[k].samples.size(); ++t) {
      const std::complex<double> c = without.cells[k].samples[t];
      const std::complex<double> x = with.cells[k].samples[t];
      pt += std::norm(x - c);
      pc += std::norm(c);
    }
    const double measured = 10.0 * std::log10(pt / pc);
    EXPECT_NEAR(measured, scr, 0.5) << scr;
    // Clutter-only cells are untouched by the target.
    EXPECT_EQ(with.cells[0].samples, without.cells[0].samples);
  }
}

TEST(Synthesis, NoTargetAtMinusInfinity) {
  auto p = quick_params();
  p.scr_db = -std::numeric_limits<double>::infinity();
  const auto ds = synthesize_dataset(p);
  EXPECT_EQ(ds.cells.size(), 4u);
  for (const auto& c : ds.cells) {
    for (auto v : c.samples) ASSERT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
  }
}

TEST(Synthesis, ClutterEnvelopeFollowsKDistribution) {
  // Spike-free clutter sampled on the texture grid at lags long enough for the
  // texture to decorrelate; the envelope of unit-power K clutter with shape nu has
  //   P(A <= a) = 1 - 2 / Gamma(nu) * (sqrt(nu) a)^nu * K_nu(2 sqrt(nu) a).
  for (double nu : {0.5, 1.0, 4.0}) {
    SynthesisParams p;
    p.n_cells = 8;
    p.n_samples = 1 << 17;
    p.clutter_shape = nu;
    p.spike_rate_hz = 0.0;
    p.scr_db = -std::numeric_limits<double>::infinity();
    p.seed = 11;
    const auto ds = synthesize_dataset(p);
    std::vector<double> sample;
    for (const auto& c : ds.cells) {
      const auto a = amplitudes(c);
      for (std::size_t t = 0; t < a.size(); t += 500) sample.push_back(a[t]);
    }
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const double a = sample[i];
      const double x = 2.0 * std::sqrt(nu) * a;
      const double cdf =
          a <= 0 ? 0.0 : 1.0 - 2.0 / std::tgamma(nu) * std::pow(std::sqrt(nu) * a, nu) * std::cyl_bessel_k(nu, x);
      d = std::max({d, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
    }
    EXPECT_LT(d, 1.628 / std::sqrt(n)) << "nu=" << nu << " n=" << n;
  }
}

TEST(Synthesis, RejectsInvalidParameters) {
  auto p = quick_params();
  p.scr_db = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { synthesize_dataset(p); }), ErrorCode::InvalidParameter);
  p = quick_params();
  p.scr_db = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { synthesize_dataset(p); }), ErrorCode::InvalidParameter);
  p = quick_params();
  p.n_cells = 1;
  EXPECT_EQ(code_of([&] { synthesize_dataset(p); }), ErrorCode::InvalidParameter);
  p = quick_params();
  p.clutter_shape = 0.0;
  EXPECT_EQ(code_of([&] { synthesize_dataset(p); }), ErrorCode::InvalidParameter);
}

TEST(Synthesis, FormatParsing) {
  EXPECT_EQ(parse_format("csv"), FileFormat::Csv);
  EXPECT_EQ(parse_format("f32"), FileFormat::BinaryF32);
  EXPECT_EQ(code_of([] { parse_format("hdf5"); }), ErrorCode::InvalidParameter);
}
