#include "seadet/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "seadet/error.hpp"
#include "seadet/simd/kernels.hpp"

namespace seadet::features {

std::vector<std::size_t> default_tau_grid() {
  return {128, 181, 256, 362, 512, 724, 1024, 1448, 2048};
}

void validate(const FeatureConfig& config) {
  if (config.k_bins < 1) throw Error(ErrorCode::InvalidParameter, "k_bins must be >= 1");
  std::set<std::size_t> distinct;
  for (auto t : config.tau_grid) {
    if (t < 8) throw Error(ErrorCode::InvalidParameter, "every tau must be >= 8");
    distinct.insert(t);
  }
  if (distinct.size() < 3) {
    throw Error(ErrorCode::InvalidParameter, "tau grid needs at least 3 distinct values");
  }
}

double tie(std::span<const double> x, int k_bins) {
  if (k_bins < 1) throw Error(ErrorCode::InvalidParameter, "k_bins must be >= 1");
  if (x.empty()) throw Error(ErrorCode::InvalidParameter, "TIE of an empty sequence");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) return 0.0;

  std::vector<std::size_t> counts(static_cast<std::size_t>(k_bins), 0);
  const double k = static_cast<double>(k_bins);
  for (double v : x) {
    auto bin = static_cast<std::size_t>((v - lo) * k / range);
    counts[std::min(bin, counts.size() - 1)] += 1;  // top edge closed
  }
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double rescaled_range(std::span<const double> x, std::size_t tau) {
  if (tau < 2 || tau > x.size()) {
    throw Error(ErrorCode::InvalidParameter, "tau outside [2, N]");
  }
  const std::size_t periods = x.size() / tau;
  const double t = static_cast<double>(tau);
  double sum_ratio = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < periods; ++l) {
    const auto sub = x.subspan(l * tau, tau);
    const double mean = std::accumulate(sub.begin(), sub.end(), 0.0) / t;
    double ss = 0.0, y = 0.0, y_min = 0.0, y_max = 0.0;
    bool first = true;
    for (double v : sub) {
      const double dev = v - mean;
      ss += dev * dev;
      y += dev;
      if (first) {
        y_min = y_max = y;
        first = false;
      } else {
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
    const double s = std::sqrt(ss / t);
    if (!(s > 0.0)) continue;
    sum_ratio += (y_max - y_min) / s;
    ++used;
  }
  if (used == 0) {
    throw Error(ErrorCode::DegenerateInput,
                "every sub-period of length " + std::to_string(tau) + " is constant");
  }
  return sum_ratio / static_cast<double>(used);
}

double log_log_slope(std::span<const std::size_t> taus, std::span<const double> rs) {
  if (taus.size() != rs.size() || taus.size() < 2) {
    throw Error(ErrorCode::InvalidParameter, "slope fit needs matching inputs of length >= 2");
  }
  const double n = static_cast<double>(taus.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    mx += std::log2(static_cast<double>(taus[i]));
    my += std::log2(rs[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double dx = std::log2(static_cast<double>(taus[i])) - mx;
    sxy += dx * (std::log2(rs[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidParameter, "slope fit needs distinct taus");
  return sxy / sxx;
}

double the(std::span<const double> x, std::span<const std::size_t> tau_grid) {
  FeatureConfig cfg;
  cfg.tau_grid.assign(tau_grid.begin(), tau_grid.end());
  validate(cfg);
  const std::size_t tau_max = *std::max_element(tau_grid.begin(), tau_grid.end());
  if (x.size() < 2 * tau_max) {
    throw Error(ErrorCode::InvalidParameter,
                "THE needs N >= 2*max(tau) (N=" + std::to_string(x.size()) +
                    ", max tau=" + std::to_string(tau_max) + ")");
  }
  std::vector<double> rs(tau_grid.size());
  for (std::size_t i = 0; i < tau_grid.size(); ++i) rs[i] = rescaled_range(x, tau_grid[i]);
  return log_log_slope(tau_grid, rs);
}

namespace {

double peak_to_mean(std::span<const double> mag) {
  const double peak = *std::max_element(mag.begin(), mag.end());
  const double mean = std::accumulate(mag.begin(), mag.end(), 0.0) / static_cast<double>(mag.size());
  if (!(mean > 0.0)) throw Error(ErrorCode::InvalidParameter, "FPAR of an all-zero sequence");
  return peak / mean;
}

}  // namespace

double fpar(std::span<const std::complex<double>> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::InvalidParameter, "FPAR needs N >= 2");
  auto spec = fft::forward(samples);
  std::vector<double> mag(spec.size());
  simd::active_kernels().cabs(spec.data(), spec.size(), mag.data());
  return peak_to_mean(mag);
}

double fpar(std::span<const double> amplitudes) {
  if (amplitudes.size() < 2) throw Error(ErrorCode::InvalidParameter, "FPAR needs N >= 2");
  auto spec = fft::forward_real(amplitudes);
  std::vector<double> mag(spec.size());
  simd::active_kernels().cabs(spec.data(), spec.size(), mag.data());
  return peak_to_mean(mag);
}

// ---------------------------------------------------------------------------

Extractor::Extractor(FeatureConfig config) : config_(std::move(config)) { validate(config_); }
Extractor::~Extractor() = default;

double Extractor::spectral_ratio(std::span<const double> amplitudes) {
  if (amplitudes.size() < 2) throw Error(ErrorCode::InvalidParameter, "FPAR needs N >= 2");
  if (!plan_ || plan_->size() != amplitudes.size()) {
    plan_ = std::make_unique<fft::Plan>(amplitudes.size());
    spectrum_.resize(amplitudes.size());
    magnitude_.resize(amplitudes.size());
  }
  std::transform(amplitudes.begin(), amplitudes.end(), spectrum_.begin(),
                 [](double v) { return std::complex<double>{v, 0.0}; });
  plan_->forward(spectrum_);
  simd::active_kernels().cabs(spectrum_.data(), spectrum_.size(), magnitude_.data());
  return peak_to_mean(magnitude_);
}

FeatureVector Extractor::extract(const signal::Segment& segment) {
  FeatureVector v;
  v.label = segment.label;
  v.source_cell = segment.source_cell;
  v.start_index = segment.start_index;
  try {
    v.tie = features::tie(segment.amplitudes, config_.k_bins);
    v.the = features::the(segment.amplitudes, config_.tau_grid);
    v.fpar = spectral_ratio(segment.amplitudes);
  } catch (const Error& e) {
    throw Error(e.code(), "segment (cell " + std::to_string(segment.source_cell) + ", start " +
                              std::to_string(segment.start_index) + "): " + e.what());
  }
  return v;
}

std::vector<FeatureVector> Extractor::extract_dataset(const signal::Dataset& ds, std::size_t step,
                                                      std::size_t window) {
  signal::validate(ds);
  std::vector<FeatureVector> out;
  for (const auto& cell : ds.cells) {
    if (cell.role == signal::CellRole::Secondary) continue;
    const auto segments = signal::segment_cell(cell, step, window);
    out.reserve(out.size() + segments.size());
    for (const auto& s : segments) out.push_back(extract(s));
  }
  return out;
}

FeatureVector extract(const signal::Segment& segment, const FeatureConfig& config) {
  Extractor ex(config);
  return ex.extract(segment);
}

// ---------------------------------------------------------------------------

NormalizationStats fit_normalization(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyTrainingSet, "cannot fit normalization on nothing");
  NormalizationStats s;
  const double n = static_cast<double>(vectors.size());
  for (int d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (const auto& v : vectors) mean += v.values()[static_cast<std::size_t>(d)];
    mean /= n;
    double ss = 0.0;
    for (const auto& v : vectors) {
      const double dev = v.values()[static_cast<std::size_t>(d)] - mean;
      ss += dev * dev;
    }
    const double sd = std::sqrt(ss / n);
    s.mean[static_cast<std::size_t>(d)] = mean;
    s.std[static_cast<std::size_t>(d)] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  }
  return s;
}

std::array<double, 3> normalize(const std::array<double, 3>& v, const NormalizationStats& stats) {
  return {(v[0] - stats.mean[0]) / stats.std[0], (v[1] - stats.mean[1]) / stats.std[1],
          (v[2] - stats.mean[2]) / stats.std[2]};
}

FeatureVector apply_normalization(const FeatureVector& v, const NormalizationStats& stats) {
  const auto z = normalize(v.values(), stats);
  FeatureVector out = v;
  out.tie = z[0];
  out.the = z[1];
  out.fpar = z[2];
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void append_double(std::string& buf, double v) {
  char tmp[64];
  auto r = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf.append(tmp, r.ptr);
}

template <class T>
T parse_field(std::string_view field, std::size_t lineno) {
  T value{};
  auto r = std::from_chars(field.data(), field.data() + field.size(), value);
  if (r.ec != std::errc{} || r.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::MalformedFile, "feature CSV line " + std::to_string(lineno) +
                                              ": bad field '" + std::string(field) + "'");
  }
  return value;
}

constexpr std::string_view kHeader = "tie,the,fpar,label,source_cell,start_index";

}  // namespace

void write_csv(std::ostream& out, std::span<const FeatureVector> vectors) {
  std::string buf(kHeader);
  buf.push_back('\n');
  for (const auto& v : vectors) {
    append_double(buf, v.tie);
    buf.push_back(',');
    append_double(buf, v.the);
    buf.push_back(',');
    append_double(buf, v.fpar);
    buf += v.label == Label::Target ? ",+1," : ",-1,";
    buf += std::to_string(v.source_cell);
    buf.push_back(',');
    buf += std::to_string(v.start_index);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_csv(out, vectors);
}

std::vector<FeatureVector> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedFile, "feature CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw Error(ErrorCode::MalformedFile, "feature CSV header must be '" + std::string(kHeader) + "'");
  }
  std::vector<FeatureVector> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 6) {
      throw Error(ErrorCode::MalformedFile, "feature CSV line " + std::to_string(lineno) +
                                                ": expected 6 fields, got " + std::to_string(f.size()));
    }
    FeatureVector v;
    v.tie = parse_field<double>(f[0], lineno);
    v.the = parse_field<double>(f[1], lineno);
    v.fpar = parse_field<double>(f[2], lineno);
    std::string_view lab = f[3];
    if (!lab.empty() && lab.front() == '+') lab.remove_prefix(1);
    const int label = parse_field<int>(lab, lineno);
    if (label != 1 && label != -1) {
      throw Error(ErrorCode::MalformedFile,
                  "feature CSV line " + std::to_string(lineno) + ": label must be +1 or -1");
    }
    v.label = label_from_int(label);
    v.source_cell = parse_field<int>(f[4], lineno);
    v.start_index = parse_field<std::size_t>(f[5], lineno);
    out.push_back(v);
  }
  return out;
}

std::vector<FeatureVector> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_csv(in);
}

}  // namespace seadet::features
