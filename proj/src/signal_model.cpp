#include "seadet/signal_model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <limits>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "seadet/error.hpp"

namespace seadet::signal {

using json = nlohmann::json;

std::string_view to_string(CellRole r) {
  switch (r) {
    case CellRole::Primary: return "primary";
    case CellRole::Secondary: return "secondary";
    case CellRole::ClutterOnly: return "clutter";
  }
  return "?";
}

std::string_view to_string(FileFormat f) { return f == FileFormat::Csv ? "csv" : "f32"; }

FileFormat parse_format(std::string_view s) {
  if (s == "csv" || s == "CSV") return FileFormat::Csv;
  if (s == "f32" || s == "bin" || s == "binary" || s == "BinaryF32") return FileFormat::BinaryF32;
  throw Error(ErrorCode::InvalidParameter, "unknown file format '" + std::string(s) + "'");
}

std::size_t Dataset::primary_index() const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].role == CellRole::Primary) return i;
  }
  throw Error(ErrorCode::MissingMetadata, "dataset '" + name + "' has no primary cell");
}

void validate(const Dataset& ds) {
  if (ds.cells.empty()) throw Error(ErrorCode::InconsistentCells, "dataset has no cells");
  const auto& first = ds.cells.front();
  if (first.samples.empty()) throw Error(ErrorCode::InconsistentCells, "cell 0 is empty");
  int primaries = 0;
  for (const auto& c : ds.cells) {
    if (c.samples.size() != first.samples.size()) {
      throw Error(ErrorCode::InconsistentCells,
                  "cell " + std::to_string(c.cell_index) + " has " + std::to_string(c.samples.size()) +
                      " samples, cell 0 has " + std::to_string(first.samples.size()));
    }
    if (c.sample_rate_hz != first.sample_rate_hz || !(c.sample_rate_hz > 0.0)) {
      throw Error(ErrorCode::InconsistentCells, "cells disagree on sample rate");
    }
    if (c.role == CellRole::Primary) ++primaries;
  }
  if (primaries != 1) {
    throw Error(ErrorCode::MissingMetadata,
                "expected exactly one primary cell, found " + std::to_string(primaries));
  }
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::string cell_file_name(std::size_t k, FileFormat format) {
  return "cell_" + std::to_string(k) + (format == FileFormat::Csv ? ".csv" : ".bin");
}

std::vector<std::complex<float>> read_csv_cell(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  std::vector<std::complex<float>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    float re = 0.0f, im = 0.0f;
    bool ok = comma != std::string::npos;
    if (ok) {
      const char* b = line.data();
      const char* e = b + line.size();
      auto r1 = std::from_chars(b, b + comma, re);
      auto r2 = std::from_chars(b + comma + 1, e, im);
      ok = r1.ec == std::errc{} && r1.ptr == b + comma && r2.ec == std::errc{} && r2.ptr == e;
    }
    if (!ok) {
      throw Error(ErrorCode::MalformedFile,
                  file.string() + ":" + std::to_string(lineno) + ": expected 'I,Q'");
    }
    out.emplace_back(re, im);
  }
  return out;
}

std::vector<std::complex<float>> read_f32_cell(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) {
    throw Error(ErrorCode::MalformedFile,
                file.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of 8");
  }
  std::vector<std::complex<float>> out(bytes.size() / 8);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint32_t w[2];
    std::memcpy(w, bytes.data() + 8 * k, 8);
    if constexpr (std::endian::native == std::endian::big) {
      w[0] = __builtin_bswap32(w[0]);
      w[1] = __builtin_bswap32(w[1]);
    }
    out[k] = {std::bit_cast<float>(w[0]), std::bit_cast<float>(w[1])};
  }
  return out;
}

void write_csv_cell(const std::filesystem::path& file, const std::vector<std::complex<float>>& s) {
  std::string buf;
  buf.reserve(s.size() * 24);
  char tmp[64];
  for (const auto& v : s) {
    auto r = std::to_chars(tmp, tmp + sizeof tmp, v.real());
    buf.append(tmp, r.ptr);
    buf.push_back(',');
    r = std::to_chars(tmp, tmp + sizeof tmp, v.imag());
    buf.append(tmp, r.ptr);
    buf.push_back('\n');
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_f32_cell(const std::filesystem::path& file, const std::vector<std::complex<float>>& s) {
  std::vector<char> bytes(s.size() * 8);
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::uint32_t w[2] = {std::bit_cast<std::uint32_t>(s[k].real()),
                          std::bit_cast<std::uint32_t>(s[k].imag())};
    if constexpr (std::endian::native == std::endian::big) {
      w[0] = __builtin_bswap32(w[0]);
      w[1] = __builtin_bswap32(w[1]);
    }
    std::memcpy(bytes.data() + 8 * k, w, 8);
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir, std::optional<Polarization> polarization,
                     FileFormat format) {
  const auto meta_path = dir / "meta.json";
  if (!std::filesystem::exists(meta_path)) {
    throw Error(ErrorCode::MissingMetadata, "no meta.json in " + dir.string());
  }
  json meta;
  try {
    std::ifstream in(meta_path);
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MissingMetadata, "meta.json unreadable: " + std::string(e.what()));
  }
  if (!meta.contains("primary_cell") || !meta["primary_cell"].is_number_integer()) {
    throw Error(ErrorCode::MissingMetadata, "meta.json does not declare primary_cell");
  }
  if (!meta.contains("sample_rate_hz") || !meta["sample_rate_hz"].is_number()) {
    throw Error(ErrorCode::MissingMetadata, "meta.json does not declare sample_rate_hz");
  }

  Dataset ds;
  ds.name = meta.value("name", dir.filename().string());
  if (meta.contains("polarization")) {
    ds.polarization = parse_polarization(meta["polarization"].get<std::string>());
    if (polarization && *polarization != ds.polarization) {
      throw Error(ErrorCode::MissingMetadata,
                  "requested polarization " + std::string(to_string(*polarization)) +
                      " but meta.json declares " + std::string(to_string(ds.polarization)));
    }
  } else if (polarization) {
    ds.polarization = *polarization;
  } else {
    throw Error(ErrorCode::MissingMetadata, "polarization neither requested nor declared");
  }
  if (meta.contains("origin") && meta["origin"].is_object()) {
    const auto& o = meta["origin"];
    SyntheticOrigin origin;
    origin.seed = o.at("seed").get<std::uint64_t>();
    // JSON has no infinities; a target-free synthetic set stores null.
    origin.scr_db = o.at("scr_db").is_null() ? -std::numeric_limits<double>::infinity()
                                               : o.at("scr_db").get<double>();
    ds.origin = origin;
  }

  const double rate = meta["sample_rate_hz"].get<double>();
  const int primary = meta["primary_cell"].get<int>();
  std::set<int> secondary;
  if (meta.contains("secondary_cells")) {
    for (const auto& v : meta["secondary_cells"]) secondary.insert(v.get<int>());
  }

  for (std::size_t k = 0;; ++k) {
    const auto file = dir / cell_file_name(k, format);
    if (!std::filesystem::exists(file)) break;
    ComplexSeries cell;
    cell.samples = format == FileFormat::Csv ? read_csv_cell(file) : read_f32_cell(file);
    cell.sample_rate_hz = rate;
    cell.cell_index = static_cast<int>(k);
    if (static_cast<int>(k) == primary) {
      cell.role = CellRole::Primary;
    } else if (secondary.count(static_cast<int>(k))) {
      cell.role = CellRole::Secondary;
    } else {
      cell.role = CellRole::ClutterOnly;
    }
    ds.cells.push_back(std::move(cell));
  }
  if (ds.cells.empty()) {
    throw Error(ErrorCode::MalformedFile, "no " + cell_file_name(0, format) + " in " + dir.string());
  }
  if (primary < 0 || primary >= static_cast<int>(ds.cells.size())) {
    throw Error(ErrorCode::MissingMetadata,
                "primary_cell " + std::to_string(primary) + " outside the " +
                    std::to_string(ds.cells.size()) + " cells on disk");
  }
  validate(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir, FileFormat format) {
  validate(ds);
  std::filesystem::create_directories(dir);
  json meta;
  meta["name"] = ds.name;
  meta["sample_rate_hz"] = ds.cells.front().sample_rate_hz;
  meta["primary_cell"] = static_cast<int>(ds.primary_index());
  json secondary = json::array();
  for (const auto& c : ds.cells) {
    if (c.role == CellRole::Secondary) secondary.push_back(c.cell_index);
  }
  meta["secondary_cells"] = secondary;
  meta["polarization"] = std::string(to_string(ds.polarization));
  meta["n_cells"] = ds.cells.size();
  meta["n_samples"] = ds.cells.front().samples.size();
  meta["format"] = std::string(to_string(format));
  if (ds.origin) {
    json o;
    o["seed"] = ds.origin->seed;
    if (std::isfinite(ds.origin->scr_db)) {
      o["scr_db"] = ds.origin->scr_db;
    } else {
      o["scr_db"] = nullptr;
    }
    meta["origin"] = o;
  }
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write meta.json in " + dir.string());
    out << meta.dump(2) << '\n';
  }
  for (std::size_t k = 0; k < ds.cells.size(); ++k) {
    const auto file = dir / cell_file_name(k, format);
    if (format == FileFormat::Csv) {
      write_csv_cell(file, ds.cells[k].samples);
    } else {
      write_f32_cell(file, ds.cells[k].samples);
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic surrogate

namespace {

std::mt19937_64 cell_rng(std::uint64_t seed, int cell, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Unit-mean Gamma(shape) texture with exponential autocorrelation of the
// underlying Gaussian. Generated on a coarse grid through a memoryless
// transform and linearly interpolated to the sample rate.
std::vector<double> gamma_texture(std::mt19937_64& rng, std::size_t n, double fs, double shape,
                                  double corr_s) {
  const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fs * 0.01)));
  const std::size_t coarse_n = n / step + 2;
  const double rho = std::exp(-static_cast<double>(step) / (fs * corr_s));
  const double innov = std::sqrt(1.0 - rho * rho);
  std::normal_distribution<double> normal;
  std::vector<double> coarse(coarse_n);
  double g = normal(rng);
  for (std::size_t i = 0; i < coarse_n; ++i) {
    if (i > 0) g = rho * g + innov * normal(rng);
    double u = 0.5 * std::erfc(-g / std::numbers::sqrt2);
    u = std::clamp(u, 1e-15, 1.0 - 1e-15);
    coarse[i] = boost::math::gamma_p_inv(shape, u) / shape;
  }
  std::vector<double> tex(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = t / step;
    const double frac = static_cast<double>(t % step) / static_cast<double>(step);
    tex[t] = (1.0 - frac) * coarse[i] + frac * coarse[i + 1];
  }
  return tex;
}

// First-order complex Gauss-Markov process with unit power, rotating at doppler_hz.
std::vector<std::complex<double>> gauss_markov(std::mt19937_64& rng, std::size_t n, double fs,
                                               double corr_s, double doppler_hz) {
  const double rho = std::exp(-1.0 / (fs * corr_s));
  const double innov = std::sqrt((1.0 - rho * rho) / 2.0);
  const std::complex<double> rot = std::polar(rho, 2.0 * std::numbers::pi * doppler_hz / fs);
  std::normal_distribution<double> normal;
  std::vector<std::complex<double>> out(n);
  std::complex<double> s{normal(rng) / std::numbers::sqrt2, normal(rng) / std::numbers::sqrt2};
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) s = rot * s + std::complex<double>{innov * normal(rng), innov * normal(rng)};
    out[t] = s;
  }
  return out;
}

// Hann-windowed bursts at Poisson arrival times, each a Gauss-Markov return
// with its own Doppler and a log-uniform peak power.
void add_sea_spikes(std::mt19937_64& rng, const SynthesisParams& p, std::vector<std::complex<double>>& x) {
  if (p.spike_rate_hz <= 0.0) return;
  const double fs = p.sample_rate_hz;
  const double span_s = static_cast<double>(x.size()) / fs;
  std::exponential_distribution<double> gap(p.spike_rate_hz);
  std::uniform_real_distribution<double> duration(p.spike_min_duration_s, p.spike_max_duration_s);
  std::uniform_real_distribution<double> power_db(p.spike_min_power_db, p.spike_max_power_db);
  std::uniform_real_distribution<double> doppler(-150.0, 150.0);
  // Start one maximal duration early so bursts can straddle the first sample.
  for (double t0 = -p.spike_max_duration_s + gap(rng); t0 < span_s; t0 += gap(rng)) {
    const double dur = duration(rng);
    const double amp = std::sqrt(std::pow(10.0, power_db(rng) / 10.0));
    const auto n_len = static_cast<std::size_t>(dur * fs);
    if (n_len < 2) continue;
    const auto burst = gauss_markov(rng, n_len, fs, p.spike_corr_s, doppler(rng));
    const auto start = static_cast<std::ptrdiff_t>(std::floor(t0 * fs));
    for (std::size_t k = 0; k < n_len; ++k) {
      const std::ptrdiff_t t = start + static_cast<std::ptrdiff_t>(k);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(x.size())) continue;
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                            static_cast<double>(n_len - 1));
      x[static_cast<std::size_t>(t)] += amp * w * burst[k];
    }
  }
}

std::vector<std::complex<double>> clutter_component(const SynthesisParams& p, int cell) {
  auto rng = cell_rng(p.seed, cell, 0);
  std::uniform_real_distribution<double> doppler(-30.0, 30.0);
  const double fc = doppler(rng);
  const auto tex = gamma_texture(rng, p.n_samples, p.sample_rate_hz, p.clutter_shape, p.texture_corr_s);
  auto speckle = gauss_markov(rng, p.n_samples, p.sample_rate_hz, p.speckle_corr_s, fc);
  for (std::size_t t = 0; t < p.n_samples; ++t) speckle[t] *= std::sqrt(tex[t]);
  auto spike_rng = cell_rng(p.seed, cell, 2);
  add_sea_spikes(spike_rng, p, speckle);
  return speckle;
}

// Rayleigh-fluctuating complex amplitude times a random-walk Doppler phase.
std::vector<std::complex<double>> target_component(const SynthesisParams& p) {
  auto rng = cell_rng(p.seed, -1, 1);
  const double fs = p.sample_rate_hz;
  auto amp = gauss_markov(rng, p.n_samples, fs, p.target_corr_s, 0.0);
  std::uniform_real_distribution<double> start(40.0, 120.0);
  std::normal_distribution<double> normal;
  double f = start(rng);
  const double f_max = fs / 2.0;
  const double walk = 0.02 * fs / 1000.0;
  double phase = 0.0;
  for (std::size_t t = 0; t < p.n_samples; ++t) {
    f += walk * normal(rng);
    if (f > f_max) f = 2.0 * f_max - f;
    if (f < -f_max) f = -2.0 * f_max - f;
    phase = std::fmod(phase + 2.0 * std::numbers::pi * f / fs, 2.0 * std::numbers::pi);
    amp[t] *= std::polar(1.0, phase);
  }
  return amp;
}

double mean_power(const std::vector<std::complex<double>>& x) {
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return acc / static_cast<double>(x.size());
}

}  // namespace

Dataset synthesize_dataset(const SynthesisParams& p) {
  if (p.n_cells < 2) throw Error(ErrorCode::InvalidParameter, "n_cells must be >= 2");
  if (p.n_samples < 4096) throw Error(ErrorCode::InvalidParameter, "n_samples must be >= 4096");
  if (!(p.clutter_shape > 0.0) || !std::isfinite(p.clutter_shape)) {
    throw Error(ErrorCode::InvalidParameter, "clutter_shape must be positive and finite");
  }
  if (!(p.sample_rate_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "sample rate must be positive");
  if (std::isnan(p.scr_db) || p.scr_db == std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::InvalidParameter, "scr_db must be finite or -inf");
  }
  const double power_ratio = std::pow(10.0, p.scr_db / 10.0);
  if (!std::isfinite(power_ratio)) {
    throw Error(ErrorCode::InvalidParameter, "scr_db yields a non-finite target scale");
  }
  if (p.n_secondary < 0) throw Error(ErrorCode::InvalidParameter, "n_secondary must be >= 0");
  if (p.spike_rate_hz < 0.0 || !(p.spike_min_duration_s > 0.0) ||
      p.spike_max_duration_s < p.spike_min_duration_s || p.spike_max_power_db < p.spike_min_power_db ||
      !(p.spike_corr_s > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "invalid sea-spike parameters");
  }

  const int primary = p.n_cells / 2;
  std::vector<CellRole> roles(static_cast<std::size_t>(p.n_cells), CellRole::ClutterOnly);
  roles[static_cast<std::size_t>(primary)] = CellRole::Primary;
  const int n_secondary = std::min(p.n_secondary, p.n_cells - 2);
  for (int placed = 0, offset = 1; placed < n_secondary; ++offset) {
    for (int side : {-1, +1}) {
      const int c = primary + side * offset;
      if (placed < n_secondary && c >= 0 && c < p.n_cells) {
        roles[static_cast<std::size_t>(c)] = CellRole::Secondary;
        ++placed;
      }
    }
  }

  const auto target = power_ratio > 0.0 ? target_component(p) : std::vector<std::complex<double>>{};
  const double target_power = target.empty() ? 1.0 : mean_power(target);

  Dataset ds;
  ds.polarization = p.polarization;
  ds.name = "synthetic-" + std::to_string(p.seed);
  ds.origin = SyntheticOrigin{p.seed, p.scr_db};
  ds.cells.reserve(static_cast<std::size_t>(p.n_cells));
  for (int c = 0; c < p.n_cells; ++c) {
    auto x = clutter_component(p, c);
    const CellRole role = roles[static_cast<std::size_t>(c)];
    if (!target.empty() && role != CellRole::ClutterOnly) {
      double ratio = power_ratio;
      if (role == CellRole::Secondary) ratio *= std::pow(10.0, -p.secondary_attenuation_db / 10.0);
      const double scale = std::sqrt(ratio * mean_power(x) / target_power);
      for (std::size_t t = 0; t < x.size(); ++t) x[t] += scale * target[t];
    }
    ComplexSeries cell;
    cell.samples.resize(x.size());
    std::transform(x.begin(), x.end(), cell.samples.begin(), [](const std::complex<double>& v) {
      return std::complex<float>(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    });
    cell.sample_rate_hz = p.sample_rate_hz;
    cell.cell_index = c;
    cell.role = role;
    ds.cells.push_back(std::move(cell));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Segmentation

std::size_t segment_count(std::size_t cell_length, std::size_t step, std::size_t window) {
  if (step < 1 || window < step || window > cell_length) {
    throw Error(ErrorCode::InvalidWindow,
                "need 1 <= d <= D <= cell length (d=" + std::to_string(step) +
                    ", D=" + std::to_string(window) + ", length=" + std::to_string(cell_length) + ")");
  }
  return (cell_length - window) / step + 1;
}

std::vector<double> amplitudes(const ComplexSeries& cell) {
  std::vector<double> out(cell.samples.size());
  std::transform(cell.samples.begin(), cell.samples.end(), out.begin(), [](const std::complex<float>& v) {
    const double re = v.real();
    const double im = v.imag();
    return std::sqrt(re * re + im * im);
  });
  return out;
}

std::vector<Segment> segment_cell(const ComplexSeries& cell, std::size_t step, std::size_t window) {
  if (cell.role == CellRole::Secondary) {
    throw Error(ErrorCode::SecondaryCellNotAllowed,
                "cell " + std::to_string(cell.cell_index) + " is a secondary cell");
  }
  const std::size_t count = segment_count(cell.samples.size(), step, window);
  const Label label = cell.role == CellRole::Primary ? Label::Target : Label::Clutter;
  const auto amp = amplitudes(cell);
  std::vector<Segment> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t start = j * step;
    out[j].amplitudes.assign(amp.begin() + static_cast<std::ptrdiff_t>(start),
                             amp.begin() + static_cast<std::ptrdiff_t>(start + window));
    out[j].label = label;
    out[j].source_cell = cell.cell_index;
    out[j].start_index = start;
  }
  return out;
}

}  // namespace seadet::signal
