#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "json_config.hpp"
#include "seadet/error.hpp"
#include "seadet/eval.hpp"
#include "seadet/far_controller.hpp"
#include "seadet/features.hpp"
#include "seadet/signal_model.hpp"
#include "seadet/svm.hpp"

namespace fs = std::filesystem;
using namespace seadet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown after outputs were written but the run did not meet its target.
struct ConvergenceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const CLI::Validator kFiniteOrMinusInf(
    [](std::string& s) -> std::string {
      double v = 0.0;
      try {
        std::size_t pos = 0;
        v = std::stod(s, &pos);
        if (pos != s.size()) return "not a number: " + s;
      } catch (...) {
        return "not a number: " + s;
      }
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) return "must be finite or -inf, got " + s;
      return {};
    },
    "FINITE|-inf", "finite or -inf");

const CLI::Validator kProbability(
    [](std::string& s) -> std::string {
      try {
        const double v = std::stod(s);
        if (!(v > 0.0 && v < 1.0)) return "must lie in (0, 1), got " + s;
      } catch (...) {
        return "not a number: " + s;
      }
      return {};
    },
    "(0,1)", "probability");

struct GenerateOpts {
  signal::SynthesisParams params;
  std::string polarization = "HH";
  std::string format = "f32";
  std::string out;
};

struct ExtractOpts {
  std::string data;
  std::string format = "f32";
  std::string polarization;
  std::size_t step = 64;
  std::size_t window = 4096;
  int k_bins = 100;
  std::vector<std::size_t> tau_grid = features::default_tau_grid();
  std::string out;
};

struct SvmOpts {
  double delta = 1.0;
  std::string kernel = "paper";
  double eta = 1e-4;
  double beta_h = 2.0;
  double beta_l = 0.0;
  double beta1 = 1.0;
  int max_iters = 50;
  double kkt_tol = 1e-3;
  std::size_t max_passes = 100;
  std::size_t cache_mb = 1024;
  double train_fraction = 0.5;
  std::uint64_t split_seed = 0;

  svm::KernelConfig kernel_config() const {
    svm::KernelConfig k;
    k.delta = delta;
    k.form = svm::parse_kernel_form(kernel);
    svm::validate(k);
    return k;
  }
  far::FarTarget target(double p_f) const {
    far::FarTarget t;
    t.p_f = p_f;
    t.eta = eta;
    t.beta_h = beta_h;
    t.beta_l = beta_l;
    t.beta1 = beta1;
    t.max_iters = max_iters;
    far::validate(t);
    return t;
  }
  far::ControllerOptions controller() const {
    far::ControllerOptions o;
    o.kkt_tol = kkt_tol;
    o.max_passes = max_passes;
    o.cache_bytes = cache_mb << 20;
    return o;
  }
};

struct TrainOpts {
  std::string features;
  std::string out;
  std::string trace;
  double p_f = 0.01;
  bool no_split = false;
  SvmOpts svm;
};

struct DetectOpts {
  std::string model;
  std::string features;
  std::string out;
};

struct EvaluateOpts {
  std::vector<std::string> features;
  std::vector<double> pf_grid = {0.001, 0.01, 0.1};
  std::string baseline = "none";
  std::string out;
  std::string roc;
  SvmOpts svm;
};

void add_svm_options(CLI::App* cmd, SvmOpts& o) {
  cmd->add_option("--delta", o.delta, "RBF kernel width")->capture_default_str();
  cmd->add_option("--kernel", o.kernel, "Kernel form")
      ->check(CLI::IsMember({"paper", "laplacian", "gaussian"}))
      ->capture_default_str();
  cmd->add_option("--eta", o.eta, "FAR tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--beta-h", o.beta_h, "Upper bisection bound on beta0")->capture_default_str();
  cmd->add_option("--beta-l", o.beta_l, "Lower bisection bound on beta0")->capture_default_str();
  cmd->add_option("--beta1", o.beta1, "Target-class penalty")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-iters", o.max_iters, "Bisection iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--kkt-tol", o.kkt_tol, "SMO stopping tolerance")->capture_default_str();
  cmd->add_option("--max-passes", o.max_passes, "SMO budget in multiples of the training size")->capture_default_str();
  cmd->add_option("--cache-mb", o.cache_mb, "Kernel row cache size (MiB)")->capture_default_str();
  cmd->add_option("--train-fraction", o.train_fraction, "Fraction of targets used for training")
      ->check(kProbability)
      ->capture_default_str();
  cmd->add_option("--split-seed", o.split_seed, "Seed of the target split")->capture_default_str();
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

void run_generate(const GenerateOpts& o) {
  auto p = o.params;
  p.polarization = parse_polarization(o.polarization);
  const auto format = signal::parse_format(o.format);
  const auto ds = signal::synthesize_dataset(p);
  fs::create_directories(o.out);
  signal::save_dataset(ds, o.out, format);
  std::cerr << "generated " << ds.cells.size() << " cells x " << p.n_samples << " samples in " << o.out << "\n";
}

void run_extract(const ExtractOpts& o) {
  std::optional<Polarization> pol;
  if (!o.polarization.empty()) pol = parse_polarization(o.polarization);
  const auto ds = signal::load_dataset(o.data, pol, signal::parse_format(o.format));
  features::FeatureConfig cfg;
  cfg.k_bins = o.k_bins;
  cfg.tau_grid = o.tau_grid;
  features::validate(cfg);
  features::Extractor ex(cfg);
  const auto vecs = ex.extract_dataset(ds, o.step, o.window);
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  features::write_csv(out, vecs);
  std::size_t targets = 0;
  for (const auto& v : vecs) targets += v.label == Label::Target;
  std::cerr << "extracted " << vecs.size() << " vectors (" << targets << " target, " << vecs.size() - targets
            << " clutter) to " << o.out << "\n";
}

void run_train(const TrainOpts& o) {
  const auto all = features::read_csv(fs::path(o.features));
  const auto kernel = o.svm.kernel_config();
  const auto target = o.svm.target(o.p_f);
  std::vector<features::FeatureVector> training;
  if (o.no_split) {
    training = all;
  } else {
    training = eval::split(all, {o.svm.train_fraction, o.svm.split_seed}).train;
  }
  const auto trace = far::fit_with_far(training, kernel, target, o.svm.controller());
  const fs::path model_path(o.out);
  const fs::path trace_path = o.trace.empty() ? fs::path(o.out).replace_extension(".trace.json") : fs::path(o.trace);
  svm::save_model(trace.final_model, model_path);
  write_json(trace_path, far::to_json(trace, model_path.filename().string()));
  for (const auto& w : trace.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "P_F = " << trace.final_p_F() << " at beta0 = " << trace.final_beta0() << " after "
            << trace.iterations.size() << " iterations, converged = " << (trace.converged ? "true" : "false")
            << "\n";
  if (!trace.converged) throw ConvergenceFailure("FAR target not reached within tolerance");
}

void run_detect(const DetectOpts& o) {
  const auto model = svm::load_model(o.model);
  const auto vecs = features::read_csv(fs::path(o.features));
  const auto g = svm::decision_values(model, vecs);
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + out.string());
  f << "source_cell,start_index,label,margin,decision\n";
  std::size_t declared = 0;
  char buf[64];
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    const bool tgt = g[i] > 0.0;
    declared += tgt;
    const auto r = std::to_chars(buf, buf + sizeof buf, g[i]);
    f << vecs[i].source_cell << ',' << vecs[i].start_index << ',' << (vecs[i].label == Label::Target ? "+1" : "-1")
      << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)) << ',' << (tgt ? "+1" : "-1") << '\n';
  }
  std::cerr << declared << " of " << vecs.size() << " vectors declared targets\n";
}

void run_evaluate(const EvaluateOpts& o) {
  const auto kernel = o.svm.kernel_config();
  for (double p : o.pf_grid) o.svm.target(p);  // validates every grid value
  const auto base = o.svm.target(o.pf_grid.front());
  nlohmann::json report;
  report["pf_grid"] = o.pf_grid;
  report["datasets"] = nlohmann::json::array();
  std::vector<eval::DetectorReport> svm_reports, hurst_reports, all_reports;
  bool all_converged = true;
  for (const auto& path : o.features) {
    const auto vecs = features::read_csv(fs::path(path));
    const auto s = eval::split(vecs, {o.svm.train_fraction, o.svm.split_seed});
    auto rep = eval::roc_sweep(s.train, s.test, kernel, o.pf_grid, base, o.svm.controller());
    rep.dataset_name = fs::path(path).stem().string();
    nlohmann::json entry;
    entry["name"] = rep.dataset_name;
    entry["n_train"] = s.train.size();
    entry["n_test"] = s.test.size();
    entry["svm"] = eval::to_json(rep);
    for (const auto& p : rep.roc_points) all_converged = all_converged && p.converged && p.error.empty();
    svm_reports.push_back(rep);
    all_reports.push_back(rep);
    if (o.baseline == "hurst") {
      auto h = eval::hurst_threshold_baseline(s.train, s.test, o.pf_grid);
      h.dataset_name = rep.dataset_name;
      entry["hurst"] = eval::to_json(h);
      hurst_reports.push_back(h);
      all_reports.push_back(h);
    }
    report["datasets"].push_back(entry);
    std::cerr << rep.dataset_name << ": P_d = " << rep.p_d << " at P_F = " << rep.p_F_train << "\n";
  }
  // Per-dataset P_d averaged at each grid value.
  auto averages = [&](const std::vector<eval::DetectorReport>& reps) {
    nlohmann::json arr = nlohmann::json::array();
    for (double p : o.pf_grid) {
      double acc = 0.0;
      std::size_t n = 0;
      for (const auto& r : reps) {
        for (const auto& pt : r.roc_points) {
          if (pt.target_p_f == p && std::isfinite(pt.p_d)) {
            acc += pt.p_d;
            ++n;
          }
        }
      }
      arr.push_back({{"target_p_f", p}, {"mean_p_d", n ? nlohmann::json(acc / static_cast<double>(n)) : nlohmann::json()}});
    }
    return arr;
  };
  report["average"]["svm"] = averages(svm_reports);
  if (o.baseline == "hurst") report["average"]["hurst"] = averages(hurst_reports);
  write_json(o.out, report);
  if (!o.roc.empty()) {
    const fs::path roc(o.roc);
    if (roc.has_parent_path()) fs::create_directories(roc.parent_path());
    std::ofstream f(roc, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + roc.string());
    eval::write_roc_csv(f, all_reports);
  }
  if (!all_converged) throw ConvergenceFailure("at least one ROC point did not converge");
}

bool is_usage_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::InvalidWindow:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sea-surface small-target detection with a FAR-controlled SVM"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<cli::JsonConfig>(&app));
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the effective configuration as JSON and exit");

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Synthesize a compound-K clutter dataset with a target cell");
  g->add_option("--seed", gen.params.seed, "Random seed")->capture_default_str();
  g->add_option("--scr-db", gen.params.scr_db, "Signal-to-clutter ratio of the primary cell (dB)")
      ->check(kFiniteOrMinusInf)
      ->capture_default_str();
  g->add_option("--cells", gen.params.n_cells, "Number of range cells")->check(CLI::Range(2, 1 << 16))->capture_default_str();
  g->add_option("--samples", gen.params.n_samples, "Samples per cell")->capture_default_str();
  g->add_option("--shape", gen.params.clutter_shape, "K-distribution shape parameter")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--sample-rate", gen.params.sample_rate_hz, "Pulse repetition frequency (Hz)")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--secondary", gen.params.n_secondary, "Target-contaminated neighbour cells")->check(CLI::NonNegativeNumber)->capture_default_str();
  g->add_option("--spike-rate", gen.params.spike_rate_hz, "Sea-spike arrival rate (Hz), 0 disables")->check(CLI::NonNegativeNumber)->capture_default_str();
  g->add_option("--polarization", gen.polarization, "HH, VV, HV or VH")->check(CLI::IsMember({"HH", "VV", "HV", "VH"}))->capture_default_str();
  g->add_option("--format", gen.format, "csv or f32")->check(CLI::IsMember({"csv", "f32"}))->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  ExtractOpts ext;
  auto* e = app.add_subcommand("extract", "Compute TIE/THE/FPAR feature vectors");
  e->add_option("--data", ext.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--format", ext.format, "csv or f32")->check(CLI::IsMember({"csv", "f32"}))->capture_default_str();
  e->add_option("--polarization", ext.polarization, "Expected polarization (default: from metadata)");
  e->add_option("-d,--step", ext.step, "Window step in samples")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("-D,--window", ext.window, "Window length in samples")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--k-bins", ext.k_bins, "Histogram bins for TIE")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--tau-grid", ext.tau_grid, "Rescaled-range scales (samples)")->delimiter(',')->capture_default_str();
  e->add_option("--out", ext.out, "Feature CSV")->required();

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Fit the SVM with the false-alarm-rate controller");
  t->add_option("--features", tr.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Model JSON")->required();
  t->add_option("--trace", tr.trace, "Trace JSON (default: <out>.trace.json)");
  t->add_option("--pf", tr.p_f, "Target false-alarm rate")->check(kProbability)->capture_default_str();
  t->add_flag("--no-split", tr.no_split, "Train on every vector instead of the evaluation training split");
  add_svm_options(t, tr.svm);

  DetectOpts det;
  auto* d = app.add_subcommand("detect", "Apply a trained model to feature vectors");
  d->add_option("--model", det.model, "Model JSON")->required()->check(CLI::ExistingFile);
  d->add_option("--features", det.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  d->add_option("--out", det.out, "Decision CSV")->required();

  EvaluateOpts ev;
  auto* v = app.add_subcommand("evaluate", "ROC sweep over a FAR grid, optionally against the Hurst baseline");
  v->add_option("--features", ev.features, "Feature CSV (repeat for several datasets)")->required()->check(CLI::ExistingFile);
  v->add_option("--pf-grid", ev.pf_grid, "Target FAR values")->delimiter(',')->check(kProbability)->capture_default_str();
  v->add_option("--baseline", ev.baseline, "none or hurst")->check(CLI::IsMember({"none", "hurst"}))->capture_default_str();
  v->add_option("--out", ev.out, "Report JSON")->required();
  v->add_option("--roc", ev.roc, "ROC CSV");
  add_svm_options(v, ev.svm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  if (print_config) {
    std::cout << app.config_to_str(true, false);
    return kExitOk;
  }

  try {
    if (g->parsed()) run_generate(gen);
    else if (e->parsed()) run_extract(ext);
    else if (t->parsed()) run_train(tr);
    else if (d->parsed()) run_detect(det);
    else if (v->parsed()) run_evaluate(ev);
  } catch (const ConvergenceFailure& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return is_usage_error(ex.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
