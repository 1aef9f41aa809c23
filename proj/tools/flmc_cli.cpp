#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "flmc/drift.hpp"
#include "flmc/experiments.hpp"
#include "flmc/log.hpp"
#include "flmc/oracle.hpp"
#include "flmc/report.hpp"
#include "flmc/riesz.hpp"
#include "flmc/sampler.hpp"
#include "flmc/synthetic_mf.hpp"

namespace {

using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Bad flag values detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double checked_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw UsageError("--alpha: alpha must lie in (1, 2], got " + flmc::format_double(alpha));
  }
  return alpha;
}

std::vector<double> checked_alphas(const std::vector<double>& alphas) {
  if (alphas.empty()) throw UsageError("--alpha: at least one value required");
  for (double a : alphas) checked_alpha(a);
  return alphas;
}

flmc::StepSchedule parse_schedule(const std::string& text) {
  try {
    return flmc::StepSchedule::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--schedule: ") + e.what());
  }
}

/// "simplified" or "full:<h>,<K>".
flmc::DriftSpec parse_drift(const std::string& text, double alpha) {
  flmc::DriftSpec spec{flmc::Simplified{}, alpha};
  if (text == "simplified") return spec;
  if (text.rfind("full:", 0) == 0) {
    const std::string body = text.substr(5);
    const auto comma = body.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t used_h = 0, used_k = 0;
        const double h = std::stod(body.substr(0, comma), &used_h);
        const std::string k_text = body.substr(comma + 1);
        const long long K = std::stoll(k_text, &used_k);
        if (used_h == comma && used_k == k_text.size() && K > 0) {
          spec.variant = flmc::FullCentered{h, static_cast<std::size_t>(K)};
          spec.validate();
          return spec;
        }
      } catch (const std::exception&) {
      }
    }
  }
  throw UsageError("--drift: expected 'simplified' or 'full:<h>,<K>' with h > 0 and K >= 1, got '" + text + "'");
}

std::string output_path(const std::string& out, const std::string& outdir, const std::string& fallback) {
  if (!out.empty()) return out;
  std::filesystem::path dir = outdir.empty() ? "." : outdir;
  std::filesystem::create_directories(dir);
  return (dir / fallback).string();
}

std::optional<std::string> optional_string(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

/// Ground truth for double-well bias: fixture file when given, else quadrature.
double reference_mean(const std::string& fixtures_path) {
  if (fixtures_path.empty()) return flmc::double_well_reference_mean();
  const auto fixtures = flmc::read_fixtures(fixtures_path);
  return flmc::find_fixture(fixtures, "double_well_mean").value;
}

void configure_logging(const std::string& verbosity) {
  if (verbosity.empty()) return;
  std::string v;
  for (char c : verbosity) v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "quiet" || v == "0") {
    flmc::log::set_level(flmc::log::Level::quiet);
  } else if (v == "warn" || v == "1") {
    flmc::log::set_level(flmc::log::Level::warn);
  } else if (v == "info" || v == "2") {
    flmc::log::set_level(flmc::log::Level::info);
  } else if (v == "debug" || v == "3") {
    flmc::log::set_level(flmc::log::Level::debug);
  } else {
    throw UsageError("FLMC_VERBOSITY: expected quiet, warn, info or debug, got '" + verbosity + "'");
  }
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

struct Common {
  std::uint64_t seed = 1;
  std::string out;
  std::string outdir;
  std::string timestamp;
  std::string fixtures;
  unsigned jobs = 1;
};

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& description) {
  auto* cmd = app.add_subcommand(name, description);
  // Frees -h for the mesh-size flag.
  cmd->set_help_flag("--help", "Print this help message and exit");
  return cmd;
}

void add_common(CLI::App* cmd, Common& c, bool with_fixtures) {
  cmd->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  cmd->add_option("--out", c.out, "Output file");
  cmd->add_option("--outdir", c.outdir, "Output directory (default $FLMC_OUTDIR or .)");
  cmd->add_option("--timestamp", c.timestamp, "Timestamp recorded in metadata (default null)");
  cmd->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
  if (with_fixtures) cmd->add_option("--fixtures", c.fixtures, "Oracle fixtures file providing double_well_mean");
}

flmc::RunOptions run_options(const Common& c) { return {c.seed, c.jobs, optional_string(c.timestamp)}; }

void emit(const flmc::ExperimentReport& report, const std::string& path) {
  report.write(path);
  flmc::log::info("wrote " + path);
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  Common common;
  std::string target = "double-well";
  double alpha = 1.7;
  std::string drift = "simplified";
  std::string schedule = "poly:1e-7,0.6";
  std::size_t n = 1000;
  std::size_t stride = 1;
  std::size_t repeats = 0;
  std::vector<double> x0;
  std::size_t minibatch = 0;
  std::size_t mf_rows = 50, mf_cols = 40, mf_rank = 5;
  std::uint64_t data_seed = 7;
};

std::shared_ptr<const flmc::Target> make_target(const SampleArgs& a) {
  if (a.target == "double-well") return std::make_shared<flmc::DoubleWellTarget>();
  if (a.target == "gaussian") return flmc::gaussian_target({0.0}, 1.0);
  if (a.target == "mf") return std::make_shared<flmc::SyntheticMF>(a.mf_rows, a.mf_cols, a.mf_rank, a.data_seed);
  throw UsageError("--target: expected double-well, gaussian or mf, got '" + a.target + "'");
}

int cmd_sample(const SampleArgs& a) {
  flmc::SamplerConfig cfg;
  cfg.drift = parse_drift(a.drift, checked_alpha(a.alpha));
  cfg.schedule = parse_schedule(a.schedule);
  cfg.iterations = a.n;
  cfg.seed = a.common.seed;
  cfg.initial_state = a.x0;
  cfg.record_stride = a.stride;
  std::shared_ptr<const flmc::Target> target;
  try {
    target = make_target(a);
    if (a.minibatch > 0) cfg.minibatch = flmc::MinibatchConfig{a.minibatch, flmc::MinibatchMode::with_replacement};
    flmc::ChainStepper check(cfg, *target);
    cfg.initial_state = flmc::initial_state(cfg, *target);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.n < 1) throw UsageError("--n: at least one iteration required");
  if (a.stride < 1) throw UsageError("--stride: must be at least 1");

  const std::size_t dim = target->dim();
  std::vector<flmc::TestFunction> tests;
  if (dim <= 16) {
    for (std::size_t d = 0; d < dim; ++d) {
      tests.push_back({"x_" + std::to_string(d), [d](std::span<const double> x) { return x[d]; }});
    }
  }
  const std::string path = output_path(a.common.out, a.common.outdir, "trace.csv");
  const flmc::Trace trace = flmc::run_chain(cfg, *target, tests);
  trace.write_csv(path);

  json summary = flmc::report_metadata("sample", a.common.seed, optional_string(a.common.timestamp));
  summary["target"] = a.target;
  summary["config"] = flmc::to_json(cfg);
  summary["total_step"] = trace.total_step;
  json estimates = json::object();
  for (std::size_t i = 0; i < trace.names.size(); ++i) estimates[trace.names[i]] = trace.estimate(i);
  summary["estimates"] = estimates;
  summary["final_state"] = trace.final_state;
  summary["recorded_rows"] = trace.recorded_iterations.size();
  if (a.target == "double-well") {
    const double truth = reference_mean(a.common.fixtures);
    summary["truth"] = truth;
    summary["bias"] = std::abs(trace.estimate(0) - truth);
    if (a.repeats > 0) {
      const flmc::TestFunction g{"x", [](std::span<const double> x) { return x[0]; }};
      summary["repeat_summary"] = flmc::to_json(flmc::run_repeats(cfg, *target, g, a.repeats, truth, a.common.jobs));
    }
  } else if (a.repeats > 0) {
    throw UsageError("--repeats: only supported for the double-well target");
  }
  flmc::write_text_file(path + ".summary.json", summary.dump(2) + "\n");
  flmc::log::info("wrote " + path);
  return 0;
}

// ---------------------------------------------------------------------------

struct BiasArgs {
  Common common;
  std::vector<double> alphas;
  std::vector<double> hs;
  std::vector<std::size_t> Ks;
  std::string schedule = "poly:1e-7,0.6";
  std::size_t n = 5000;
  std::size_t repeats = 5;
  double x0 = 0.0;
};

int cmd_bias(const BiasArgs& a, bool sweep_k) {
  flmc::BiasSweepParams p = sweep_k ? flmc::bias_k_defaults() : flmc::bias_h_defaults();
  if (!a.alphas.empty()) p.alphas = checked_alphas(a.alphas);
  if (!a.hs.empty()) p.hs = a.hs;
  if (!a.Ks.empty()) p.Ks = a.Ks;
  p.schedule = parse_schedule(a.schedule);
  if (!p.schedule.is_polynomial()) throw UsageError("--schedule: bias sweeps need poly:<a>,<b>");
  p.iterations = a.n;
  p.repeats = a.repeats;
  p.initial_state = a.x0;
  p.run = run_options(a.common);
  if (a.n < 1 || a.repeats < 1) throw UsageError("--n and --repeats must be at least 1");
  for (double h : p.hs)
    for (std::size_t K : p.Ks) {
      if (!(h > 0.0) || K < 1) throw UsageError("--h must be positive and --K at least 1");
    }
  p.truth = reference_mean(a.common.fixtures);
  const std::string name = sweep_k ? "bias_k" : "bias_h";
  emit(flmc::bias_sweep(name, p), output_path(a.common.out, a.common.outdir, name + ".csv"));
  return 0;
}

struct KappaArgs {
  Common common;
  std::vector<double> alphas;
  double h = 0.06;
  std::size_t K_star = 170;
  std::size_t grid_size = 200;
  double lo = -5.0, hi = 5.0;
  std::string points_out;
};

int cmd_kappa(const KappaArgs& a) {
  flmc::KappaParams p;
  if (!a.alphas.empty()) p.alphas = checked_alphas(a.alphas);
  for (double alpha : p.alphas) {
    if (alpha == 2.0) throw UsageError("--alpha: kappa needs alpha in (1, 2)");
  }
  if (!(a.h > 0.0) || a.K_star < 1 || a.grid_size < 1 || !(a.lo <= a.hi)) {
    throw UsageError("kappa: need h > 0, K-star >= 1, grid-size >= 1 and lo <= hi");
  }
  p.h = a.h;
  p.K_star = a.K_star;
  p.grid_size = a.grid_size;
  p.lo = a.lo;
  p.hi = a.hi;
  p.run = run_options(a.common);
  const auto table = flmc::kappa_table(p);
  emit(table.summary, output_path(a.common.out, a.common.outdir, "kappa.csv"));
  if (!a.points_out.empty()) emit(table.points, a.points_out);
  return 0;
}

struct AlphaSweepArgs {
  Common common;
  std::vector<double> alphas;
  std::vector<double> a_grid;
  std::vector<double> b_grid;
  std::size_t n = 50000;
  std::size_t repeats = 10;
  double x0 = 0.0;
  std::string grid_out;
};

int cmd_alpha_sweep(const AlphaSweepArgs& a) {
  flmc::AlphaSweepParams p;
  if (!a.alphas.empty()) p.alphas = checked_alphas(a.alphas);
  if (!a.a_grid.empty()) p.a_grid = a.a_grid;
  if (!a.b_grid.empty()) p.b_grid = a.b_grid;
  for (double sa : p.a_grid)
    for (double sb : p.b_grid) parse_schedule("poly:" + flmc::format_double(sa) + "," + flmc::format_double(sb));
  if (a.n < 1 || a.repeats < 1) throw UsageError("--n and --repeats must be at least 1");
  p.iterations = a.n;
  p.repeats = a.repeats;
  p.initial_state = a.x0;
  p.run = run_options(a.common);
  p.truth = reference_mean(a.common.fixtures);
  const auto sweep = flmc::alpha_sweep(p);
  emit(sweep.best, output_path(a.common.out, a.common.outdir, "alpha_sweep.csv"));
  if (!a.grid_out.empty()) emit(sweep.grid, a.grid_out);
  return 0;
}

struct MfArgs {
  Common common;
  std::vector<double> alphas;
  std::size_t rows = 50, cols = 40, rank = 5;
  std::uint64_t data_seed = 7;
  std::string schedule = "poly:1e-5,0.51";
  std::size_t n = 5000;
  std::size_t stride = 100;
  std::size_t chains = 1;
  double batch_fraction = 0.1;
  std::string export_prefix;
  std::string import_prefix;
};

int cmd_mf(const MfArgs& a) {
  flmc::MfParams p;
  if (!a.alphas.empty()) p.alphas = checked_alphas(a.alphas);
  p.rows = a.rows;
  p.cols = a.cols;
  p.rank = a.rank;
  p.data_seed = a.data_seed;
  p.schedule = parse_schedule(a.schedule);
  p.iterations = a.n;
  p.stride = a.stride;
  p.chains = a.chains;
  p.batch_fraction = a.batch_fraction;
  p.run = run_options(a.common);
  if (a.n < 1 || a.stride < 1 || a.chains < 1) throw UsageError("--n, --stride and --chains must be at least 1");
  if (!(a.batch_fraction > 0.0 && a.batch_fraction <= 1.0)) throw UsageError("--batch-fraction must lie in (0, 1]");

  std::optional<flmc::SyntheticMF> model;
  try {
    if (!a.import_prefix.empty()) {
      model.emplace(a.rows, a.cols, a.rank, flmc::read_entries_csv(a.import_prefix + "_train.csv"),
                    flmc::read_entries_csv(a.import_prefix + "_test.csv"));
    } else {
      model.emplace(a.rows, a.cols, a.rank, a.data_seed);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!a.export_prefix.empty()) {
    flmc::write_entries_csv(a.export_prefix + "_train.csv", model->train());
    flmc::write_entries_csv(a.export_prefix + "_test.csv", model->test());
  }
  emit(flmc::mf_rmse(p, *model), output_path(a.common.out, a.common.outdir, "mf.csv"));
  return 0;
}

int cmd_fixtures(const Common& c) {
  const double gamma = -0.5;
  std::vector<flmc::Fixture> fixtures;
  fixtures.push_back(flmc::double_well_mean_fixture());
  fixtures.push_back({"c_alpha_1.5", {{"alpha", 1.5}}, flmc::c_alpha(1.5), 1e-14});
  fixtures.push_back({"riesz_gaussian_origin",
                      {{"gamma", gamma}, {"f", "exp(-x^2/2)"}, {"x", 0.0}},
                      std::pow(2.0, (gamma + 1.0) / 2.0) * std::tgamma((gamma + 1.0) / 2.0) /
                          std::sqrt(2.0 * std::numbers::pi),
                      1e-12});
  const std::string path = output_path(c.out, c.outdir, "fixtures.json");
  flmc::write_fixtures(path, fixtures);
  flmc::log::info("wrote " + path);
  return 0;
}

void print_chain_failure(const flmc::ChainError& e) {
  json diag;
  diag["error"] = e.kind() == flmc::ChainError::Kind::drift ? "drift_failure" : "divergence";
  diag["seed"] = e.seed();
  diag["iteration"] = e.iteration();
  diag["state"] = e.state().size() <= 16 ? json(e.state()) : json(nullptr);
  diag["message"] = e.what();
  std::cerr << diag.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed Langevin sampler with bias and accuracy experiments", "flmc"};
  app.require_subcommand(1);

  const std::string env_outdir = env_or_empty("FLMC_OUTDIR");

  SampleArgs sample;
  auto* sample_cmd = subcommand(app, "sample", "Run one chain and write its trace");
  sample_cmd->add_option("--target", sample.target, "double-well | gaussian | mf")->capture_default_str();
  sample_cmd->add_option("--alpha", sample.alpha, "Stability index in (1, 2]")->capture_default_str();
  sample_cmd->add_option("--drift", sample.drift, "simplified | full:<h>,<K>")->capture_default_str();
  sample_cmd->add_option("--schedule", sample.schedule, "poly:<a>,<b> | const:<eta>")->capture_default_str();
  sample_cmd->add_option("--n", sample.n, "Iterations")->capture_default_str();
  sample_cmd->add_option("--stride", sample.stride, "Record every stride-th state")->capture_default_str();
  sample_cmd->add_option("--repeats", sample.repeats, "Extra independent repeats for the summary");
  sample_cmd->add_option("--x0", sample.x0, "Initial state (default origin)")->delimiter(',');
  sample_cmd->add_option("--minibatch", sample.minibatch, "Minibatch size (mf target; simplified drift)");
  sample_cmd->add_option("--mf-rows", sample.mf_rows)->capture_default_str();
  sample_cmd->add_option("--mf-cols", sample.mf_cols)->capture_default_str();
  sample_cmd->add_option("--mf-rank", sample.mf_rank)->capture_default_str();
  sample_cmd->add_option("--data-seed", sample.data_seed)->capture_default_str();
  add_common(sample_cmd, sample.common, true);

  BiasArgs bias_k, bias_h;
  auto* bias_k_cmd = subcommand(app, "bias-k", "Full-drift bias against the truncation radius");
  auto* bias_h_cmd = subcommand(app, "bias-h", "Full-drift bias against the mesh size");
  for (auto [cmd, args] : {std::pair{bias_k_cmd, &bias_k}, std::pair{bias_h_cmd, &bias_h}}) {
    cmd->add_option("--alpha", args->alphas, "Comma-separated alphas")->delimiter(',');
    cmd->add_option("--h", args->hs, "Comma-separated mesh sizes")->delimiter(',');
    cmd->add_option("--K", args->Ks, "Comma-separated truncation radii")->delimiter(',');
    cmd->add_option("--schedule", args->schedule)->capture_default_str();
    cmd->add_option("--n", args->n)->capture_default_str();
    cmd->add_option("--repeats", args->repeats)->capture_default_str();
    cmd->add_option("--x0", args->x0)->capture_default_str();
    add_common(cmd, args->common, true);
  }

  KappaArgs kappa;
  auto* kappa_cmd = subcommand(app, "kappa", "Equivalent-radius accuracy table of the simplified drift");
  kappa_cmd->add_option("--alpha", kappa.alphas, "Comma-separated alphas in (1, 2)")->delimiter(',');
  kappa_cmd->add_option("--h", kappa.h)->capture_default_str();
  kappa_cmd->add_option("--K-star", kappa.K_star)->capture_default_str();
  kappa_cmd->add_option("--grid-size", kappa.grid_size)->capture_default_str();
  kappa_cmd->add_option("--lo", kappa.lo)->capture_default_str();
  kappa_cmd->add_option("--hi", kappa.hi)->capture_default_str();
  kappa_cmd->add_option("--points-out", kappa.points_out, "Per-point CSV");
  add_common(kappa_cmd, kappa.common, false);

  AlphaSweepArgs sweep;
  auto* sweep_cmd = subcommand(app, "alpha-sweep", "Best-schedule FLA bias per alpha");
  sweep_cmd->add_option("--alpha", sweep.alphas, "Comma-separated alphas")->delimiter(',');
  sweep_cmd->add_option("--a-grid", sweep.a_grid, "Schedule a values")->delimiter(',');
  sweep_cmd->add_option("--b-grid", sweep.b_grid, "Schedule b values")->delimiter(',');
  sweep_cmd->add_option("--n", sweep.n)->capture_default_str();
  sweep_cmd->add_option("--repeats", sweep.repeats)->capture_default_str();
  sweep_cmd->add_option("--x0", sweep.x0)->capture_default_str();
  sweep_cmd->add_option("--grid-out", sweep.grid_out, "Per-cell CSV");
  add_common(sweep_cmd, sweep.common, true);

  MfArgs mf;
  auto* mf_cmd = subcommand(app, "mf", "SG-FLA test RMSE on a synthetic matrix factorization");
  mf_cmd->add_option("--alpha", mf.alphas, "Comma-separated alphas")->delimiter(',');
  mf_cmd->add_option("--rows", mf.rows)->capture_default_str();
  mf_cmd->add_option("--cols", mf.cols)->capture_default_str();
  mf_cmd->add_option("--rank", mf.rank)->capture_default_str();
  mf_cmd->add_option("--data-seed", mf.data_seed)->capture_default_str();
  mf_cmd->add_option("--schedule", mf.schedule)->capture_default_str();
  mf_cmd->add_option("--n", mf.n)->capture_default_str();
  mf_cmd->add_option("--stride", mf.stride)->capture_default_str();
  mf_cmd->add_option("--chains", mf.chains)->capture_default_str();
  mf_cmd->add_option("--batch-fraction", mf.batch_fraction)->capture_default_str();
  mf_cmd->add_option("--export-entries", mf.export_prefix, "Write <prefix>_train.csv and <prefix>_test.csv");
  mf_cmd->add_option("--import-entries", mf.import_prefix, "Read observations from <prefix>_{train,test}.csv");
  add_common(mf_cmd, mf.common, false);

  Common fixtures;
  auto* fixtures_cmd = subcommand(app, "fixtures", "Write oracle fixture values");
  add_common(fixtures_cmd, fixtures, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    configure_logging(env_or_empty("FLMC_VERBOSITY"));
    for (Common* c : {&sample.common, &bias_k.common, &bias_h.common, &kappa.common, &sweep.common, &mf.common,
                      &fixtures}) {
      if (c->outdir.empty()) c->outdir = env_outdir;
    }
    if (sample_cmd->parsed()) return cmd_sample(sample);
    if (bias_k_cmd->parsed()) return cmd_bias(bias_k, true);
    if (bias_h_cmd->parsed()) return cmd_bias(bias_h, false);
    if (kappa_cmd->parsed()) return cmd_kappa(kappa);
    if (sweep_cmd->parsed()) return cmd_alpha_sweep(sweep);
    if (mf_cmd->parsed()) return cmd_mf(mf);
    if (fixtures_cmd->parsed()) return cmd_fixtures(fixtures);
  } catch (const UsageError& e) {
    std::cerr << "flmc: " << e.what() << '\n';
    return kExitUsage;
  } catch (const flmc::ChainError& e) {
    print_chain_failure(e);
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
