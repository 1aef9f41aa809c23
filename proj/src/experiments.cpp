#include "flmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "flmc/drift.hpp"
#include "flmc/log.hpp"
#include "flmc/oracle.hpp"
#include "flmc/parallel.hpp"
#include "flmc/stable.hpp"
#include "flmc/synthetic_mf.hpp"

namespace flmc {

namespace {

const TestFunction kIdentity{"x", [](std::span<const double> x) { return x[0]; }};

double resolve_truth(double truth) { return std::isnan(truth) ? double_well_reference_mean() : truth; }

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

nlohmann::json schedule_grid_json(const AlphaSweepParams& p) { return {{"a", p.a_grid}, {"b", p.b_grid}}; }

}  // namespace

double double_well_reference_mean() {
  static const double mean = double_well_mean_fixture().value;
  return mean;
}

BiasSweepParams bias_k_defaults() { return BiasSweepParams{}; }

BiasSweepParams bias_h_defaults() {
  BiasSweepParams p;
  p.hs = {0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1};
  p.Ks = {15};
  return p;
}

ExperimentReport bias_sweep(const std::string& name, const BiasSweepParams& params) {
  if (params.alphas.empty() || params.hs.empty() || params.Ks.empty()) {
    throw std::invalid_argument(name + ": alpha, h and K lists must be nonempty");
  }
  if (!params.schedule.is_polynomial()) throw std::invalid_argument(name + ": needs a polynomial schedule");
  const double truth = resolve_truth(params.truth);

  struct CellKey {
    double alpha, h;
    std::size_t K;
  };
  std::vector<CellKey> cells;
  for (double a : params.alphas)
    for (double h : params.hs)
      for (std::size_t K : params.Ks) cells.push_back({a, h, K});
  std::sort(cells.begin(), cells.end(), [](const CellKey& l, const CellKey& r) {
    return std::tie(l.alpha, l.h, l.K) < std::tie(r.alpha, r.h, r.K);
  });

  // Validate every cell before spending time on chains.
  for (const auto& c : cells) DriftSpec{FullCentered{c.h, c.K}, c.alpha}.validate();

  const DoubleWellTarget target;
  std::vector<RepeatSummary> summaries(cells.size());
  parallel_for(
      cells.size(),
      [&](std::size_t i) {
        SamplerConfig cfg;
        cfg.drift = {FullCentered{cells[i].h, cells[i].K}, cells[i].alpha};
        cfg.schedule = params.schedule;
        cfg.iterations = params.iterations;
        cfg.seed = params.run.seed;
        cfg.initial_state = {params.initial_state};
        cfg.record_stride = params.iterations;
        summaries[i] = run_repeats(cfg, target, kIdentity, params.repeats, truth, 1);
      },
      params.run.jobs);

  ExperimentReport report;
  report.name = name;
  report.columns = {"alpha", "h", "K", "a", "b", "N", "repeats", "seed", "x0", "truth", "mean_bias", "se", "failures"};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = summaries[i];
    if (s.failures > 0) {
      log::warn(name + ": alpha=" + format_double(cells[i].alpha) + " h=" + format_double(cells[i].h) +
                " K=" + std::to_string(cells[i].K) + ": " + std::to_string(s.failures) + " of " +
                std::to_string(params.repeats) + " repeats failed");
    }
    report.add_row({cells[i].alpha, cells[i].h, as_int(cells[i].K), params.schedule.a(), params.schedule.b(),
                    as_int(params.iterations), as_int(params.repeats), std::to_string(params.run.seed),
                    params.initial_state, truth, s.mean_abs_bias, s.standard_error, as_int(s.failures)});
  }
  report.metadata = report_metadata(name, params.run.seed, params.run.timestamp);
  report.metadata["target"] = "double-well";
  report.metadata["drift"] = "full";
  report.metadata["schedule"] = to_json(params.schedule);
  report.metadata["bias"] = "mean over successful repeats of |nu_N(x) - truth|";
  report.metadata["truth_source"] = std::isnan(params.truth) ? "quadrature [-10,10] tol 1e-10" : "supplied";
  report.metadata["repeat_seeds"] = "derived from seed per repeat; identical across cells";
  return report;
}

KappaTable kappa_table(const KappaParams& params) {
  if (params.alphas.empty()) throw std::invalid_argument("kappa: alpha list must be nonempty");
  if (params.grid_size < 1) throw std::invalid_argument("kappa: grid_size must be positive");
  std::vector<double> grid(params.grid_size);
  for (std::size_t i = 0; i < params.grid_size; ++i) {
    grid[i] = params.grid_size == 1 ? params.lo
                                    : params.lo + (params.hi - params.lo) * static_cast<double>(i) /
                                                      static_cast<double>(params.grid_size - 1);
  }
  std::vector<double> alphas = params.alphas;
  std::sort(alphas.begin(), alphas.end());

  const DoubleWellTarget target;
  KappaTable table;
  table.summary.name = "kappa";
  table.summary.columns = {"alpha", "h", "K_star", "grid_size", "kappa_hat", "skipped_points"};
  table.points.name = "kappa_points";
  table.points.columns = {"alpha", "h", "K_star", "x", "kappa"};
  for (double alpha : alphas) {
    const KappaResult res = kappa(target, alpha, params.h, params.K_star, grid, params.run.jobs);
    table.summary.add_row({alpha, params.h, as_int(params.K_star), as_int(params.grid_size), res.kappa_hat,
                           as_int(res.skipped)});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& k = res.per_point[i];
      table.points.add_row(
          {alpha, params.h, as_int(params.K_star), grid[i], k ? Cell(as_int(*k)) : Cell(std::string{})});
    }
  }
  for (auto* r : {&table.summary, &table.points}) {
    r->metadata = report_metadata(r->name, params.run.seed, params.run.timestamp);
    r->metadata["target"] = "double-well";
    r->metadata["grid"] = {{"lo", params.lo}, {"hi", params.hi}, {"points", params.grid_size}};
    r->metadata["tie_rule"] = "smallest K";
  }
  return table;
}

AlphaSweep alpha_sweep(const AlphaSweepParams& params) {
  if (params.alphas.empty() || params.a_grid.empty() || params.b_grid.empty()) {
    throw std::invalid_argument("alpha-sweep: alpha and schedule grids must be nonempty");
  }
  const double truth = resolve_truth(params.truth);
  std::vector<double> alphas = params.alphas;
  std::sort(alphas.begin(), alphas.end());
  std::vector<double> as = params.a_grid, bs = params.b_grid;
  std::sort(as.begin(), as.end());
  std::sort(bs.begin(), bs.end());

  struct CellKey {
    double alpha, a, b;
  };
  std::vector<CellKey> cells;
  for (double alpha : alphas) {
    DriftSpec{Simplified{}, alpha}.validate();
    for (double a : as)
      for (double b : bs) {
        StepSchedule::polynomial(a, b);
        cells.push_back({alpha, a, b});
      }
  }

  const DoubleWellTarget target;
  std::vector<RepeatSummary> summaries(cells.size());
  parallel_for(
      cells.size(),
      [&](std::size_t i) {
        SamplerConfig cfg;
        cfg.drift = {Simplified{}, cells[i].alpha};
        cfg.schedule = StepSchedule::polynomial(cells[i].a, cells[i].b);
        cfg.iterations = params.iterations;
        cfg.seed = params.run.seed;
        cfg.initial_state = {params.initial_state};
        cfg.record_stride = params.iterations;
        summaries[i] = run_repeats(cfg, target, kIdentity, params.repeats, truth, 1);
      },
      params.run.jobs);

  AlphaSweep out;
  out.grid.name = "alpha_sweep_grid";
  out.grid.columns = {"alpha", "a", "b", "mean_bias", "se", "failures", "N", "repeats", "seed", "x0", "truth"};
  out.best.name = "alpha_sweep";
  out.best.columns = {"alpha", "best_a", "best_b", "mean_bias", "se", "failures", "N", "repeats", "seed", "x0",
                      "truth"};
  const std::string seed = std::to_string(params.run.seed);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = summaries[i];
    out.grid.add_row({cells[i].alpha, cells[i].a, cells[i].b, s.mean_abs_bias, s.standard_error, as_int(s.failures),
                      as_int(params.iterations), as_int(params.repeats), seed, params.initial_state, truth});
  }
  const std::size_t per_alpha = as.size() * bs.size();
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    std::optional<std::size_t> best;
    for (std::size_t j = ai * per_alpha; j < (ai + 1) * per_alpha; ++j) {
      const auto& s = summaries[j];
      if (std::isnan(s.mean_abs_bias)) continue;
      if (!best || s.mean_abs_bias < summaries[*best].mean_abs_bias) best = j;
    }
    if (!best) {
      log::warn("alpha-sweep: every repeat failed for alpha=" + format_double(alphas[ai]));
      out.best.add_row({alphas[ai], std::nan(""), std::nan(""), std::nan(""), std::nan(""),
                        as_int(params.repeats * per_alpha), as_int(params.iterations), as_int(params.repeats), seed,
                        params.initial_state, truth});
      continue;
    }
    const auto& s = summaries[*best];
    out.best.add_row({alphas[ai], cells[*best].a, cells[*best].b, s.mean_abs_bias, s.standard_error,
                      as_int(s.failures), as_int(params.iterations), as_int(params.repeats), seed,
                      params.initial_state, truth});
  }
  for (auto* r : {&out.best, &out.grid}) {
    r->metadata = report_metadata(r->name, params.run.seed, params.run.timestamp);
    r->metadata["target"] = "double-well";
    r->metadata["drift"] = "simplified";
    r->metadata["schedule_grid"] = schedule_grid_json(params);
    r->metadata["selection"] = "lowest mean bias over successful repeats; failed repeats counted per cell";
    r->metadata["bias"] = "mean over successful repeats of |nu_N(x) - truth|";
  }
  return out;
}

ExperimentReport mf_rmse(const MfParams& params) {
  const SyntheticMF model(params.rows, params.cols, params.rank, params.data_seed);
  return mf_rmse(params, model);
}

ExperimentReport mf_rmse(const MfParams& params, const SyntheticMF& model) {
  if (params.alphas.empty()) throw std::invalid_argument("mf: alpha list must be nonempty");
  if (params.chains < 1) throw std::invalid_argument("mf: chains must be at least 1");
  if (params.stride < 1) throw std::invalid_argument("mf: stride must be at least 1");
  if (!(params.batch_fraction > 0.0 && params.batch_fraction <= 1.0)) {
    throw std::invalid_argument("mf: batch fraction must lie in (0, 1]");
  }
  const std::size_t n_y = model.data_size();
  const std::size_t n_omega =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.batch_fraction * static_cast<double>(n_y))));
  std::vector<double> alphas = params.alphas;
  std::sort(alphas.begin(), alphas.end());
  for (double a : alphas) DriftSpec{Simplified{}, a}.validate();

  struct Curve {
    std::vector<std::size_t> iterations;
    std::vector<double> rmse;
    std::optional<std::size_t> failed_at;
  };
  const std::size_t cells = alphas.size() * params.chains;
  std::vector<Curve> curves(cells);
  const auto& test = model.test();
  parallel_for(
      cells,
      [&](std::size_t i) {
        const double alpha = alphas[i / params.chains];
        const std::size_t chain = i % params.chains;
        SamplerConfig cfg;
        cfg.drift = {Simplified{}, alpha};
        cfg.schedule = params.schedule;
        cfg.iterations = params.iterations;
        cfg.seed = derive_seed(params.run.seed, chain);
        cfg.minibatch = MinibatchConfig{n_omega, MinibatchMode::with_replacement};
        cfg.record_stride = params.iterations;
        RandomStream init_rng(derive_seed(cfg.seed, 2));
        const StableNoise gauss(2.0, params.init_scale / std::sqrt(2.0));
        cfg.initial_state = sample_sas_vector(gauss, model.dim(), init_rng);

        std::vector<double> weighted(test.size(), 0.0);
        std::vector<double> mean(test.size());
        double total = 0.0;
        Curve& curve = curves[i];
        try {
          run_chain(cfg, model, {}, [&](std::size_t n, double eta, std::span<const double> x) {
          total += eta;
          for (std::size_t t = 0; t < test.size(); ++t) weighted[t] += eta * model.predict(x, test[t].row, test[t].col);
          if (n % params.stride == 0 || n == params.iterations) {
            for (std::size_t t = 0; t < test.size(); ++t) mean[t] = weighted[t] / total;
            curve.iterations.push_back(n);
            curve.rmse.push_back(model.test_rmse(mean));
          }
          });
        } catch (const ChainError& err) {
          curve.failed_at = err.iteration();
          log::warn("mf: alpha=" + format_double(alpha) + " chain " + std::to_string(chain) + ": " + err.what());
        }
      },
      params.run.jobs);

  ExperimentReport report;
  report.name = "mf";
  report.columns = {"alpha", "chain", "seed", "iteration", "rmse", "a", "b", "N_omega", "N_Y"};
  for (std::size_t i = 0; i < cells; ++i) {
    const double alpha = alphas[i / params.chains];
    const std::size_t chain = i % params.chains;
    const std::string seed = std::to_string(derive_seed(params.run.seed, chain));
    for (std::size_t r = 0; r < curves[i].iterations.size(); ++r) {
      report.add_row({alpha, as_int(chain), seed, as_int(curves[i].iterations[r]), curves[i].rmse[r],
                      params.schedule.a(), params.schedule.b(), as_int(n_omega), as_int(n_y)});
    }
    if (curves[i].failed_at) {
      report.add_row({alpha, as_int(chain), seed, as_int(*curves[i].failed_at), std::nan(""), params.schedule.a(),
                      params.schedule.b(), as_int(n_omega), as_int(n_y)});
    }
  }
  report.metadata = report_metadata("mf", params.run.seed, params.run.timestamp);
  report.metadata["model"] = {{"rows", model.rows()},
                              {"cols", model.cols()},
                              {"rank", model.rank()},
                              {"data_seed", model.generating_parameters().empty() ? nlohmann::json(nullptr)
                                                                                  : nlohmann::json(params.data_seed)},
                              {"train_entries", n_y},
                              {"test_entries", test.size()}};
  report.metadata["schedule"] = to_json(params.schedule);
  report.metadata["iterations"] = params.iterations;
  report.metadata["stride"] = params.stride;
  report.metadata["init_scale"] = params.init_scale;
  report.metadata["predictor"] = "step-weighted running mean of test predictions";
  report.metadata["failed_chains"] = "final row with rmse nan at the failing iteration";
  return report;
}

std::map<std::size_t, double> final_rmse(const ExperimentReport& mf_report, double alpha) {
  std::map<std::size_t, double> last;
  for (std::size_t r = 0; r < mf_report.rows.size(); ++r) {
    if (mf_report.number(r, "alpha") != alpha) continue;
    last[static_cast<std::size_t>(mf_report.number(r, "chain"))] = mf_report.number(r, "rmse");
  }
  return last;
}

std::map<std::size_t, std::optional<std::size_t>> iterations_to_threshold(
    const ExperimentReport& mf_report, double alpha, const std::map<std::size_t, double>& thresholds) {
  std::map<std::size_t, std::optional<std::size_t>> first;
  for (std::size_t r = 0; r < mf_report.rows.size(); ++r) {
    if (mf_report.number(r, "alpha") != alpha) continue;
    const auto chain = static_cast<std::size_t>(mf_report.number(r, "chain"));
    auto& hit = first[chain];
    const auto thr = thresholds.find(chain);
    if (!hit && thr != thresholds.end() && mf_report.number(r, "rmse") <= thr->second) {
      hit = static_cast<std::size_t>(mf_report.number(r, "iteration"));
    }
  }
  return first;
}

double median_iterations(const std::map<std::size_t, std::optional<std::size_t>>& hits) {
  std::vector<double> v;
  for (const auto& [chain, hit] : hits) {
    v.push_back(hit ? static_cast<double>(*hit) : std::numeric_limits<double>::infinity());
  }
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace flmc
