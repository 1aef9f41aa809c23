#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "flmc/experiments.hpp"
#include "flmc/oracle.hpp"
#include "flmc/targets.hpp"

using namespace flmc;

namespace {

const TestFunction kIdentity{"x", [](std::span<const double> x) { return x[0]; }};

BiasSweepParams small_sweep() {
  BiasSweepParams p;
  p.alphas = {1.7};
  p.hs = {0.06};
  p.Ks = {5};
  p.schedule = StepSchedule::polynomial(1e-5, 0.6);
  p.iterations = 400;
  p.repeats = 3;
  p.run.seed = 11;
  return p;
}

}  // namespace

TEST_CASE("reference mean") {
  CHECK(std::abs(double_well_reference_mean() - -0.30139782626548767) < 1e-9);
}

TEST_CASE("default sweeps") {
  const auto k = bias_k_defaults();
  CHECK(k.hs == std::vector<double>{0.06});
  CHECK(k.schedule.a() == 1e-7);
  CHECK(k.schedule.b() == 0.6);
  CHECK(k.iterations == 5000);
  CHECK(k.repeats == 5);
  const auto h = bias_h_defaults();
  CHECK(h.Ks == std::vector<std::size_t>{15});
  CHECK(h.hs.size() > 3);
}

TEST_CASE("single-cell bias sweep equals run_repeats") {
  const auto p = small_sweep();
  const auto report = bias_sweep("bias_k", p);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.columns == std::vector<std::string>{"alpha", "h", "K", "a", "b", "N", "repeats", "seed", "x0", "truth",
                                                   "mean_bias", "se", "failures"});
  SamplerConfig cfg;
  cfg.drift = {FullCentered{0.06, 5}, 1.7};
  cfg.schedule = p.schedule;
  cfg.iterations = p.iterations;
  cfg.seed = p.run.seed;
  cfg.initial_state = {0.0};
  const auto s = run_repeats(cfg, DoubleWellTarget{}, kIdentity, 3, double_well_reference_mean());
  CHECK(report.number(0, "mean_bias") == s.mean_abs_bias);
  CHECK(report.number(0, "se") == s.standard_error);
  CHECK(report.number(0, "failures") == 0.0);
  CHECK(std::get<std::string>(report.rows[0][report.column("seed")]) == "11");
  CHECK(report.metadata.at("bias").get<std::string>().find("mean") != std::string::npos);
}

TEST_CASE("bias sweep rows are sorted and independent of thread count") {
  auto p = small_sweep();
  p.alphas = {1.8, 1.5};
  p.Ks = {10, 2};
  const auto serial = bias_sweep("bias_k", p);
  p.run.jobs = 3;
  const auto pooled = bias_sweep("bias_k", p);
  CHECK(serial.csv() == pooled.csv());
  CHECK(serial.metadata.dump() == pooled.metadata.dump());
  REQUIRE(serial.rows.size() == 4);
  CHECK(serial.number(0, "alpha") == 1.5);
  CHECK(serial.number(0, "K") == 2.0);
  CHECK(serial.number(1, "K") == 10.0);
  CHECK(serial.number(3, "alpha") == 1.8);
}

TEST_CASE("single-h sweep gives one row") {
  auto p = small_sweep();
  p.hs = {0.04};
  p.Ks = {15};
  const auto r = bias_sweep("bias_h", p);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.number(0, "h") == 0.04);
}

TEST_CASE("bias sweep validation") {
  auto p = small_sweep();
  p.Ks = {};
  CHECK_THROWS_AS(bias_sweep("bias_k", p), std::invalid_argument);
  p = small_sweep();
  p.alphas = {2.5};
  CHECK_THROWS_AS(bias_sweep("bias_k", p), std::invalid_argument);
  p = small_sweep();
  p.schedule = StepSchedule::constant(0.1);
  CHECK_THROWS_AS(bias_sweep("bias_k", p), std::invalid_argument);
}

TEST_CASE("kappa table layout") {
  KappaParams p;
  p.alphas = {1.8, 1.6};
  p.grid_size = 11;
  const auto t = kappa_table(p);
  REQUIRE(t.summary.rows.size() == 2);
  CHECK(t.summary.number(0, "alpha") == 1.6);
  CHECK(t.points.rows.size() == 22);
  CHECK(t.points.number(0, "x") == -5.0);
  CHECK(t.points.number(10, "x") == 5.0);
  CHECK(t.summary.number(0, "skipped_points") == 0.0);
  CHECK(t.summary.number(0, "kappa_hat") > t.summary.number(1, "kappa_hat"));
  CHECK(kappa_table(p).summary.csv() == t.summary.csv());
  p.run.jobs = 4;
  CHECK(kappa_table(p).points.csv() == t.points.csv());
}

TEST_CASE("single-alpha single-cell sweep equals run_repeats") {
  AlphaSweepParams p;
  p.alphas = {1.7};
  p.a_grid = {1e-2};
  p.b_grid = {0.6};
  p.iterations = 1000;
  p.repeats = 3;
  p.run.seed = 5;
  const auto sweep = alpha_sweep(p);
  REQUIRE(sweep.best.rows.size() == 1);
  REQUIRE(sweep.grid.rows.size() == 1);
  SamplerConfig cfg;
  cfg.drift = {Simplified{}, 1.7};
  cfg.schedule = StepSchedule::polynomial(1e-2, 0.6);
  cfg.iterations = 1000;
  cfg.seed = 5;
  cfg.initial_state = {0.0};
  const auto s = run_repeats(cfg, DoubleWellTarget{}, kIdentity, 3, double_well_reference_mean());
  CHECK(sweep.best.number(0, "mean_bias") == s.mean_abs_bias);
  CHECK(sweep.best.number(0, "best_a") == 1e-2);
  CHECK(sweep.best.number(0, "best_b") == 0.6);
}

TEST_CASE("alpha sweep picks the lowest-bias grid cell") {
  AlphaSweepParams p;
  p.alphas = {2.0, 1.8};
  p.a_grid = {1e-1, 1e-3};
  p.b_grid = {0.6, 0.51};
  p.iterations = 1000;
  p.repeats = 2;
  const auto sweep = alpha_sweep(p);
  REQUIRE(sweep.grid.rows.size() == 8);
  REQUIRE(sweep.best.rows.size() == 2);
  for (std::size_t ai = 0; ai < 2; ++ai) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 4 * ai; j < 4 * ai + 4; ++j) best = std::min(best, sweep.grid.number(j, "mean_bias"));
    CHECK(sweep.best.number(ai, "mean_bias") == best);
  }
  CHECK(sweep.best.number(0, "alpha") == 1.8);
  CHECK(sweep.grid.number(0, "a") == 1e-3);
  CHECK(sweep.grid.number(0, "b") == 0.51);
}

TEST_CASE("MF RMSE curves") {
  const SyntheticMF model(20, 15, 3, 4);
  MfParams p;
  p.alphas = {2.0, 1.8};
  p.schedule = StepSchedule::polynomial(1e-3, 0.51);
  p.iterations = 1500;
  p.stride = 100;
  p.chains = 3;
  const auto r = mf_rmse(p, model);
  CHECK(r.columns == std::vector<std::string>{"alpha", "chain", "seed", "iteration", "rmse", "a", "b", "N_omega", "N_Y"});
  CHECK(r.number(0, "N_Y") == static_cast<double>(model.data_size()));
  CHECK(r.number(0, "N_omega") == std::round(0.1 * static_cast<double>(model.data_size())));

  for (double alpha : {1.8, 2.0}) {
    std::map<std::size_t, std::pair<double, double>> ends;
    for (std::size_t row = 0; row < r.rows.size(); ++row) {
      if (r.number(row, "alpha") != alpha) continue;
      const auto chain = static_cast<std::size_t>(r.number(row, "chain"));
      auto [it, fresh] = ends.try_emplace(chain, r.number(row, "rmse"), r.number(row, "rmse"));
      it->second.second = r.number(row, "rmse");
    }
    REQUIRE(ends.size() == 3);
    for (const auto& [chain, fl] : ends) {
      CHECK(std::isfinite(fl.second));
      INFO("alpha " << alpha << " chain " << chain);
      CHECK(fl.second < fl.first);
    }
  }
  p.run.jobs = 3;
  CHECK(mf_rmse(p, model).csv() == r.csv());
  CHECK(mf_rmse(p, model).rows.size() == 2 * 3 * 15);
}

TEST_CASE("MF summaries") {
  ExperimentReport r{"mf", {"alpha", "chain", "seed", "iteration", "rmse", "a", "b", "N_omega", "N_Y"}};
  auto row = [&](double alpha, std::int64_t chain, std::int64_t it, double rmse) {
    r.add_row({alpha, chain, std::string("0"), it, rmse, 1e-5, 0.51, std::int64_t{1}, std::int64_t{10}});
  };
  row(1.5, 0, 100, 2.0);
  row(1.5, 0, 200, 1.0);
  row(1.5, 1, 100, 3.0);
  row(1.5, 1, 150, std::nan(""));
  row(2.0, 0, 100, 1.5);
  row(2.0, 0, 200, 1.2);
  row(2.0, 1, 100, 2.5);
  row(2.0, 1, 200, 2.4);

  const auto fin = final_rmse(r, 2.0);
  CHECK(fin.at(0) == 1.2);
  CHECK(fin.at(1) == 2.4);
  CHECK(std::isnan(final_rmse(r, 1.5).at(1)));

  const auto hits = iterations_to_threshold(r, 1.5, fin);
  CHECK(hits.at(0) == std::optional<std::size_t>{200});
  CHECK_FALSE(hits.at(1).has_value());
  CHECK(std::isinf(median_iterations(hits)));
  const auto own = iterations_to_threshold(r, 2.0, fin);
  CHECK(median_iterations(own) == 200.0);
  CHECK(std::isnan(median_iterations({})));
  CHECK(median_iterations({{0, 10}, {1, 30}, {2, std::nullopt}}) == 30.0);
}

TEST_CASE("MF validation") {
  const SyntheticMF model(8, 6, 2, 3);
  MfParams p;
  p.chains = 0;
  CHECK_THROWS_AS(mf_rmse(p, model), std::invalid_argument);
  p = MfParams{};
  p.batch_fraction = 0.0;
  CHECK_THROWS_AS(mf_rmse(p, model), std::invalid_argument);
  p = MfParams{};
  p.alphas = {0.9};
  CHECK_THROWS_AS(mf_rmse(p, model), std::invalid_argument);
}
