#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flmc/report.hpp"
#include "flmc/sampler.hpp"
#include "flmc/synthetic_mf.hpp"

namespace flmc {

/// Reference mean of the double-well target by quadrature on [-10, 10].
double double_well_reference_mean();

struct RunOptions {
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::optional<std::string> timestamp;
};

/// Full-drift chains on the double-well over alphas x hs x Ks.
struct BiasSweepParams {
  std::vector<double> alphas{1.5, 1.6, 1.7, 1.8, 1.9};
  std::vector<double> hs{0.06};
  std::vector<std::size_t> Ks{1, 2, 5, 10, 15, 20, 30, 50};
  StepSchedule schedule = StepSchedule::polynomial(1e-7, 0.6);
  std::size_t iterations = 5000;
  std::size_t repeats = 5;
  double initial_state = 0.0;
  /// Ground truth; NaN means the quadrature reference mean.
  double truth = std::numeric_limits<double>::quiet_NaN();
  RunOptions run;
};

BiasSweepParams bias_k_defaults();
BiasSweepParams bias_h_defaults();

/// Rows (alpha, h, K, a, b, N, repeats, seed, x0, truth, mean_bias, se, failures), sorted by (alpha, h, K).
/// Every cell reuses the same base seed, so cells differ only through the drift.
ExperimentReport bias_sweep(const std::string& name, const BiasSweepParams& params);

struct KappaParams {
  std::vector<double> alphas{1.5, 1.6, 1.7, 1.8, 1.9};
  double h = 0.06;
  std::size_t K_star = 170;
  std::size_t grid_size = 200;
  double lo = -5.0;
  double hi = 5.0;
  RunOptions run;
};

struct KappaTable {
  /// (alpha, h, K_star, grid_size, kappa_hat, skipped_points)
  ExperimentReport summary;
  /// (alpha, h, K_star, x, kappa); kappa empty for skipped points.
  ExperimentReport points;
};

KappaTable kappa_table(const KappaParams& params);

/// FLA on the double-well with a grid search over polynomial schedules per alpha.
struct AlphaSweepParams {
  std::vector<double> alphas{1.5, 1.6, 1.7, 1.75, 1.8, 1.9, 2.0};
  std::vector<double> a_grid{1e-2, 3e-2, 1e-1};
  std::vector<double> b_grid{0.51, 0.55, 0.6};
  std::size_t iterations = 50000;
  std::size_t repeats = 10;
  double initial_state = 0.0;
  double truth = std::numeric_limits<double>::quiet_NaN();
  RunOptions run;
};

struct AlphaSweep {
  /// (alpha, best_a, best_b, mean_bias, se, failures, N, repeats, seed, x0, truth)
  ExperimentReport best;
  /// (alpha, a, b, mean_bias, se, failures, N, repeats, seed, x0, truth) for every grid cell.
  ExperimentReport grid;
};

/// Best cell per alpha: lowest mean bias, where each cell's bias excludes failed repeats
/// (their count is reported alongside).
AlphaSweep alpha_sweep(const AlphaSweepParams& params);

/// SG-FLA on a synthetic matrix-factorization posterior.
struct MfParams {
  std::vector<double> alphas{1.5, 2.0};
  std::size_t rows = 50;
  std::size_t cols = 40;
  std::size_t rank = 5;
  std::uint64_t data_seed = 7;
  StepSchedule schedule = StepSchedule::polynomial(1e-5, 0.51);
  std::size_t iterations = 5000;
  std::size_t stride = 100;
  /// N_Omega = round(batch_fraction * N_Y), at least 1.
  double batch_fraction = 0.1;
  /// Chains per alpha; chain c uses seed derive_seed(run.seed, c).
  std::size_t chains = 1;
  /// Standard deviation of the N(0, s^2) initial factors.
  double init_scale = 0.1;
  RunOptions run;
};

/// Rows (alpha, chain, seed, iteration, rmse, a, b, N_omega, N_Y) every `stride` iterations and at N.
/// The predictor is the step-weighted running mean of test predictions over all iterates.
/// A failed chain ends with one row whose rmse is NaN at the failing iteration.
ExperimentReport mf_rmse(const MfParams& params);
/// Same on a given model; the shape and data seed in `params` are ignored.
ExperimentReport mf_rmse(const MfParams& params, const SyntheticMF& model);

/// Last recorded rmse per chain for `alpha`; NaN for failed chains.
std::map<std::size_t, double> final_rmse(const ExperimentReport& mf_report, double alpha);

/// First recorded iteration per chain at which rmse <= thresholds[chain]; nullopt if never
/// reached or the chain has no threshold.
std::map<std::size_t, std::optional<std::size_t>> iterations_to_threshold(
    const ExperimentReport& mf_report, double alpha, const std::map<std::size_t, double>& thresholds);

/// Median with nullopt counted as +infinity.
double median_iterations(const std::map<std::size_t, std::optional<std::size_t>>& hits);

}  // namespace flmc
