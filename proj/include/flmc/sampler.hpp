#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flmc/drift.hpp"
#include "flmc/rng.hpp"
#include "flmc/targets.hpp"

namespace flmc {

/// eta_n = (a / n)^b with a > 0, b in (0.5, 1], or a constant eta > 0.
class StepSchedule {
 public:
  static StepSchedule polynomial(double a, double b);
  static StepSchedule constant(double eta);
  /// "poly:<a>,<b>" or "const:<eta>".
  static StepSchedule parse(std::string_view text);

  /// Step size for iteration n >= 1.
  double operator()(std::size_t n) const;

  bool is_polynomial() const { return polynomial_; }
  double a() const { return a_; }
  double b() const { return b_; }
  std::string describe() const;

 private:
  StepSchedule(bool polynomial, double a, double b) : polynomial_(polynomial), a_(a), b_(b) {}
  bool polynomial_;
  double a_;  // eta for constant schedules
  double b_;
};

enum class MinibatchMode {
  with_replacement,
  /// Every data index once per step (N_Omega = N_Y); reproduces the full gradient.
  enumerate,
};

struct MinibatchConfig {
  std::size_t size;
  MinibatchMode mode = MinibatchMode::with_replacement;
};

struct SamplerConfig {
  DriftSpec drift;
  StepSchedule schedule = StepSchedule::constant(1e-2);
  std::size_t iterations = 1;
  std::uint64_t seed = 0;
  /// Empty means the origin.
  std::vector<double> initial_state;
  /// Only with the simplified drift on targets with data.
  std::optional<MinibatchConfig> minibatch;
  /// Thins stored states only; estimators see every iterate.
  std::size_t record_stride = 1;
};

struct TestFunction {
  std::string name;
  std::function<double(std::span<const double>)> fn;
};

/// Recorded chain plus step-size-weighted ergodic averages
///   nu_N(g) = (1/H_N) sum_{n=1}^N eta_n g(X_n),  H_N = sum_{n=1}^N eta_n,
/// where X_1 is the initial state.
struct Trace {
  std::size_t dim = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> recorded_iterations;
  std::vector<double> recorded_etas;
  /// Row-major, one row of `dim` values per recorded iteration.
  std::vector<double> recorded_states;
  double total_step = 0.0;
  std::vector<std::string> names;
  std::vector<double> weighted_sums;
  std::vector<double> final_state;

  double estimate(std::size_t i) const { return weighted_sums.at(i) / total_step; }
  std::span<const double> state(std::size_t row) const {
    return std::span<const double>(recorded_states).subspan(row * dim, dim);
  }
  /// Header `n,eta,x_0,...,x_{D-1}`.
  void write_csv(const std::string& path) const;
};

/// A chain stopped at iteration `iteration` (drift failure or divergence).
class ChainError : public std::runtime_error {
 public:
  enum class Kind { drift, divergence };
  ChainError(Kind kind, std::uint64_t seed, std::size_t iteration, std::vector<double> state,
             const std::string& detail);

  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t iteration() const { return iteration_; }
  const std::vector<double>& state() const { return state_; }

 private:
  Kind kind_;
  std::uint64_t seed_;
  std::size_t iteration_;
  std::vector<double> state_;
};

/// Components beyond this magnitude abort the chain.
inline constexpr double kDivergenceBound = 1e12;

/// Noise and minibatch sub-streams of one chain seed.
struct ChainStreams {
  RandomStream noise;
  RandomStream batch;
  explicit ChainStreams(std::uint64_t seed);
};

/// Validated, reusable Euler-Maruyama update for one (config, target) pair.
class ChainStepper {
 public:
  ChainStepper(const SamplerConfig& config, const Target& target);

  /// X_{n+1} = X_n + eta_{n+1} drift(X_n) + eta_{n+1}^{1/alpha} dL, dL ~ SaS(1) per coordinate.
  /// Updates `state` in place; throws ChainError.
  void advance(std::span<double> state, std::size_t n, ChainStreams& streams);

  const SamplerConfig& config() const { return config_; }

 private:
  void drift(std::span<const double> state, ChainStreams& streams, std::span<double> out);

  SamplerConfig config_;
  const Target& target_;
  std::optional<FullDrift> full_;
  std::vector<double> drift_buf_;
  std::vector<double> noise_buf_;
};

/// Initial state of a config (origin when unset), validated against the target.
std::vector<double> initial_state(const SamplerConfig& config, const Target& target);

/// One update from `state` at iteration n; see ChainStepper::advance.
std::vector<double> step(std::span<const double> state, std::size_t n, const SamplerConfig& config,
                         const Target& target, ChainStreams& streams);

using StepObserver = std::function<void(std::size_t n, double eta, std::span<const double> state)>;

/// Runs config.iterations steps. The observer, when set, sees (n, eta_n, X_n) for n = 1..N.
Trace run_chain(const SamplerConfig& config, const Target& target, const std::vector<TestFunction>& tests,
                const StepObserver& observer = {});

struct RepeatOutcome {
  std::size_t repeat;
  std::uint64_t seed;
  std::optional<double> estimate;
  std::string error;
};

struct RepeatSummary {
  std::vector<RepeatOutcome> outcomes;
  /// Mean of |estimate - truth| over successful repeats (NaN if none).
  double mean_abs_bias;
  /// Standard error of that mean (0 for a single repeat).
  double standard_error;
  std::size_t failures;
};

/// Seed of repeat r derived from the config seed.
std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t repeat);

RepeatSummary run_repeats(const SamplerConfig& config, const Target& target, const TestFunction& g,
                          std::size_t repeats, double truth, unsigned jobs = 1);

}  // namespace flmc
