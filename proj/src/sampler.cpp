#include "flmc/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flmc/parallel.hpp"
#include "flmc/stable.hpp"

namespace flmc {

namespace {

double parse_number(std::string_view text, std::string_view what) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument("cannot parse " + std::string(what) + " from '" + s + "'");
  }
  return v;
}

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

StepSchedule StepSchedule::polynomial(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("schedule: a_eta must be positive");
  if (!(b > 0.5 && b <= 1.0)) throw std::invalid_argument("schedule: b_eta must lie in (0.5, 1]");
  return StepSchedule(true, a, b);
}

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("schedule: eta must be positive");
  return StepSchedule(false, eta, 0.0);
}

StepSchedule StepSchedule::parse(std::string_view text) {
  if (text.starts_with("poly:")) {
    const auto body = text.substr(5);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument("schedule: expected poly:<a>,<b>");
    return polynomial(parse_number(body.substr(0, comma), "a_eta"), parse_number(body.substr(comma + 1), "b_eta"));
  }
  if (text.starts_with("const:")) return constant(parse_number(text.substr(6), "eta"));
  throw std::invalid_argument("schedule: expected poly:<a>,<b> or const:<eta>, got '" + std::string(text) + "'");
}

double StepSchedule::operator()(std::size_t n) const {
  if (!polynomial_) return a_;
  return std::pow(a_ / static_cast<double>(n), b_);
}

std::string StepSchedule::describe() const {
  if (polynomial_) return "poly:" + format_g17(a_) + "," + format_g17(b_);
  return "const:" + format_g17(a_);
}

void Trace::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "n,eta";
  for (std::size_t d = 0; d < dim; ++d) out << ",x_" << d;
  out << '\n';
  for (std::size_t r = 0; r < recorded_iterations.size(); ++r) {
    out << recorded_iterations[r] << ',' << format_g17(recorded_etas[r]);
    for (double v : state(r)) out << ',' << format_g17(v);
    out << '\n';
  }
}

ChainError::ChainError(Kind kind, std::uint64_t seed, std::size_t iteration, std::vector<double> state,
                       const std::string& detail)
    : std::runtime_error((kind == Kind::drift ? "drift failure" : "chain diverged") + std::string(" at iteration ") +
                         std::to_string(iteration) + " (seed " + std::to_string(seed) + "): " + detail),
      kind_(kind),
      seed_(seed),
      iteration_(iteration),
      state_(std::move(state)) {}

ChainStreams::ChainStreams(std::uint64_t seed) : noise(derive_seed(seed, 0)), batch(derive_seed(seed, 1)) {}

std::vector<double> initial_state(const SamplerConfig& config, const Target& target) {
  if (config.initial_state.empty()) return std::vector<double>(target.dim(), 0.0);
  if (config.initial_state.size() != target.dim()) {
    throw std::invalid_argument("initial state has dimension " + std::to_string(config.initial_state.size()) +
                                ", target has " + std::to_string(target.dim()));
  }
  return config.initial_state;
}

ChainStepper::ChainStepper(const SamplerConfig& config, const Target& target)
    : config_(config), target_(target), drift_buf_(target.dim()), noise_buf_(target.dim()) {
  config_.drift.validate();
  if (config_.iterations < 1) throw std::invalid_argument("sampler: iterations must be at least 1");
  if (config_.record_stride < 1) throw std::invalid_argument("sampler: record stride must be at least 1");
  (void)initial_state(config_, target_);
  const double alpha = config_.drift.alpha;
  if (const auto* f = std::get_if<FullCentered>(&config_.drift.variant)) full_.emplace(alpha, f->h, f->K);
  if (const auto* r = std::get_if<Reference>(&config_.drift.variant)) full_.emplace(alpha, r->h, r->K_star);
  if (config_.minibatch) {
    if (full_) throw std::invalid_argument("sampler: minibatch gradients require the simplified drift");
    if (target_.data_size() == 0) throw std::invalid_argument("sampler: target does not support minibatches");
    if (config_.minibatch->size < 1) throw std::invalid_argument("sampler: minibatch size must be at least 1");
  }
}

void ChainStepper::drift(std::span<const double> state, ChainStreams& streams, std::span<double> out) {
  const double alpha = config_.drift.alpha;
  if (full_) {
    if (target_.dim() == 1) {
      out[0] = (*full_)(target_, state[0]);
    } else {
      (*full_)(target_, state, out);
    }
    return;
  }
  if (config_.minibatch) {
    const Minibatch batch = config_.minibatch->mode == MinibatchMode::enumerate
                                ? enumerate_minibatch(target_.data_size())
                                : sample_minibatch(target_.data_size(), config_.minibatch->size, streams.batch);
    sg_gradient(target_, state, batch, out);
    const double c = c_alpha(alpha);
    for (double& v : out) v = -c * v;
    return;
  }
  simplified_drift(target_, state, alpha, out);
}

void ChainStepper::advance(std::span<double> state, std::size_t n, ChainStreams& streams) {
  const double alpha = config_.drift.alpha;
  const double eta = config_.schedule(n + 1);
  try {
    drift(state, streams, drift_buf_);
  } catch (const ChainError&) {
    throw;
  } catch (const std::exception& err) {
    throw ChainError(ChainError::Kind::drift, config_.seed, n, {state.begin(), state.end()}, err.what());
  }
  fill_sas(StableNoise(alpha), noise_buf_, streams.noise);
  const double noise_scale = std::pow(eta, 1.0 / alpha);
  for (std::size_t d = 0; d < state.size(); ++d) {
    state[d] += eta * drift_buf_[d] + noise_scale * noise_buf_[d];
  }
  for (double v : state) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) {
      throw ChainError(ChainError::Kind::divergence, config_.seed, n + 1, {state.begin(), state.end()},
                       "state component beyond 1e12");
    }
  }
}

std::vector<double> step(std::span<const double> state, std::size_t n, const SamplerConfig& config,
                         const Target& target, ChainStreams& streams) {
  ChainStepper stepper(config, target);
  std::vector<double> next(state.begin(), state.end());
  stepper.advance(next, n, streams);
  return next;
}

Trace run_chain(const SamplerConfig& config, const Target& target, const std::vector<TestFunction>& tests,
                const StepObserver& observer) {
  ChainStepper stepper(config, target);
  ChainStreams streams(config.seed);
  std::vector<double> x = initial_state(config, target);

  Trace trace;
  trace.dim = target.dim();
  trace.weighted_sums.assign(tests.size(), 0.0);
  for (const auto& t : tests) trace.names.push_back(t.name);
  const std::size_t n_records = (config.iterations + config.record_stride - 1) / config.record_stride;
  trace.recorded_iterations.reserve(n_records);
  trace.recorded_etas.reserve(n_records);
  trace.recorded_states.reserve(n_records * trace.dim);

  for (std::size_t n = 1; n <= config.iterations; ++n) {
    const double eta = config.schedule(n);
    trace.total_step += eta;
    for (std::size_t i = 0; i < tests.size(); ++i) trace.weighted_sums[i] += eta * tests[i].fn(x);
    if ((n - 1) % config.record_stride == 0) {
      trace.recorded_iterations.push_back(n);
      trace.recorded_etas.push_back(eta);
      trace.recorded_states.insert(trace.recorded_states.end(), x.begin(), x.end());
    }
    if (observer) observer(n, eta, x);
    stepper.advance(x, n, streams);
    trace.steps = n;
  }
  trace.final_state = std::move(x);
  return trace;
}

std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t repeat) {
  return derive_seed(base_seed, 0x5eed0000ULL + repeat);
}

RepeatSummary run_repeats(const SamplerConfig& config, const Target& target, const TestFunction& g,
                          std::size_t repeats, double truth, unsigned jobs) {
  if (repeats < 1) throw std::invalid_argument("run_repeats: repeats must be at least 1");
  RepeatSummary summary{std::vector<RepeatOutcome>(repeats), 0.0, 0.0, 0};
  parallel_for(
      repeats,
      [&](std::size_t r) {
        SamplerConfig cfg = config;
        cfg.seed = repeat_seed(config.seed, r);
        cfg.record_stride = config.iterations;  // only the estimator is needed
        RepeatOutcome& out = summary.outcomes[r];
        out.repeat = r;
        out.seed = cfg.seed;
        try {
          out.estimate = run_chain(cfg, target, {g}).estimate(0);
        } catch (const ChainError& err) {
          out.error = err.what();
        }
      },
      jobs);

  std::vector<double> abs_err;
  for (const auto& o : summary.outcomes) {
    if (o.estimate) {
      abs_err.push_back(std::abs(*o.estimate - truth));
    } else {
      ++summary.failures;
    }
  }
  if (abs_err.empty()) {
    summary.mean_abs_bias = std::nan("");
    summary.standard_error = std::nan("");
    return summary;
  }
  double mean = 0.0;
  for (double e : abs_err) mean += e;
  mean /= static_cast<double>(abs_err.size());
  double var = 0.0;
  for (double e : abs_err) var += (e - mean) * (e - mean);
  summary.mean_abs_bias = mean;
  summary.standard_error =
      abs_err.size() > 1 ? std::sqrt(var / static_cast<double>(abs_err.size() - 1) / static_cast<double>(abs_err.size()))
                         : 0.0;
  return summary;
}

}  // namespace flmc
