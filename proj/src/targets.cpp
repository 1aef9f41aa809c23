#include "flmc/targets.hpp"

#include <cmath>
#include <string>

namespace flmc {

Minibatch sample_minibatch(std::size_t data_size, std::size_t batch_size, RandomStream& rng) {
  if (data_size == 0) throw std::invalid_argument("sample_minibatch: target has no data");
  if (batch_size == 0) throw std::invalid_argument("sample_minibatch: batch size must be at least 1");
  Minibatch batch;
  batch.indices.resize(batch_size);
  for (auto& i : batch.indices) i = static_cast<std::size_t>(rng.index(data_size));
  return batch;
}

Minibatch enumerate_minibatch(std::size_t data_size) {
  Minibatch batch;
  batch.indices.resize(data_size);
  for (std::size_t i = 0; i < data_size; ++i) batch.indices[i] = i;
  return batch;
}

void Target::prior_gradient(std::span<const double>, std::span<double>) const {
  throw std::logic_error("target has no prior/likelihood decomposition");
}

void Target::accumulate_likelihood_gradient(std::span<const double>, std::size_t, double,
                                            std::span<double>) const {
  throw std::logic_error("target has no prior/likelihood decomposition");
}

double Target::potential(double x) const {
  if (dim() != 1) throw std::invalid_argument("scalar potential requested on a multi-dimensional target");
  return potential(std::span<const double>(&x, 1));
}

double Target::derivative(double x) const {
  if (dim() != 1) throw std::invalid_argument("scalar derivative requested on a multi-dimensional target");
  double g = 0.0;
  gradient(std::span<const double>(&x, 1), std::span<double>(&g, 1));
  return g;
}

std::vector<double> Target::gradient(std::span<const double> x) const {
  std::vector<double> g(dim());
  gradient(x, g);
  return g;
}

void sg_gradient(const Target& target, std::span<const double> x, const Minibatch& batch,
                 std::span<double> grad) {
  const std::size_t n_data = target.data_size();
  if (n_data == 0) throw std::invalid_argument("sg_gradient: target does not support minibatches");
  if (batch.size() == 0) throw std::invalid_argument("sg_gradient: empty minibatch");
  for (std::size_t i : batch.indices) {
    if (i >= n_data) {
      throw std::out_of_range("sg_gradient: minibatch index " + std::to_string(i) + " outside [0, " +
                              std::to_string(n_data) + ")");
    }
  }
  const double scale = static_cast<double>(n_data) / static_cast<double>(batch.size());
  target.prior_gradient(x, grad);
  for (std::size_t i : batch.indices) target.accumulate_likelihood_gradient(x, i, scale, grad);
}

std::vector<double> sg_gradient(const Target& target, std::span<const double> x, const Minibatch& batch) {
  std::vector<double> g(target.dim());
  sg_gradient(target, x, batch, g);
  return g;
}

// Expanded: (x^4 - 0.02 x^3 - 26.02 x^2 + 0.5 x + 25.5) / 10 + 0.5
double double_well(double x) {
  const double p = (((x - 0.02) * x - 26.02) * x + 0.5) * x + 25.5;
  return p / 10.0 + 0.5;
}

double double_well_grad(double x) { return (((4.0 * x - 0.06) * x - 52.04) * x + 0.5) / 10.0; }

GaussianTarget::GaussianTarget(std::vector<double> mean, double variance)
    : mean_(std::move(mean)), variance_(variance) {
  if (mean_.empty()) throw std::invalid_argument("gaussian_target: mean must be non-empty");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("gaussian_target: variance must be positive, got " + std::to_string(variance));
  }
}

double GaussianTarget::potential(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t d = 0; d < mean_.size(); ++d) {
    const double r = x[d] - mean_[d];
    s += r * r;
  }
  return s / (2.0 * variance_);
}

void GaussianTarget::gradient(std::span<const double> x, std::span<double> grad) const {
  for (std::size_t d = 0; d < mean_.size(); ++d) grad[d] = (x[d] - mean_[d]) / variance_;
}

std::shared_ptr<GaussianTarget> gaussian_target(std::vector<double> mean, double variance) {
  return std::make_shared<GaussianTarget>(std::move(mean), variance);
}

SeparableTarget::SeparableTarget(std::vector<std::shared_ptr<const Target>> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("SeparableTarget: no components");
  for (const auto& c : components_) {
    if (!c || c->dim() != 1) throw std::invalid_argument("SeparableTarget: components must be 1-D targets");
  }
}

double SeparableTarget::potential(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t d = 0; d < components_.size(); ++d) s += components_[d]->potential(x[d]);
  return s;
}

void SeparableTarget::gradient(std::span<const double> x, std::span<double> grad) const {
  for (std::size_t d = 0; d < components_.size(); ++d) grad[d] = components_[d]->derivative(x[d]);
}

}  // namespace flmc
