#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "flmc/rng.hpp"

namespace flmc {

/// Indices Omega_n into the data set (0-based), drawn with replacement.
struct Minibatch {
  std::vector<std::size_t> indices;
  std::size_t size() const { return indices.size(); }
};

/// N_Omega indices drawn uniformly with replacement from [0, data_size).
Minibatch sample_minibatch(std::size_t data_size, std::size_t batch_size, RandomStream& rng);
/// Every index exactly once, in order.
Minibatch enumerate_minibatch(std::size_t data_size);

/// Potential-energy model: pi(x) proportional to exp(-U(x)).
///
/// Models with data (data_size() > 0) decompose U as
///   U(x) = -log p(x) - sum_i log p(Y_i | x)
/// and expose the two gradient pieces separately for minibatch estimation.
class Target {
 public:
  virtual ~Target() = default;

  virtual std::size_t dim() const = 0;
  virtual double potential(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> grad) const = 0;

  /// Number of data points N_Y; 0 means no minibatch support.
  virtual std::size_t data_size() const { return 0; }
  /// grad = -grad log p(x).
  virtual void prior_gradient(std::span<const double> x, std::span<double> grad) const;
  /// grad += scale * (-grad log p(Y_i | x)).
  virtual void accumulate_likelihood_gradient(std::span<const double> x, std::size_t i, double scale,
                                              std::span<double> grad) const;

  // Scalar conveniences for one-dimensional models.
  double potential(double x) const;
  double derivative(double x) const;
  std::vector<double> gradient(std::span<const double> x) const;
};

/// Minibatch gradient estimate
///   -[grad log p(x) + (N_Y / N_Omega) sum_{i in Omega} grad log p(Y_i | x)].
void sg_gradient(const Target& target, std::span<const double> x, const Minibatch& batch,
                 std::span<double> grad);
std::vector<double> sg_gradient(const Target& target, std::span<const double> x, const Minibatch& batch);

double double_well(double x);
double double_well_grad(double x);

/// U(x) = (x+5)(x+1)(x-1.02)(x-5)/10 + 0.5.
class DoubleWellTarget final : public Target {
 public:
  using Target::gradient;
  using Target::potential;

  std::size_t dim() const override { return 1; }
  double potential(std::span<const double> x) const override { return double_well(x[0]); }
  void gradient(std::span<const double> x, std::span<double> grad) const override {
    grad[0] = double_well_grad(x[0]);
  }
};

/// Isotropic Gaussian: U(x) = |x - mean|^2 / (2 variance).
class GaussianTarget final : public Target {
 public:
  using Target::gradient;
  using Target::potential;

  GaussianTarget(std::vector<double> mean, double variance);

  std::size_t dim() const override { return mean_.size(); }
  double potential(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;

 private:
  std::vector<double> mean_;
  double variance_;
};

std::shared_ptr<GaussianTarget> gaussian_target(std::vector<double> mean, double variance);

/// U(x) = sum_d U_d(x_d) over one-dimensional components.
class SeparableTarget final : public Target {
 public:
  using Target::gradient;
  using Target::potential;

  explicit SeparableTarget(std::vector<std::shared_ptr<const Target>> components);

  std::size_t dim() const override { return components_.size(); }
  double potential(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;

 private:
  std::vector<std::shared_ptr<const Target>> components_;
};

}  // namespace flmc
