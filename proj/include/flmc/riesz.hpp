#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace flmc {

/// Raised when a test function returns a non-finite value at a stencil node.
class RieszEvaluationError : public std::runtime_error {
 public:
  RieszEvaluationError(long node, double position, double value);
  long node() const { return node_; }
  double position() const { return position_; }

 private:
  long node_;
  double position_;
};

/// Coefficient g_{gamma,k} of the fractional centered difference,
///   (-1)^k Gamma(gamma+1) / (Gamma(gamma/2 - k + 1) Gamma(gamma/2 + k + 1)),
/// evaluated by the recurrence g_{k+1} = g_k (k - gamma/2) / (k + 1 + gamma/2) from
/// g_0 = Gamma(gamma+1) / Gamma(gamma/2+1)^2. Symmetric in k. gamma must lie in (-1, 2].
double riesz_coeff(double gamma, long k);

/// Half-stencil g_{gamma,0..K} for the truncated operator
///   Delta_{h,K}^gamma f(x) = h^{-gamma} sum_{k=-K}^{K} g_{gamma,k} f(x - k h).
class RieszStencil {
 public:
  RieszStencil(double gamma, double h, std::size_t radius);

  double gamma() const { return gamma_; }
  double h() const { return h_; }
  std::size_t radius() const { return coeffs_.size() - 1; }
  /// g_{gamma,k} for |k| <= radius.
  double operator[](long k) const { return coeffs_[static_cast<std::size_t>(k < 0 ? -k : k)]; }
  const std::vector<double>& half_coeffs() const { return coeffs_; }
  /// h^{-gamma}; exactly 1 when gamma == 0.
  double scale() const { return scale_; }

 private:
  double gamma_;
  double h_;
  double scale_;
  std::vector<double> coeffs_;
};

RieszStencil build_stencil(double gamma, double h, std::size_t radius);

/// Delta_{h,K}^gamma f(x); f is evaluated lazily at the 2K+1 nodes.
double truncated_centered_difference(const RieszStencil& stencil,
                                     const std::function<double(double)>& f, double x);

/// Gradient weight Gamma(alpha-1) / Gamma(alpha/2)^2 of the simplified drift; alpha in (1, 2].
double c_alpha(double alpha);

}  // namespace flmc
