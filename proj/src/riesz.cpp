#include "flmc/riesz.hpp"

#include <cmath>
#include <string>

namespace flmc {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > -1.0 && gamma <= 2.0)) {
    throw std::invalid_argument("Riesz order gamma must lie in (-1, 2], got " + std::to_string(gamma));
  }
}

double leading_coeff(double gamma) {
  const double g = std::tgamma(gamma / 2.0 + 1.0);
  return std::tgamma(gamma + 1.0) / (g * g);
}

}  // namespace

RieszEvaluationError::RieszEvaluationError(long node, double position, double value)
    : std::runtime_error("non-finite function value " + std::to_string(value) + " at stencil node k=" +
                         std::to_string(node) + " (x - k h = " + std::to_string(position) + ")"),
      node_(node),
      position_(position) {}

double riesz_coeff(double gamma, long k) {
  check_gamma(gamma);
  const long n = k < 0 ? -k : k;
  double g = leading_coeff(gamma);
  for (long j = 0; j < n; ++j) {
    g *= (static_cast<double>(j) - gamma / 2.0) / (static_cast<double>(j) + 1.0 + gamma / 2.0);
  }
  return g;
}

RieszStencil::RieszStencil(double gamma, double h, std::size_t radius) : gamma_(gamma), h_(h) {
  check_gamma(gamma);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("Riesz stencil mesh h must be positive, got " + std::to_string(h));
  }
  if (radius < 1) throw std::invalid_argument("Riesz stencil radius K must be at least 1");
  scale_ = gamma == 0.0 ? 1.0 : std::pow(h, -gamma);
  coeffs_.resize(radius + 1);
  coeffs_[0] = leading_coeff(gamma);
  for (std::size_t j = 0; j < radius; ++j) {
    const double jd = static_cast<double>(j);
    coeffs_[j + 1] = coeffs_[j] * (jd - gamma / 2.0) / (jd + 1.0 + gamma / 2.0);
  }
}

RieszStencil build_stencil(double gamma, double h, std::size_t radius) {
  return RieszStencil(gamma, h, radius);
}

double truncated_centered_difference(const RieszStencil& stencil,
                                     const std::function<double(double)>& f, double x) {
  const double h = stencil.h();
  auto eval = [&](long k) {
    const double y = x - static_cast<double>(k) * h;
    const double v = f(y);
    if (!std::isfinite(v)) throw RieszEvaluationError(k, y, v);
    return v;
  };
  const long radius = static_cast<long>(stencil.radius());
  double sum = stencil[0] * eval(0);
  for (long k = 1; k <= radius; ++k) {
    const double g = stencil[k];
    if (g == 0.0) continue;
    sum += g * (eval(k) + eval(-k));
  }
  return stencil.scale() * sum;
}

double c_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw std::invalid_argument("c_alpha: alpha must lie in (1, 2], got " + std::to_string(alpha));
  }
  const double g = std::tgamma(alpha / 2.0);
  return std::tgamma(alpha - 1.0) / (g * g);
}

}  // namespace flmc
