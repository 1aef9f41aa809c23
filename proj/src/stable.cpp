#include "flmc/stable.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace flmc {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
// Angles this close to +-pi/2 are redrawn so cos(V) stays well away from zero.
constexpr double kAngleGuard = 1e-10;

double standard_draw(double alpha, RandomStream& rng) {
  double v;
  do {
    v = std::numbers::pi * (rng.uniform_open() - 0.5);
  } while (kHalfPi - std::abs(v) < kAngleGuard);
  const double w = rng.exponential();

  const double cos_v = std::cos(v);
  return std::sin(alpha * v) / std::pow(cos_v, 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

}  // namespace

StableNoise::StableNoise(double alpha, double sigma) : alpha_(alpha), sigma_(sigma) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw std::invalid_argument("StableNoise: alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("StableNoise: sigma must be positive, got " + std::to_string(sigma));
  }
}

double sample_sas(const StableNoise& noise, RandomStream& rng) {
  return noise.sigma() * standard_draw(noise.alpha(), rng);
}

void fill_sas(const StableNoise& noise, std::span<double> out, RandomStream& rng) {
  for (double& x : out) x = sample_sas(noise, rng);
}

std::vector<double> sample_sas_vector(const StableNoise& noise, std::size_t dim, RandomStream& rng) {
  if (dim == 0) throw std::invalid_argument("sample_sas_vector: dim must be at least 1");
  std::vector<double> out(dim);
  fill_sas(noise, out, rng);
  return out;
}

}  // namespace flmc
