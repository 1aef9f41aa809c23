#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flmc/rng.hpp"

namespace flmc {

/// Symmetric alpha-stable law SaS(sigma): characteristic function exp(-|sigma w|^alpha).
/// At alpha = 2 this is N(0, 2 sigma^2).
class StableNoise {
 public:
  /// Throws std::invalid_argument unless alpha in (0, 2] and sigma > 0.
  StableNoise(double alpha, double sigma = 1.0);

  double alpha() const { return alpha_; }
  double sigma() const { return sigma_; }

 private:
  double alpha_;
  double sigma_;
};

/// One SaS(sigma) draw (Chambers-Mallows-Stuck, symmetric case).
/// Consumes exactly one angle draw (plus rejections near +-pi/2) and one exponential.
double sample_sas(const StableNoise& noise, RandomStream& rng);

/// `dim` independent draws; dim == 0 is rejected.
std::vector<double> sample_sas_vector(const StableNoise& noise, std::size_t dim, RandomStream& rng);

/// Fills `out` with independent draws, in order; same stream consumption as repeated sample_sas.
void fill_sas(const StableNoise& noise, std::span<double> out, RandomStream& rng);

}  // namespace flmc
