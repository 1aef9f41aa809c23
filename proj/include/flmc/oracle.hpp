#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flmc/targets.hpp"

namespace flmc {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureSpec {
  double lo = -10.0;
  double hi = 10.0;
  double tolerance = 1e-10;
  int max_depth = 50;
};

/// E_pi[g] = int g e^{-U} / int e^{-U} over [lo, hi] by adaptive Simpson.
///
/// Requires e^{-U} below 1e-16 of its peak at both endpoints. The integrals are computed
/// on 8 and 16 initial panels; the two answers must agree within 10 * tolerance.
double quadrature_expectation(const Target& target, const std::function<double(double)>& g,
                              const QuadratureSpec& spec = {});

/// Riesz derivative D^gamma f(x) = F^{-1}{|w|^gamma f_hat(w)}(x) for a known transform
/// f_hat(w) = int f(x) e^{-iwx} dx, by quadrature over w. gamma in (-1, 0).
double spectral_riesz(const std::function<std::complex<double>(double)>& f_hat, double gamma, double x,
                      double tolerance = 1e-12);

/// Persisted oracle value consumed by tests and the CLI.
struct Fixture {
  std::string name;
  nlohmann::json parameters;
  double value;
  double tolerance;
};

void write_fixtures(const std::string& path, const std::vector<Fixture>& fixtures);
std::vector<Fixture> read_fixtures(const std::string& path);
/// Throws std::out_of_range when `name` is absent.
const Fixture& find_fixture(const std::vector<Fixture>& fixtures, const std::string& name);

/// Reference mean of the double-well target on [-10, 10] at tolerance 1e-10.
Fixture double_well_mean_fixture();

}  // namespace flmc
