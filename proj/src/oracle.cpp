#include "flmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace flmc {

namespace {

struct SimpsonState {
  int max_depth;
  bool converged = true;
};

double simpson_recurse(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth, SimpsonState& st) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth >= st.max_depth) {
    st.converged = false;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1, st) +
         simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1, st);
}

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, int panels, double tol,
                        SimpsonState& st) {
  const double width = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    const double b = p + 1 == panels ? hi : a + width;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_recurse(f, a, b, fa, fm, fb, whole, tol / panels, 0, st);
  }
  return total;
}

}  // namespace

double quadrature_expectation(const Target& target, const std::function<double(double)>& g,
                              const QuadratureSpec& spec) {
  if (target.dim() != 1) throw std::invalid_argument("quadrature_expectation: target must be 1-D");
  if (!(spec.lo < spec.hi)) throw std::invalid_argument("quadrature_expectation: need lo < hi");
  if (!(spec.tolerance > 0.0)) throw std::invalid_argument("quadrature_expectation: tolerance must be positive");

  // Shift by the minimum potential so the weight peaks near 1.
  constexpr int kScan = 4000;
  double u_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    u_min = std::min(u_min, target.potential(spec.lo + (spec.hi - spec.lo) * i / kScan));
  }
  auto weight = [&](double x) { return std::exp(-(target.potential(x) - u_min)); };
  for (double end : {spec.lo, spec.hi}) {
    if (!(weight(end) < 1e-16)) {
      throw QuadratureError("quadrature_expectation: e^{-U} at x=" + std::to_string(end) +
                            " is not negligible; widen the interval");
    }
  }

  auto expectation = [&](int panels) {
    SimpsonState st{spec.max_depth};
    const std::function<double(double)> w = weight;
    const double z = adaptive_simpson(w, spec.lo, spec.hi, panels, spec.tolerance, st);
    const std::function<double(double)> gw = [&](double x) { return g(x) * weight(x); };
    const double m = adaptive_simpson(gw, spec.lo, spec.hi, panels, spec.tolerance * z, st);
    if (!st.converged) {
      throw QuadratureError("quadrature_expectation: no convergence within depth " + std::to_string(spec.max_depth));
    }
    return m / z;
  };
  const double coarse = expectation(8);
  const double fine = expectation(16);
  if (std::abs(coarse - fine) > 10.0 * spec.tolerance * std::max(1.0, std::abs(fine))) {
    throw QuadratureError("quadrature_expectation: resolutions disagree (" + std::to_string(coarse) + " vs " +
                          std::to_string(fine) + ")");
  }
  return fine;
}

double spectral_riesz(const std::function<std::complex<double>(double)>& f_hat, double gamma, double x,
                      double tolerance) {
  if (!(gamma > -1.0 && gamma < 0.0)) {
    throw std::invalid_argument("spectral_riesz: gamma must lie in (-1, 0), got " + std::to_string(gamma));
  }
  // Fold w < 0 onto w > 0, then substitute u = w^{gamma+1} to remove the endpoint singularity:
  // int_0^inf w^gamma F(w) dw = int_0^inf F(u^{1/(gamma+1)}) du / (gamma + 1).
  const double p = 1.0 / (gamma + 1.0);
  auto integrand = [&](double u) {
    const double w = std::pow(u, p);
    const std::complex<double> lo = f_hat(-w), hi = f_hat(w);
    if (lo == 0.0 && hi == 0.0) return 0.0;
    const std::complex<double> phase(std::cos(w * x), std::sin(w * x));
    return (hi * phase + lo * std::conj(phase)).real();
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0, l1 = 0.0;
  double value = std::numeric_limits<double>::quiet_NaN();
  try {
    value = integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), std::sqrt(tolerance),
                                 &error, &l1) *
            p;
  } catch (const std::exception& e) {
    throw QuadratureError(std::string("spectral_riesz: frequency integral failed: ") + e.what());
  }
  // Double-exponential rules converge quadratically: a level-to-level change of sqrt(tol) leaves ~tol.
  if (!std::isfinite(value) || error > std::sqrt(tolerance) * std::max(1.0, l1)) {
    throw QuadratureError("spectral_riesz: frequency integral did not converge (error estimate " +
                          std::to_string(error) + ")");
  }
  return value / (2.0 * std::numbers::pi);
}

void write_fixtures(const std::string& path, const std::vector<Fixture>& fixtures) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& f : fixtures) {
    doc.push_back({{"name", f.name}, {"parameters", f.parameters}, {"value", f.value}, {"tolerance", f.tolerance}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
}

std::vector<Fixture> read_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixtures file " + path);
  const auto doc = nlohmann::json::parse(in);
  std::vector<Fixture> out;
  for (const auto& item : doc) {
    out.push_back({item.at("name").get<std::string>(), item.value("parameters", nlohmann::json::object()),
                   item.at("value").get<double>(), item.at("tolerance").get<double>()});
  }
  return out;
}

const Fixture& find_fixture(const std::vector<Fixture>& fixtures, const std::string& name) {
  for (const auto& f : fixtures) {
    if (f.name == name) return f;
  }
  throw std::out_of_range("fixture '" + name + "' not found");
}

Fixture double_well_mean_fixture() {
  const QuadratureSpec spec{-10.0, 10.0, 1e-10, 50};
  const double m = quadrature_expectation(DoubleWellTarget{}, [](double x) { return x; }, spec);
  return {"double_well_mean",
          {{"target", "double-well"}, {"g", "x"}, {"lo", spec.lo}, {"hi", spec.hi}, {"tolerance", spec.tolerance}},
          m,
          10.0 * spec.tolerance};
}

}  // namespace flmc
