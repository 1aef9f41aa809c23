#include "flmc/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flmc/log.hpp"
#include "flmc/parallel.hpp"

namespace flmc {

namespace {

const double kMaxLog = std::log(std::numeric_limits<double>::max());

void check_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw std::invalid_argument("alpha must lie in (1, 2], got " + std::to_string(alpha));
  }
}

void check_mesh(double h, std::size_t K) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("mesh h must be positive");
  if (K < 1) throw std::invalid_argument("truncation radius K must be at least 1");
}

double sum_ascending_magnitude(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

void DriftSpec::validate() const {
  check_alpha(alpha);
  if (const auto* f = std::get_if<FullCentered>(&variant)) check_mesh(f->h, f->K);
  if (const auto* r = std::get_if<Reference>(&variant)) check_mesh(r->h, r->K_star);
}

DriftOverflowError::DriftOverflowError(double x, double ell_star, int axis)
    : std::runtime_error("drift overflow at x=" + std::to_string(x) + ": exp(l*) with l*=" +
                         std::to_string(ell_star) + " is not representable" +
                         (axis >= 0 ? " (axis " + std::to_string(axis) + ")" : std::string())),
      x_(x),
      ell_star_(ell_star),
      axis_(axis) {}

namespace detail {

double factored_drift(const RieszStencil& stencil, std::size_t K, std::span<const double> potentials,
                      std::span<const double> derivatives, double x, int axis) {
  const long R = static_cast<long>((potentials.size() - 1) / 2);
  const long radius = static_cast<long>(K);
  const double u0 = potentials[static_cast<std::size_t>(R)];
  if (!std::isfinite(u0)) throw RieszEvaluationError(0, x, u0);

  double ell_star = -std::numeric_limits<double>::infinity();
  for (long k = -radius; k <= radius; ++k) {
    if (stencil[k] == 0.0) continue;
    const auto idx = static_cast<std::size_t>(R + k);
    const double u = potentials[idx];
    if (!std::isfinite(u)) throw RieszEvaluationError(k, x - static_cast<double>(k) * stencil.h(), u);
    if (!std::isfinite(derivatives[idx])) {
      throw RieszEvaluationError(k, x - static_cast<double>(k) * stencil.h(), derivatives[idx]);
    }
    ell_star = std::max(ell_star, u0 - u);
  }
  if (ell_star > kMaxLog) throw DriftOverflowError(x, ell_star, axis);

  thread_local std::vector<double> terms;
  terms.clear();
  for (long k = -radius; k <= radius; ++k) {
    const double g = stencil[k];
    if (g == 0.0) continue;
    const auto idx = static_cast<std::size_t>(R + k);
    terms.push_back(g * -derivatives[idx] * std::exp((u0 - potentials[idx]) - ell_star));
  }
  const double value = std::exp(ell_star) * stencil.scale() * sum_ascending_magnitude(terms);
  if (!std::isfinite(value)) throw DriftOverflowError(x, ell_star, axis);
  return value;
}

}  // namespace detail

FullDrift::FullDrift(double alpha, double h, std::size_t K) : stencil_(alpha - 2.0, h, (check_mesh(h, K), K)) {
  check_alpha(alpha);
}

double FullDrift::operator()(const Target& target, double x) const {
  const long R = static_cast<long>(stencil_.radius());
  thread_local std::vector<double> pot, der;
  pot.assign(static_cast<std::size_t>(2 * R + 1), 0.0);
  der.assign(pot.size(), 0.0);
  for (long k = -R; k <= R; ++k) {
    if (stencil_[k] == 0.0) continue;
    const double y = x - static_cast<double>(k) * stencil_.h();
    pot[static_cast<std::size_t>(R + k)] = target.potential(y);
    der[static_cast<std::size_t>(R + k)] = target.derivative(y);
  }
  return detail::factored_drift(stencil_, stencil_.radius(), pot, der, x);
}

void FullDrift::operator()(const Target& target, std::span<const double> x, std::span<double> out) const {
  const std::size_t D = target.dim();
  if (x.size() != D || out.size() != D) throw std::invalid_argument("FullDrift: dimension mismatch");
  const long R = static_cast<long>(stencil_.radius());
  std::vector<double> pot(static_cast<std::size_t>(2 * R + 1), 0.0), der(pot.size(), 0.0);
  std::vector<double> y(x.begin(), x.end()), grad(D);
  for (std::size_t d = 0; d < D; ++d) {
    for (long k = -R; k <= R; ++k) {
      if (stencil_[k] == 0.0) continue;
      y[d] = x[d] - static_cast<double>(k) * stencil_.h();
      target.gradient(y, grad);
      pot[static_cast<std::size_t>(R + k)] = target.potential(y);
      der[static_cast<std::size_t>(R + k)] = grad[d];
    }
    y[d] = x[d];
    out[d] = detail::factored_drift(stencil_, stencil_.radius(), pot, der, x[d], D == 1 ? -1 : static_cast<int>(d));
  }
}

double full_drift(const Target& target, double x, const FullCentered& spec, double alpha) {
  return FullDrift(alpha, spec.h, spec.K)(target, x);
}

std::vector<double> full_drift_multi(const Target& target, std::span<const double> x, const FullCentered& spec,
                                     double alpha) {
  std::vector<double> out(target.dim());
  FullDrift(alpha, spec.h, spec.K)(target, x, out);
  return out;
}

void simplified_drift(const Target& target, std::span<const double> x, double alpha, std::span<double> out) {
  const double c = c_alpha(alpha);
  target.gradient(x, out);
  for (double& v : out) v = -c * v;
}

std::vector<double> simplified_drift(const Target& target, std::span<const double> x, double alpha) {
  std::vector<double> out(target.dim());
  simplified_drift(target, x, alpha, out);
  return out;
}

double r_diagnostic(const Target& target, double x, double alpha, double h, std::size_t K_x) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw std::invalid_argument("r_diagnostic: alpha must lie in (1, 2), got " + std::to_string(alpha));
  }
  check_mesh(h, K_x);
  const RieszStencil stencil(alpha - 2.0, h, K_x);
  const double gamma = stencil.gamma();
  const double u0 = target.potential(x);
  const double du0 = target.derivative(x);
  if (du0 == 0.0) {
    throw UndefinedDiagnosticError("r_diagnostic undefined at x=" + std::to_string(x) + ": U'(x) = 0");
  }

  const long R = static_cast<long>(K_x);
  std::vector<double> ell, num;
  ell.reserve(static_cast<std::size_t>(2 * R));
  num.reserve(ell.capacity());
  double ell_star = -std::numeric_limits<double>::infinity();
  for (long k = -R; k <= R; ++k) {
    if (k == 0) continue;
    const double y = x - static_cast<double>(k) * h;
    const double u = target.potential(y);
    const double du = target.derivative(y);
    if (!std::isfinite(u) || !std::isfinite(du)) throw RieszEvaluationError(k, y, std::isfinite(u) ? du : u);
    ell.push_back(u0 - u);
    num.push_back(stencil[k] * du);
    ell_star = std::max(ell_star, u0 - u);
  }
  std::vector<double> terms(ell.size());
  for (std::size_t i = 0; i < ell.size(); ++i) terms[i] = num[i] * std::exp(ell[i] - ell_star);
  // ratio = exp(l*) * t
  const double t = sum_ascending_magnitude(terms) / (stencil[0] * du0);
  if (ell_star <= kMaxLog - 10.0) {
    return std::pow(std::abs(std::exp(ell_star) * t + 1.0), 1.0 / gamma);
  }
  // exp(l*) |t| dwarfs the +1; work with log|bracket|.
  if (t == 0.0) return 1.0;
  return std::exp((ell_star + std::log(std::abs(t))) / gamma);
}

KappaResult kappa(const Target& target, double alpha, double h, std::size_t K_star, std::span<const double> grid,
                  unsigned jobs) {
  if (grid.empty()) throw std::invalid_argument("kappa: grid must be non-empty");
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw std::invalid_argument("kappa: alpha must lie in (1, 2), got " + std::to_string(alpha));
  }
  check_mesh(h, K_star);
  const RieszStencil stencil(alpha - 2.0, h, K_star);
  const double c = c_alpha(alpha);
  const long R = static_cast<long>(K_star);

  KappaResult result{0.0, std::vector<std::optional<std::size_t>>(grid.size()), 0};
  parallel_for(
      grid.size(),
      [&](std::size_t i) {
        const double x = grid[i];
        std::vector<double> pot(static_cast<std::size_t>(2 * R + 1)), der(pot.size());
        try {
          for (long k = -R; k <= R; ++k) {
            const double y = x - static_cast<double>(k) * h;
            pot[static_cast<std::size_t>(R + k)] = target.potential(y);
            der[static_cast<std::size_t>(R + k)] = target.derivative(y);
          }
          const double b_ref = detail::factored_drift(stencil, K_star, pot, der, x);
          const double e_hat = std::abs(-c * der[static_cast<std::size_t>(R)] - b_ref);
          std::size_t best_k = 1;
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t K = 1; K <= K_star; ++K) {
            const double e = std::abs(detail::factored_drift(stencil, K, pot, der, x) - b_ref);
            const double gap = std::abs(e - e_hat);
            if (gap < best) {
              best = gap;
              best_k = K;
            }
          }
          result.per_point[i] = best_k;
        } catch (const DriftOverflowError& err) {
          log::warn(std::string("kappa: skipping grid point: ") + err.what());
        } catch (const RieszEvaluationError& err) {
          log::warn(std::string("kappa: skipping grid point: ") + err.what());
        }
      },
      jobs);

  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& k : result.per_point) {
    if (k) {
      sum += static_cast<double>(*k);
      ++used;
    }
  }
  result.skipped = grid.size() - used;
  if (used == 0) throw std::runtime_error("kappa: every grid point failed");
  result.kappa_hat = sum / static_cast<double>(used);
  return result;
}

}  // namespace flmc
