#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "flmc/riesz.hpp"
#include "flmc/targets.hpp"

namespace flmc {

/// Truncated centered-difference drift b~_{h,K}.
struct FullCentered {
  double h;
  std::size_t K;
};
/// One-term drift b^ = -c_alpha grad U.
struct Simplified {};
/// High-radius truncated drift b* = b~_{h,K*}, used as the accuracy reference.
struct Reference {
  double h;
  std::size_t K_star;
};

struct DriftSpec {
  std::variant<FullCentered, Simplified, Reference> variant;
  double alpha;

  /// Throws std::invalid_argument unless alpha in (1, 2] and mesh parameters are positive.
  void validate() const;
};

/// exp(l*) left the double range while evaluating the factored drift.
class DriftOverflowError : public std::runtime_error {
 public:
  DriftOverflowError(double x, double ell_star, int axis = -1);
  double x() const { return x_; }
  double ell_star() const { return ell_star_; }
  /// Coordinate along which the partial drift was evaluated; -1 for 1-D targets.
  int axis() const { return axis_; }

 private:
  double x_;
  double ell_star_;
  int axis_;
};

/// r(x) has no value where grad U vanishes.
class UndefinedDiagnosticError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluates b~_{h,K} for a fixed (alpha, h, K) with a precomputed stencil.
///
/// The sum h^{-gamma} sum_k g_k [-U'(x-kh)] exp(l_k), l_k = U(x) - U(x-kh), is computed as
/// exp(l*) h^{-gamma} sum_k g_k [-U'(x-kh)] exp(l_k - l*), l* = max l_k over nodes with g_k != 0.
/// Signed terms are added in ascending magnitude.
class FullDrift {
 public:
  FullDrift(double alpha, double h, std::size_t K);

  double alpha() const { return stencil_.gamma() + 2.0; }
  const RieszStencil& stencil() const { return stencil_; }

  /// 1-D drift at x.
  double operator()(const Target& target, double x) const;
  /// Per-coordinate drift: component d uses the cross-section x - k h e_d.
  void operator()(const Target& target, std::span<const double> x, std::span<double> out) const;

 private:
  RieszStencil stencil_;
};

double full_drift(const Target& target, double x, const FullCentered& spec, double alpha);
std::vector<double> full_drift_multi(const Target& target, std::span<const double> x, const FullCentered& spec,
                                     double alpha);
/// -c_alpha grad U(x).
std::vector<double> simplified_drift(const Target& target, std::span<const double> x, double alpha);
void simplified_drift(const Target& target, std::span<const double> x, double alpha, std::span<double> out);

/// |sum_{0<|k|<=K_x} g_k f(x-kh) / (g_0 f(x)) + 1|^{1/gamma}, f = -phi U', gamma = alpha - 2.
/// alpha must lie in (1, 2); throws UndefinedDiagnosticError where U'(x) = 0.
double r_diagnostic(const Target& target, double x, double alpha, double h, std::size_t K_x);

struct KappaResult {
  double kappa_hat;
  /// argmin_K |e(x,K) - e^(x)| per grid point; empty where the point was skipped.
  std::vector<std::optional<std::size_t>> per_point;
  std::size_t skipped;
};

/// Grid-averaged equivalent radius of the simplified drift against b* = b~_{h,K*}.
/// Ties in the argmin go to the smallest K. Grid points whose drift evaluation fails are
/// skipped with a warning; throws if every point fails.
KappaResult kappa(const Target& target, double alpha, double h, std::size_t K_star, std::span<const double> grid,
                  unsigned jobs = 1);

namespace detail {

/// Factored drift from tabulated nodes. potentials[R + k] = U(x - k h) and
/// derivatives[R + k] = dU(x - k h) for k in [-R, R], R >= K = window radius.
double factored_drift(const RieszStencil& stencil, std::size_t K, std::span<const double> potentials,
                      std::span<const double> derivatives, double x, int axis = -1);

}  // namespace detail

}  // namespace flmc
