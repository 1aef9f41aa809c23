#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "flmc/oracle.hpp"
#include "flmc/rng.hpp"
#include "flmc/stable.hpp"
#include "flmc/synthetic_mf.hpp"
#include "flmc/targets.hpp"
#include "stats.hpp"

using namespace flmc;

namespace {

// Product form of the double-well potential, kept apart from the expanded polynomial.
double double_well_product(double x) { return (x + 5.0) * (x + 1.0) * (x - 1.02) * (x - 5.0) / 10.0 + 0.5; }

// Central differences of U along each coordinate in `coords`; relative error against grad.
double max_fd_error(const Target& t, std::span<const double> x, const std::vector<std::size_t>& coords) {
  const auto grad = t.gradient(x);
  std::vector<double> y(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t d : coords) {
    const double step = 1e-5 * std::max(1.0, std::abs(x[d]));
    y[d] = x[d] + step;
    const double up = t.potential(y);
    y[d] = x[d] - step;
    const double down = t.potential(y);
    y[d] = x[d];
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - grad[d]) / std::max(1.0, std::abs(grad[d])));
  }
  return worst;
}

std::vector<double> random_point(std::size_t dim, double scale, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> x(dim);
  for (auto& v : x) v = n(gen);
  return x;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("double-well values") {
  CHECK(double_well(1.02) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(double_well(-1.0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(double_well_grad(0.0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(double_well(7.0) > double_well(5.0));
  CHECK(double_well(-7.0) > double_well(-5.0));
  for (double x = -7.0; x <= 7.0; x += 0.37) {
    CHECK(double_well(x) == doctest::Approx(double_well_product(x)).epsilon(1e-12));
  }
}

TEST_CASE("double-well has two asymmetric wells in [-6, 6]") {
  std::vector<double> minima;
  const double step = 1e-3;
  for (double x = -6.0; x < 6.0; x += step) {
    if (double_well_grad(x) < 0.0 && double_well_grad(x + step) >= 0.0) minima.push_back(x);
  }
  REQUIRE(minima.size() == 2);
  CHECK(minima[0] > -5.0);
  CHECK(minima[0] < -1.0);
  CHECK(minima[1] > 1.02);
  CHECK(minima[1] < 5.0);
  CHECK(std::abs(double_well(minima[0]) - double_well(minima[1])) > 0.01);
}

TEST_CASE("gradients match finite differences") {
  std::mt19937_64 gen(17);
  SUBCASE("double-well") {
    const DoubleWellTarget t;
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> x{u(gen)};
      CHECK(max_fd_error(t, x, {0}) < 1e-5);
      CHECK(t.derivative(x[0]) == t.gradient(x)[0]);
    }
  }
  SUBCASE("gaussian") {
    const GaussianTarget t({0.5, -1.0, 2.0}, 0.7);
    for (int i = 0; i < 100; ++i) CHECK(max_fd_error(t, random_point(3, 2.0, gen), {0, 1, 2}) < 1e-5);
  }
  SUBCASE("separable") {
    const SeparableTarget t({std::make_shared<DoubleWellTarget>(), gaussian_target({1.0}, 2.0)});
    for (int i = 0; i < 100; ++i) CHECK(max_fd_error(t, random_point(2, 2.0, gen), {0, 1}) < 1e-5);
  }
  SUBCASE("synthetic MF") {
    const SyntheticMF t(50, 40, 5, 3);
    std::uniform_int_distribution<std::size_t> pick(0, t.dim() - 1);
    for (int i = 0; i < 100; ++i) {
      std::vector<std::size_t> coords;
      for (int c = 0; c < 10; ++c) coords.push_back(pick(gen));
      CHECK(max_fd_error(t, random_point(t.dim(), 1.0, gen), coords) < 1e-5);
    }
  }
}

TEST_CASE("one-dimensional targets are normalizable") {
  const DoubleWellTarget dw;
  CHECK(quadrature_expectation(dw, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-9));
  const GaussianTarget g({0.0}, 1.0);
  CHECK(quadrature_expectation(g, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gaussian target") {
  const auto t = gaussian_target({0.0}, 1.0);
  CHECK(t->potential(0.0) == 0.0);
  CHECK(t->derivative(0.0) == 0.0);
  CHECK(t->derivative(2.0) == 2.0);
  CHECK(std::abs(quadrature_expectation(*t, [](double x) { return x; })) < 1e-8);
  CHECK_THROWS_AS(gaussian_target({0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_target({0.0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_target({}, 1.0), std::invalid_argument);
}

TEST_CASE("scalar helpers need a one-dimensional target") {
  const GaussianTarget t({0.0, 0.0}, 1.0);
  CHECK_THROWS_AS(t.potential(1.0), std::invalid_argument);
  CHECK_THROWS_AS(t.derivative(1.0), std::invalid_argument);
}

TEST_CASE("separable target sums its components") {
  auto dw = std::make_shared<DoubleWellTarget>();
  auto g = gaussian_target({1.0}, 2.0);
  const SeparableTarget t({dw, g});
  const std::vector<double> x{0.3, -0.4};
  CHECK(t.potential(x) == dw->potential(0.3) + g->potential(-0.4));
  const auto grad = t.gradient(x);
  CHECK(grad[0] == dw->derivative(0.3));
  CHECK(grad[1] == g->derivative(-0.4));
  CHECK_THROWS_AS(SeparableTarget({}), std::invalid_argument);
  CHECK_THROWS_AS(SeparableTarget({std::make_shared<GaussianTarget>(std::vector<double>{0.0, 0.0}, 1.0)}),
                  std::invalid_argument);
}

TEST_CASE("synthetic MF construction") {
  const SyntheticMF t(50, 40, 5, 3);
  CHECK(t.dim() == (50 + 40) * 5);
  CHECK(t.test().size() == 200);
  CHECK(t.data_size() == 1800);
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (const auto& e : t.train()) cells.insert({e.row, e.col});
  for (const auto& e : t.test()) cells.insert({e.row, e.col});
  CHECK(cells.size() == 2000);

  const SyntheticMF again(50, 40, 5, 3);
  CHECK(again.train().front().value == t.train().front().value);
  CHECK(again.generating_parameters() == t.generating_parameters());

  CHECK_THROWS_AS(SyntheticMF(0, 4, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticMF(4, 0, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticMF(4, 4, 0, 1), std::invalid_argument);
}

TEST_CASE("synthetic MF posterior geometry") {
  const SyntheticMF t(50, 40, 5, 3);
  std::mt19937_64 gen(5);
  const auto at_truth = t.gradient(t.generating_parameters());
  // Unit observation noise leaves a residual gradient at the generator.
  for (int i = 0; i < 5; ++i) CHECK(norm(at_truth) < 0.25 * norm(t.gradient(random_point(t.dim(), 1.0, gen))));
  const auto x = random_point(t.dim(), 1.0, gen);
  const auto at_random = t.gradient(x);

  std::vector<double> y = x;
  for (std::size_t d = 0; d < y.size(); ++d) y[d] -= 1e-4 * at_random[d];
  CHECK(t.potential(y) < t.potential(x));
}

TEST_CASE("synthetic MF entries round-trip through CSV") {
  const SyntheticMF t(6, 5, 2, 9);
  const auto dir = std::filesystem::temp_directory_path() / "flmc_test_targets";
  std::filesystem::create_directories(dir);
  const auto train = (dir / "train.csv").string(), test = (dir / "test.csv").string();
  write_entries_csv(train, t.train());
  write_entries_csv(test, t.test());
  const SyntheticMF back(6, 5, 2, read_entries_csv(train), read_entries_csv(test));
  CHECK(back.data_size() == t.data_size());
  std::mt19937_64 gen(1);
  const auto x = random_point(t.dim(), 1.0, gen);
  CHECK(back.potential(x) == t.potential(x));
  CHECK(back.gradient(x) == t.gradient(x));
  CHECK(back.generating_parameters().empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("minibatch sampling") {
  RandomStream rng(3);
  const auto b = sample_minibatch(10, 500, rng);
  CHECK(b.size() == 500);
  std::set<std::size_t> distinct(b.indices.begin(), b.indices.end());
  CHECK(distinct.size() == 10);
  for (std::size_t i : b.indices) CHECK(i < 10);
  CHECK_THROWS_AS(sample_minibatch(0, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_minibatch(5, 0, rng), std::invalid_argument);
  const auto all = enumerate_minibatch(4);
  CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("full enumeration reproduces the gradient exactly") {
  const SyntheticMF t(50, 40, 5, 3);
  std::mt19937_64 gen(8);
  const auto x = random_point(t.dim(), 1.0, gen);
  CHECK(sg_gradient(t, x, enumerate_minibatch(t.data_size())) == t.gradient(x));
}

TEST_CASE("minibatch gradients need data and valid indices") {
  const DoubleWellTarget dw;
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(sg_gradient(dw, x, Minibatch{{0}}), std::invalid_argument);
  const SyntheticMF t(4, 3, 1, 1);
  const std::vector<double> y(t.dim(), 0.1);
  CHECK_THROWS_AS(sg_gradient(t, y, Minibatch{}), std::invalid_argument);
  CHECK_THROWS_AS(sg_gradient(t, y, Minibatch{{t.data_size()}}), std::out_of_range);
}

namespace {

struct GradientMoments {
  std::vector<double> mean;
  std::vector<double> se;
  std::vector<double> var;
};

GradientMoments minibatch_moments(const Target& t, std::span<const double> x, std::size_t batch, std::size_t reps,
                                  std::uint64_t seed) {
  RandomStream rng(seed);
  const std::size_t dim = t.dim();
  std::vector<double> s(dim, 0.0), s2(dim, 0.0), g(dim);
  for (std::size_t r = 0; r < reps; ++r) {
    sg_gradient(t, x, sample_minibatch(t.data_size(), batch, rng), g);
    for (std::size_t d = 0; d < dim; ++d) {
      s[d] += g[d];
      s2[d] += g[d] * g[d];
    }
  }
  GradientMoments m{std::vector<double>(dim), std::vector<double>(dim), std::vector<double>(dim)};
  const double n = static_cast<double>(reps);
  for (std::size_t d = 0; d < dim; ++d) {
    m.mean[d] = s[d] / n;
    m.var[d] = (s2[d] - s[d] * s[d] / n) / (n - 1.0);
    m.se[d] = std::sqrt(m.var[d] / n);
  }
  return m;
}

}  // namespace

TEST_CASE("minibatch gradient is unbiased") {
  std::mt19937_64 gen(12);
  SUBCASE("every component within 3 standard errors on a small model") {
    const SyntheticMF t(8, 6, 2, 4);
    const auto x = random_point(t.dim(), 1.0, gen);
    const auto full = t.gradient(x);
    const auto m = minibatch_moments(t, x, std::max<std::size_t>(1, t.data_size() / 10), 10000, 1);
    for (std::size_t d = 0; d < t.dim(); ++d) CHECK(std::abs(m.mean[d] - full[d]) <= 3.0 * m.se[d]);
  }
  SUBCASE("standardized errors are N(0,1)-like on the default model") {
    const SyntheticMF t(50, 40, 5, 3);
    const auto x = random_point(t.dim(), 1.0, gen);
    const auto full = t.gradient(x);
    const auto m = minibatch_moments(t, x, t.data_size() / 10, 10000, 2);
    double z2 = 0.0;
    std::size_t beyond = 0;
    for (std::size_t d = 0; d < t.dim(); ++d) {
      const double z = (m.mean[d] - full[d]) / m.se[d];
      z2 += z * z;
      beyond += std::abs(z) > 3.0;
    }
    CHECK(z2 / static_cast<double>(t.dim()) == doctest::Approx(1.0).epsilon(0.25));
    CHECK(static_cast<double>(beyond) / static_cast<double>(t.dim()) <= 0.02);
  }
}

TEST_CASE("larger minibatches reduce estimator variance") {
  const SyntheticMF t(50, 40, 5, 3);
  std::mt19937_64 gen(13);
  const auto x = random_point(t.dim(), 1.0, gen);
  const auto small = minibatch_moments(t, x, 90, 2000, 3);
  const auto large = minibatch_moments(t, x, 180, 2000, 4);
  CHECK(flmc::testing::median(large.var) < flmc::testing::median(small.var));
}
