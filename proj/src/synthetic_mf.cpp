#include "flmc/synthetic_mf.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "flmc/stable.hpp"

namespace flmc {

SyntheticMF::SyntheticMF(std::size_t rows, std::size_t cols, std::size_t rank, std::uint64_t seed,
                         double test_fraction)
    : rows_(rows), cols_(cols), rank_(rank) {
  validate_shape();
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("SyntheticMF: test fraction must lie in [0, 1)");
  }
  RandomStream factor_rng(derive_seed(seed, 0));
  RandomStream noise_rng(derive_seed(seed, 1));
  RandomStream split_rng(derive_seed(seed, 2));
  // SaS(1/sqrt 2) at alpha = 2 is N(0, 1).
  const StableNoise unit_normal(2.0, std::numbers::sqrt2 / 2.0);

  generating_.resize(dim());
  fill_sas(unit_normal, generating_, factor_rng);

  std::vector<MatrixEntry> all;
  all.reserve(rows_ * cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      all.push_back({i, j, predict(generating_, i, j) + sample_sas(unit_normal, noise_rng)});
    }
  }

  // Fisher-Yates over entry positions; the first n_test go to the test set.
  std::vector<std::size_t> order(all.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[static_cast<std::size_t>(split_rng.index(k))]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(all.size())));
  std::vector<bool> held_out(all.size(), false);
  for (std::size_t k = 0; k < n_test; ++k) held_out[order[k]] = true;
  for (std::size_t k = 0; k < all.size(); ++k) (held_out[k] ? test_ : train_).push_back(all[k]);
}

SyntheticMF::SyntheticMF(std::size_t rows, std::size_t cols, std::size_t rank, std::vector<MatrixEntry> train,
                         std::vector<MatrixEntry> test)
    : rows_(rows), cols_(cols), rank_(rank), train_(std::move(train)), test_(std::move(test)) {
  validate_shape();
  for (const auto* set : {&train_, &test_}) {
    for (const auto& e : *set) {
      if (e.row >= rows_ || e.col >= cols_) throw std::out_of_range("SyntheticMF: entry outside matrix shape");
    }
  }
}

void SyntheticMF::validate_shape() const {
  if (rows_ == 0 || cols_ == 0 || rank_ == 0) {
    throw std::invalid_argument("SyntheticMF: I, J and L must all be positive");
  }
}

double SyntheticMF::predict(std::span<const double> x, std::size_t row, std::size_t col) const {
  const double* a = x.data() + row * rank_;
  const double* b = x.data() + rows_ * rank_ + col;
  double s = 0.0;
  for (std::size_t l = 0; l < rank_; ++l) s += a[l] * b[l * cols_];
  return s;
}

double SyntheticMF::potential(std::span<const double> x) const {
  double u = 0.0;
  for (double v : x) u += 0.5 * v * v;
  for (const auto& e : train_) {
    const double r = predict(x, e.row, e.col) - e.value;
    u += 0.5 * r * r;
  }
  return u;
}

void SyntheticMF::prior_gradient(std::span<const double> x, std::span<double> grad) const {
  for (std::size_t k = 0; k < x.size(); ++k) grad[k] = x[k];
}

void SyntheticMF::accumulate_likelihood_gradient(std::span<const double> x, std::size_t i, double scale,
                                                 std::span<double> grad) const {
  const auto& e = train_[i];
  const double r = scale * (predict(x, e.row, e.col) - e.value);
  const std::size_t a_off = e.row * rank_;
  const std::size_t b_off = rows_ * rank_ + e.col;
  for (std::size_t l = 0; l < rank_; ++l) {
    const double a = x[a_off + l];
    const double b = x[b_off + l * cols_];
    grad[a_off + l] += r * b;
    grad[b_off + l * cols_] += r * a;
  }
}

void SyntheticMF::gradient(std::span<const double> x, std::span<double> grad) const {
  prior_gradient(x, grad);
  for (std::size_t i = 0; i < train_.size(); ++i) accumulate_likelihood_gradient(x, i, 1.0, grad);
}

double SyntheticMF::test_rmse(std::span<const double> predictions) const {
  if (predictions.size() != test_.size()) throw std::invalid_argument("test_rmse: prediction count mismatch");
  if (test_.empty()) throw std::logic_error("test_rmse: no held-out entries");
  double s = 0.0;
  for (std::size_t k = 0; k < test_.size(); ++k) {
    const double r = predictions[k] - test_[k].value;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(test_.size()));
}

void write_entries_csv(const std::string& path, const std::vector<MatrixEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "row,col,value\n";
  char buf[64];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << e.row << ',' << e.col << ',' << buf << '\n';
  }
}

std::vector<MatrixEntry> read_entries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "row,col,value") {
    throw std::runtime_error(path + ": expected header 'row,col,value'");
  }
  std::vector<MatrixEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string r, c, v;
    if (!std::getline(fields, r, ',') || !std::getline(fields, c, ',') || !std::getline(fields, v)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    }
    entries.push_back({std::stoul(r), std::stoul(c), std::stod(v)});
  }
  return entries;
}

}  // namespace flmc
