#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flmc/targets.hpp"

namespace flmc {

/// One observed matrix entry.
struct MatrixEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Probabilistic matrix factorization posterior with unit-variance Gaussian priors
/// and likelihood: A_il ~ N(0,1), B_lj ~ N(0,1), Y_ij | A,B ~ N(sum_l A_il B_lj, 1).
///
/// Parameters are laid out as x = [A (I x L, row-major), B (L x J, row-major)].
/// The data points are the training entries; N_Y is their count.
class SyntheticMF final : public Target {
 public:
  using Target::gradient;
  using Target::potential;

  /// Draws generating factors and a full I x J matrix from the model with `seed`,
  /// then holds out round(test_fraction * I * J) entries as the test set.
  SyntheticMF(std::size_t rows, std::size_t cols, std::size_t rank, std::uint64_t seed,
              double test_fraction = 0.1);
  /// Builds the posterior from given observations (e.g. re-imported from CSV).
  SyntheticMF(std::size_t rows, std::size_t cols, std::size_t rank, std::vector<MatrixEntry> train,
              std::vector<MatrixEntry> test);

  std::size_t dim() const override { return (rows_ + cols_) * rank_; }
  double potential(std::span<const double> x) const override;
  /// Prior part plus every training entry at unit scale, in index order.
  void gradient(std::span<const double> x, std::span<double> grad) const override;

  std::size_t data_size() const override { return train_.size(); }
  void prior_gradient(std::span<const double> x, std::span<double> grad) const override;
  void accumulate_likelihood_gradient(std::span<const double> x, std::size_t i, double scale,
                                      std::span<double> grad) const override;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t rank() const { return rank_; }
  const std::vector<MatrixEntry>& train() const { return train_; }
  const std::vector<MatrixEntry>& test() const { return test_; }
  /// Factors used to generate the data; empty when constructed from observations.
  const std::vector<double>& generating_parameters() const { return generating_; }

  /// Model prediction sum_l A_il B_lj for parameters x.
  double predict(std::span<const double> x, std::size_t row, std::size_t col) const;
  /// Root mean squared error of `predictions` (aligned with test()) on the held-out entries.
  double test_rmse(std::span<const double> predictions) const;

 private:
  void validate_shape() const;

  std::size_t rows_;
  std::size_t cols_;
  std::size_t rank_;
  std::vector<MatrixEntry> train_;
  std::vector<MatrixEntry> test_;
  std::vector<double> generating_;
};

/// CSV with header `row,col,value`, LF line endings, 17 significant digits.
void write_entries_csv(const std::string& path, const std::vector<MatrixEntry>& entries);
std::vector<MatrixEntry> read_entries_csv(const std::string& path);

}  // namespace flmc
