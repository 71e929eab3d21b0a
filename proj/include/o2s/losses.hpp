#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "o2s/geometry.hpp"

namespace o2s {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr double kDefaultTemperature = 0.07;

struct FeatureBatch {
  Matrix features;                   // N x d
  std::vector<int> labels;           // N class ids
  std::vector<std::string> sources;  // N dataset tags; never affect the loss
  double temperature = kDefaultTemperature;

  /// Throws InvalidConfig on shape, temperature or finiteness violations.
  void validate() const;
};

/// Anchors without any positive pair: dropped from the mean (default), or
/// kept in the denominator N with a zero contribution.
enum class NoPositivePolicy { Exclude, CountAsZero };

/// Multi-positive category-level contrastive loss:
///   L = -(1/N') sum_i log( sum_{j!=i, y_j=y_i} e^{f_i.f_j/t} / sum_{k!=i} e^{f_i.f_k/t} )
/// evaluated with log-sum-exp. Throws NoPositivePairs when no anchor has a positive.
double contrastive_loss(const FeatureBatch& batch, NoPositivePolicy policy = NoPositivePolicy::Exclude);

/// dL/df for every feature row.
Matrix contrastive_grad(const FeatureBatch& batch, NoPositivePolicy policy = NoPositivePolicy::Exclude);

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all
/// entries, numeric = central differences with step h of the loss evaluated
/// in long double.
double contrastive_grad_check(const FeatureBatch& batch, double h = 1e-5, double floor = 1e-8,
                              NoPositivePolicy policy = NoPositivePolicy::Exclude);

struct AlignmentBatch {
  Matrix object_features;  // N x d
  Matrix text_features;    // M x d
  Matrix target;           // N x M, entries 0 or 1

  void validate() const;
};

/// Mean binary cross-entropy with logits over the N x M cells of P T^T.
double alignment_loss(const AlignmentBatch& batch);

struct BoxRegressionBatch {
  std::vector<Box3> predicted;     // heading 0
  std::vector<Box3> ground_truth;  // heading 0, matched by index
};

struct LocalizationWeights {
  double l1 = 5.0;
  double giou = 2.0;
};

/// l1 * mean_pairs(mean |delta| over center and size) + giou * mean_pairs(1 - GIoU).
double localization_loss(const BoxRegressionBatch& batch, const LocalizationWeights& weights = {});

}  // namespace o2s
