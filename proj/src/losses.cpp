#include "o2s/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "o2s/error.hpp"

namespace o2s {
namespace {

template <class Real>
Real dot(std::span<const double> a, std::span<const double> b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<Real>(a[i]) * static_cast<Real>(b[i]);
  return s;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double v) { return std::isfinite(v); });
}

// Per-anchor log-sum-exp terms shared by the loss and its gradient. The
// gradient check instantiates it with long double to keep its finite
// differences clear of double rounding.
template <class Real>
struct AnchorTerms {
  std::vector<Real> logits;  // s_ik = f_i.f_k / t, k != i (entry i unused)
  Real lse_all = 0;
  Real lse_pos = 0;
  bool has_positive = false;
};

template <class Real>
AnchorTerms<Real> anchor_terms(const FeatureBatch& b, std::size_t i) {
  const std::size_t n = b.features.rows();
  AnchorTerms<Real> t;
  t.logits.assign(n, 0);
  Real max_all = -std::numeric_limits<Real>::infinity();
  Real max_pos = max_all;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    const Real s = dot<Real>(b.features.row(i), b.features.row(k)) / static_cast<Real>(b.temperature);
    t.logits[k] = s;
    max_all = std::max(max_all, s);
    if (b.labels[k] == b.labels[i]) {
      max_pos = std::max(max_pos, s);
      t.has_positive = true;
    }
  }
  Real sum_all = 0;
  Real sum_pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    sum_all += std::exp(t.logits[k] - max_all);
    if (b.labels[k] == b.labels[i]) sum_pos += std::exp(t.logits[k] - max_pos);
  }
  t.lse_all = max_all + std::log(sum_all);
  if (t.has_positive) t.lse_pos = max_pos + std::log(sum_pos);
  return t;
}

double anchor_weight(const FeatureBatch& b, NoPositivePolicy policy, std::size_t included) {
  if (included == 0) throw Error(ErrorCode::NoPositivePairs, "no sample shares a label with another");
  const std::size_t denom = policy == NoPositivePolicy::Exclude ? included : b.features.rows();
  return 1.0 / static_cast<double>(denom);
}

std::size_t count_included(const FeatureBatch& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < b.labels.size(); ++i) {
    for (std::size_t j = 0; j < b.labels.size(); ++j) {
      if (j != i && b.labels[j] == b.labels[i]) {
        ++n;
        break;
      }
    }
  }
  return n;
}

}  // namespace

void FeatureBatch::validate() const {
  const std::size_t n = features.rows();
  if (n < 2 || features.cols() < 1) throw Error(ErrorCode::InvalidConfig, "feature batch needs N >= 2 and d >= 1");
  if (labels.size() != n) throw Error(ErrorCode::InvalidConfig, "labels do not match feature rows");
  if (!sources.empty() && sources.size() != n) throw Error(ErrorCode::InvalidConfig, "sources do not match feature rows");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
  if (!all_finite(features)) throw Error(ErrorCode::InvalidConfig, "non-finite feature entries");
}

namespace {

template <class Real>
Real loss_impl(const FeatureBatch& batch, NoPositivePolicy policy) {
  batch.validate();
  const std::size_t n = batch.features.rows();
  const double w = anchor_weight(batch, policy, count_included(batch));
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = anchor_terms<Real>(batch, i);
    if (!t.has_positive) continue;
    total += t.lse_all - t.lse_pos;
  }
  return static_cast<Real>(w) * total;
}

}  // namespace

double contrastive_loss(const FeatureBatch& batch, NoPositivePolicy policy) {
  return loss_impl<double>(batch, policy);
}

Matrix contrastive_grad(const FeatureBatch& batch, NoPositivePolicy policy) {
  batch.validate();
  const std::size_t n = batch.features.rows();
  const std::size_t d = batch.features.cols();
  const double w = anchor_weight(batch, policy, count_included(batch));
  Matrix grad(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = anchor_terms<double>(batch, i);
    if (!t.has_positive) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      // dL/ds_ik = w * (softmax over all - softmax over positives)
      const double p = std::exp(t.logits[k] - t.lse_all);
      const double q = batch.labels[k] == batch.labels[i] ? std::exp(t.logits[k] - t.lse_pos) : 0.0;
      const double g = w * (p - q) / batch.temperature;
      if (g == 0.0) continue;
      auto fi = batch.features.row(i);
      auto fk = batch.features.row(k);
      auto gi = grad.row(i);
      auto gk = grad.row(k);
      for (std::size_t c = 0; c < d; ++c) {
        gi[c] += g * fk[c];
        gk[c] += g * fi[c];
      }
    }
  }
  return grad;
}

double contrastive_grad_check(const FeatureBatch& batch, double h, double floor, NoPositivePolicy policy) {
  const Matrix analytic = contrastive_grad(batch, policy);
  FeatureBatch probe = batch;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.features.data().size(); ++i) {
    double& x = probe.features.data()[i];
    const double saved = x;
    const double xp = saved + h;
    const double xm = saved - h;
    x = xp;
    const long double up = loss_impl<long double>(probe, policy);
    x = xm;
    const long double down = loss_impl<long double>(probe, policy);
    x = saved;
    const double numeric = static_cast<double>((up - down) / (static_cast<long double>(xp) - xm));
    const double a = analytic.data()[i];
    worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
  }
  return worst;
}

void AlignmentBatch::validate() const {
  if (object_features.cols() != text_features.cols()) {
    throw Error(ErrorCode::InvalidConfig, "object and text features differ in dimension");
  }
  if (target.rows() != object_features.rows() || target.cols() != text_features.rows()) {
    throw Error(ErrorCode::InvalidConfig, "target must be N x M");
  }
  for (double v : target.data()) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidConfig, "target entries must be 0 or 1");
  }
  if (!all_finite(object_features) || !all_finite(text_features)) {
    throw Error(ErrorCode::InvalidConfig, "non-finite feature entries");
  }
}

double alignment_loss(const AlignmentBatch& batch) {
  batch.validate();
  const std::size_t n = batch.object_features.rows();
  const std::size_t m = batch.text_features.rows();
  if (n == 0 || m == 0) throw Error(ErrorCode::EmptyInput, "alignment batch is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double x = dot<double>(batch.object_features.row(i), batch.text_features.row(j));
      const double t = batch.target(i, j);
      total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    }
  }
  return total / static_cast<double>(n * m);
}

double localization_loss(const BoxRegressionBatch& batch, const LocalizationWeights& weights) {
  if (batch.predicted.size() != batch.ground_truth.size()) {
    throw Error(ErrorCode::InvalidConfig, "predicted and ground-truth lists differ in length");
  }
  if (batch.predicted.empty()) throw Error(ErrorCode::EmptyInput, "no box pairs");
  double l1 = 0.0;
  double giou_term = 0.0;
  for (std::size_t i = 0; i < batch.predicted.size(); ++i) {
    const Box3& p = batch.predicted[i];
    const Box3& g = batch.ground_truth[i];
    const double diffs[6] = {p.center().x - g.center().x, p.center().y - g.center().y, p.center().z - g.center().z,
                             p.size().x - g.size().x,     p.size().y - g.size().y,     p.size().z - g.size().z};
    double s = 0.0;
    for (double v : diffs) s += std::abs(v);
    l1 += s / 6.0;
    giou_term += 1.0 - giou3d(p, g);
  }
  const double n = static_cast<double>(batch.predicted.size());
  return weights.l1 * l1 / n + weights.giou * giou_term / n;
}

}  // namespace o2s
