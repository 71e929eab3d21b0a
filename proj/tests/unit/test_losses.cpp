#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "o2s/error.hpp"
#include "o2s/losses.hpp"
#include "oracles.hpp"

using namespace o2s;

namespace {

FeatureBatch batch_of(std::vector<std::vector<double>> rows, std::vector<int> labels, double tau) {
  FeatureBatch b;
  b.features = Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) b.features(i, c) = rows[i][c];
  }
  b.labels = std::move(labels);
  b.temperature = tau;
  return b;
}

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data()) v = std::max(v, std::abs(x));
  return v;
}

}  // namespace

TEST_CASE("contrastive loss fixtures") {
  SUBCASE("two same-class samples give exactly zero") {
    const auto b = batch_of({{0.3, -1.2}, {2.0, 0.7}}, {4, 4}, 1.0);
    CHECK(contrastive_loss(b) == 0.0);
    CHECK(max_abs(contrastive_grad(b)) == 0.0);
  }
  SUBCASE("three samples, one without a positive") {
    const auto b = batch_of({{1}, {1}, {0}}, {0, 0, 1}, 1.0);
    const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(std::abs(contrastive_loss(b) - expected) < 1e-12);
    CHECK(std::abs(contrastive_loss(b) - 0.313262) < 1e-6);
    CHECK(std::abs(static_cast<double>(oracle::contrastive_direct(b)) - expected) < 1e-15);
    // Counting the excluded anchor as zero divides by 3 instead of 2.
    CHECK(std::abs(contrastive_loss(b, NoPositivePolicy::CountAsZero) - expected * 2.0 / 3.0) < 1e-12);
  }
  SUBCASE("all labels distinct") {
    const auto b = batch_of({{1}, {2}, {3}}, {0, 1, 2}, 1.0);
    try {
      contrastive_loss(b);
      FAIL("expected NoPositivePairs");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoPositivePairs);
    }
    CHECK_THROWS_AS(contrastive_grad(b), Error);
  }
  SUBCASE("invalid batches") {
    CHECK_THROWS_AS(contrastive_loss(batch_of({{1}}, {0}, 1.0)), Error);
    CHECK_THROWS_AS(contrastive_loss(batch_of({{1}, {2}}, {0, 0}, 0.0)), Error);
    CHECK_THROWS_AS(contrastive_loss(batch_of({{1}, {NAN}}, {0, 0}, 1.0)), Error);
    CHECK_THROWS_AS(contrastive_loss(batch_of({{1}, {2}}, {0}, 1.0)), Error);
  }
}

TEST_CASE("contrastive loss matches direct high-precision summation") {
  std::mt19937_64 gen(101);
  for (int t = 0; t < 200; ++t) {
    const auto b = oracle::random_batch(gen);
    const double got = contrastive_loss(b);
    REQUIRE(std::abs(got - static_cast<double>(oracle::contrastive_direct(b))) <= 1e-9);
    REQUIRE(got >= 0.0);
    const double zero = contrastive_loss(b, NoPositivePolicy::CountAsZero);
    REQUIRE(std::abs(zero - static_cast<double>(oracle::contrastive_direct(b, true))) <= 1e-9);
  }
}

TEST_CASE("log-sum-exp stays finite where direct exponentials overflow") {
  const auto b = batch_of({{30}, {30}, {-30}}, {0, 0, 1}, 0.05);
  const double v = contrastive_loss(b);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
}

TEST_CASE("contrastive gradient matches central differences") {
  std::mt19937_64 gen(202);
  for (int t = 0; t < 50; ++t) {
    const auto b = oracle::random_batch(gen);
    const Matrix analytic = contrastive_grad(b);
    const Matrix numeric = oracle::finite_difference_grad(b, 1e-5);
    for (std::size_t i = 0; i < analytic.data().size(); ++i) {
      const double a = analytic.data()[i];
      const double n = numeric.data()[i];
      REQUIRE(std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}) <= 1e-5);
    }
    CHECK(contrastive_grad_check(b) <= 1e-5);
  }
}

TEST_CASE("finite differences at a stationary batch shrink as h squared") {
  // Sixteen d = 1 features of equal magnitude form a symmetric configuration
  // whose true gradient vanishes. Central differences then return pure
  // truncation error, so this case is checked by convergence in h instead
  // of by relative error at a single step.
  const double r = 0.985013;
  const std::vector<double> sign = {-1, 1, 1, -1, 1, -1, -1, 1, -1, 1, 1, 1, 1, 1, 1, 1};
  const std::vector<int> labels = {1, 1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 1, 1, 1, 1, 0};
  std::vector<std::vector<double>> rows;
  for (double s : sign) rows.push_back({s * r});
  const auto b = batch_of(rows, labels, 0.07);
  const Matrix g = contrastive_grad(b);
  CHECK(max_abs(g) < 1e-10);
  const double coarse = max_abs(oracle::finite_difference_grad(b, 1e-4));
  const double fine = max_abs(oracle::finite_difference_grad(b, 1e-5));
  CHECK(coarse / fine == doctest::Approx(100.0).epsilon(0.05));
  const Matrix tiny = oracle::finite_difference_grad(b, 1e-7);
  for (std::size_t i = 0; i < g.data().size(); ++i) CHECK(std::abs(tiny.data()[i] - g.data()[i]) < 1e-11);
}

TEST_CASE("anchors without positives still receive gradient") {
  // Row 2 has no positive but appears in the denominators of rows 0 and 1.
  const auto b = batch_of({{0.4, 0.1}, {0.2, -0.3}, {0.5, 0.5}}, {0, 0, 1}, 0.5);
  const Matrix g = contrastive_grad(b);
  const Matrix n = oracle::finite_difference_grad(b, 1e-5);
  CHECK(std::abs(g(2, 0)) > 1e-3);
  CHECK(std::abs(g(2, 0) - n(2, 0)) < 1e-8);
  CHECK(std::abs(g(2, 1) - n(2, 1)) < 1e-8);
}

TEST_CASE("temperature-scale duality, permutation and source invariance") {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> scale(0.25, 4.0);
  for (int t = 0; t < 100; ++t) {
    const auto b = oracle::random_batch(gen);
    const double base = contrastive_loss(b);

    const double c = scale(gen);
    FeatureBatch scaled = b;
    for (double& x : scaled.features.data()) x *= std::sqrt(c);
    FeatureBatch cooler = b;
    cooler.temperature = b.temperature / c;
    REQUIRE(std::abs(contrastive_loss(scaled) - contrastive_loss(cooler)) <= 1e-9);

    std::vector<std::size_t> perm(b.labels.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    FeatureBatch permuted = b;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t k = 0; k < b.features.cols(); ++k) permuted.features(i, k) = b.features(perm[i], k);
      permuted.labels[i] = b.labels[perm[i]];
      permuted.sources[i] = b.sources[perm[i]];
    }
    REQUIRE(std::abs(contrastive_loss(permuted) - base) <= 1e-12);

    FeatureBatch resourced = b;
    std::shuffle(resourced.sources.begin(), resourced.sources.end(), gen);
    REQUIRE(contrastive_loss(resourced) == base);
  }
}

TEST_CASE("alignment loss") {
  SUBCASE("zero logits") {
    AlignmentBatch b{Matrix(3, 2), Matrix(4, 2), Matrix(3, 4)};
    CHECK(alignment_loss(b) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
  SUBCASE("saturated logits") {
    AlignmentBatch b{Matrix(2, 1), Matrix(2, 1), Matrix(2, 2)};
    b.object_features(0, 0) = 100;
    b.object_features(1, 0) = -100;
    b.text_features(0, 0) = 1;
    b.text_features(1, 0) = -1;
    b.target(0, 0) = 1;
    b.target(1, 1) = 1;
    CHECK(alignment_loss(b) < 1e-40);
  }
  SUBCASE("random batches against per-cell evaluation") {
    std::mt19937_64 gen(404);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
      AlignmentBatch b{Matrix(3, 4), Matrix(2, 4), Matrix(3, 2)};
      for (double& x : b.object_features.data()) x = normal(gen);
      for (double& x : b.text_features.data()) x = normal(gen);
      for (double& x : b.target.data()) x = gen() % 2 ? 1.0 : 0.0;
      REQUIRE(std::abs(alignment_loss(b) - static_cast<double>(oracle::alignment_direct(b))) <= 1e-12);
    }
  }
  SUBCASE("shape and value checks") {
    CHECK_THROWS_AS(alignment_loss({Matrix(2, 3), Matrix(2, 2), Matrix(2, 2)}), Error);
    CHECK_THROWS_AS(alignment_loss({Matrix(2, 2), Matrix(2, 2), Matrix(2, 3)}), Error);
    AlignmentBatch b{Matrix(1, 1), Matrix(1, 1), Matrix(1, 1, 0.5)};
    CHECK_THROWS_AS(alignment_loss(b), Error);
  }
}

TEST_CASE("localization loss") {
  const Box3 cube({0.5, 0.5, 0.5}, {1, 1, 1});
  CHECK(localization_loss({{cube}, {cube}}) == 0.0);
  const double shifted = localization_loss({{cube.translated({1, 0, 0})}, {cube}});
  CHECK(shifted == doctest::Approx(5.0 / 6.0 + 2.0).epsilon(1e-15));
  CHECK(localization_loss({{cube.translated({1, 0, 0})}, {cube}}, {1.0, 0.0}) == doctest::Approx(1.0 / 6.0));
  CHECK_THROWS_AS(localization_loss({{}, {}}), Error);
  CHECK_THROWS_AS(localization_loss({{cube}, {}}), Error);

  std::mt19937_64 gen(505);
  for (int t = 0; t < 100; ++t) {
    BoxRegressionBatch b;
    long double direct = 0.0L;
    const int n = 1 + static_cast<int>(gen() % 5);
    for (int i = 0; i < n; ++i) {
      const Box3 p = oracle::random_box(gen, 1.0, false);
      const Box3 g = oracle::random_box(gen, 1.0, false);
      b.predicted.push_back(p);
      b.ground_truth.push_back(g);
      const long double l1 = (std::abs(p.center().x - g.center().x) + std::abs(p.center().y - g.center().y) +
                              std::abs(p.center().z - g.center().z) + std::abs(p.size().x - g.size().x) +
                              std::abs(p.size().y - g.size().y) + std::abs(p.size().z - g.size().z)) /
                             6.0L;
      const Box3 hull = enclosing_box(p, g);
      const double iou = oracle::aabb_iou(p, g);
      const double inter = iou * (p.volume() + g.volume()) / (1.0 + iou);
      const double uni = p.volume() + g.volume() - inter;
      const double giou = iou - (hull.volume() - uni) / hull.volume();
      direct += 5.0L * l1 + 2.0L * (1.0 - giou);
    }
    const double got = localization_loss(b);
    REQUIRE(std::abs(got - static_cast<double>(direct / n)) <= 1e-12);
    REQUIRE(got >= 0.0);
  }
}
