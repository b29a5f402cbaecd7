// Randomized invariants. Each property draws its cases from a seeded Rng so
// failures are reproducible from the printed case index.
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "frob/datasets.hpp"
#include "frob/scoring.hpp"

using namespace frob;

namespace {

constexpr int kCases = 200;

std::vector<double> draw_scores(Rng& rng, std::size_t n, bool coarse) {
  std::vector<double> v(n);
  for (auto& x : v) x = coarse ? std::round(rng.uniform() * 5) / 5 : rng.uniform();
  return v;
}

MlpClassifier draw_model(Rng& rng) {
  const std::size_t d = 1 + rng.index(4), k = 2 + rng.index(3);
  std::vector<std::size_t> sizes{d};
  for (std::size_t h = 0, n = 1 + rng.index(2); h < n; ++h) sizes.push_back(2 + rng.index(10));
  sizes.push_back(k);
  MlpClassifier model(rng.next_u64(), sizes, rng.index(2) ? Activation::relu : Activation::tanh);
  for (auto& l : model.net().layers())
    for (auto& b : l.bias.mutable_data()) b = rng.uniform(-1, 1);
  return model;
}

}  // namespace

TEST(Property, AurocComplementsUnderSwap) {
  Rng rng(101);
  for (int i = 0; i < kCases; ++i) {
    auto a = draw_scores(rng, 1 + rng.index(30), i % 2);
    auto b = draw_scores(rng, 1 + rng.index(30), i % 2);
    EXPECT_NEAR(auroc(a, b) + auroc(b, a), 1.0, 1e-12) << "case " << i;
  }
}

TEST(Property, AurocInvariantUnderMonotoneMap) {
  Rng rng(102);
  for (int i = 0; i < kCases; ++i) {
    auto a = draw_scores(rng, 1 + rng.index(30), true);
    auto b = draw_scores(rng, 1 + rng.index(30), true);
    auto fa = a, fb = b;
    for (auto& x : fa) x = std::exp(3 * x) - 2;
    for (auto& x : fb) x = std::exp(3 * x) - 2;
    EXPECT_EQ(auroc(a, b), auroc(fa, fb)) << "case " << i;
  }
}

TEST(Property, AurocInvariantUnderPermutation) {
  Rng rng(103);
  for (int i = 0; i < kCases; ++i) {
    auto a = draw_scores(rng, 2 + rng.index(30), true);
    auto b = draw_scores(rng, 2 + rng.index(30), true);
    const double before = auroc(a, b);
    rng.shuffle(a);
    rng.shuffle(b);
    EXPECT_EQ(auroc(a, b), before) << "case " << i;
  }
}

TEST(Property, MaxSoftmaxBetweenOneOverKAndOne) {
  Rng rng(104);
  for (int i = 0; i < kCases; ++i) {
    std::vector<double> logits(2 + rng.index(6));
    for (auto& l : logits) l = rng.uniform(-30, 30);
    const double s = max_softmax_of(logits);
    EXPECT_GE(s, 1.0 / logits.size() - 1e-15);
    EXPECT_LE(s, 1.0);
    // Shifting every logit leaves the score unchanged.
    auto shifted = logits;
    for (auto& l : shifted) l += 7.25;
    EXPECT_NEAR(max_softmax_of(shifted), s, 1e-12);
  }
}

TEST(Property, CertifiedBoundDominatesEveryPointInTheBall) {
  Rng rng(105);
  for (int i = 0; i < 60; ++i) {
    auto model = draw_model(rng);
    const std::size_t d = model.net().input_dim();
    std::vector<double> x(d);
    for (auto& v : x) v = rng.uniform(-2, 2);
    const double eps = rng.uniform(0.0, 0.2);
    const double cert = certified_max_confidence(ibp_logit_bounds(model, x, eps));
    for (int s = 0; s < 50; ++s) {
      std::vector<double> p(x);
      for (auto& v : p) v += rng.uniform(-eps, eps);
      EXPECT_LE(anomaly_score(model, p), cert) << "case " << i;
    }
  }
}

TEST(Property, IbpBoundsShrinkWithEpsilon) {
  Rng rng(106);
  for (int i = 0; i < 60; ++i) {
    auto model = draw_model(rng);
    std::vector<double> x(model.net().input_dim());
    for (auto& v : x) v = rng.uniform(-1, 1);
    auto wide = ibp_logit_bounds(model, x, 0.2);
    auto narrow = ibp_logit_bounds(model, x, 0.05);
    for (std::size_t k = 0; k < wide.size(); ++k) {
      EXPECT_LE(wide[k].lo, narrow[k].lo) << "case " << i;
      EXPECT_GE(wide[k].hi, narrow[k].hi) << "case " << i;
    }
  }
}

TEST(Property, CalibratedThresholdMeetsTarget) {
  Rng rng(107);
  for (int i = 0; i < kCases; ++i) {
    auto s = draw_scores(rng, 1 + rng.index(50), i % 3 == 0);
    const double target = rng.uniform(0.01, 1.0);
    const double tau = calibrate_threshold(s, target);
    std::size_t kept = 0;
    for (double v : s) kept += classify_with_threshold(v, tau) == Decision::in_distribution;
    EXPECT_GE(static_cast<double>(kept), target * s.size() - 1e-9) << "case " << i;
  }
}

TEST(Property, FewShotsAreDistinctPoolRows) {
  Rng rng(108);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 1 + rng.index(40);
    OutlierPool pool{Matrix(n, 1), PoolSource::outlier_dataset};
    for (std::size_t r = 0; r < n; ++r) pool.inputs(r, 0) = static_cast<double>(r);
    const std::size_t k = rng.index(n + 1);
    auto picked = sample_few_shots(pool, k, rng.next_u64()).inputs.values;
    std::sort(picked.begin(), picked.end());
    EXPECT_EQ(picked.size(), k);
    EXPECT_EQ(std::adjacent_find(picked.begin(), picked.end()), picked.end()) << "case " << i;
    for (double v : picked) EXPECT_LT(v, static_cast<double>(n));
  }
}
