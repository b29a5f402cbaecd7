#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "frob/losses.hpp"

using namespace frob;

namespace {

Tensor row(std::vector<double> v) {
  const auto n = v.size();
  return Tensor::matrix(1, n, std::move(v));
}

MlpClassifier zero_classifier(std::size_t d, std::size_t k) {
  MlpClassifier model(1, {d, k}, Activation::relu);
  for (auto& w : model.net().layers()[0].weight.mutable_data()) w = 0.0;
  return model;
}

double brute_dispersion(const Matrix& z, const Matrix& o, double delta) {
  double sum = 0.0;
  for (std::size_t a = 0; a < z.rows; ++a)
    for (std::size_t j = 0; j < z.rows; ++j) {
      if (a == j) continue;
      double dz = 0.0, dout = 0.0;
      for (std::size_t c = 0; c < z.cols; ++c) dz += (z(a, c) - z(j, c)) * (z(a, c) - z(j, c));
      for (std::size_t c = 0; c < o.cols; ++c) dout += (o(a, c) - o(j, c)) * (o(a, c) - o(j, c));
      sum += std::sqrt(dz) / (std::sqrt(dout) + delta);
    }
  return sum / static_cast<double>(z.rows * (z.rows - 1));
}

}  // namespace

TEST(CrossEntropy, UniformLogitsGiveLn2) {
  EXPECT_NEAR(cross_entropy_term(row({0, 0}), std::vector<int>{1}).item(), std::log(2.0), 1e-15);
}

TEST(CrossEntropy, SaturatedCorrectLogitIsZero) {
  EXPECT_NEAR(cross_entropy_term(row({1e9, 0}), std::vector<int>{0}).item(), 0.0, 1e-12);
}

TEST(CrossEntropy, ThreeClassValue) {
  const double expected = 3.0 - std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  EXPECT_NEAR(cross_entropy_term(row({1, 2, 3}), std::vector<int>{2}).item(), -expected, 1e-12);
  EXPECT_NEAR(-expected, 0.407606, 1e-6);
}

TEST(CrossEntropy, RejectsOutOfRangeLabel) {
  EXPECT_THROW(cross_entropy_term(row({0, 0}), std::vector<int>{2}), std::exception);
}

TEST(NegativeTraining, UniformTwoClass) {
  EXPECT_NEAR(negative_training_term(row({0, 0})).item(), std::log(2.0), 1e-15);
}

TEST(NegativeTraining, UniformFourClass) {
  EXPECT_NEAR(negative_training_term(row({2, 2, 2, 2})).item(), -std::log(0.75), 1e-12);
  EXPECT_NEAR(-std::log(0.75), 0.287682, 1e-6);
}

TEST(NegativeTraining, ConfidentLogitsGiveLargePenalty) {
  const double p = 1.0 / (1.0 + std::exp(-10.0));
  EXPECT_NEAR(negative_training_term(row({10, 0})).item(), -std::log1p(-p), 1e-9);
  EXPECT_NEAR(-std::log1p(-p), 10.000046, 1e-6);
}

TEST(NegativeTraining, ClampKeepsSaturatedRowsFinite) {
  auto v = negative_training_term(row({1e6, 0})).item();
  EXPECT_NEAR(v, -std::log(1e-12), 1e-9);
}

TEST(ClassifierLoss, LambdaZeroIsCrossEntropy) {
  MlpClassifier model(3, {2, 4, 3}, Activation::tanh);
  LabeledBatch normals{Matrix(3, 2, {0.1, 0.2, -0.3, 0.4, 1, -1}), {0, 1, 2}};
  OutlierPool pool{Matrix(2, 2, {3, 3, -3, 3}), PoolSource::few_shot_oe};
  LossWeights w;
  w.lambda = 0.0;
  const double ce = cross_entropy_term(model.logits(normals.inputs), normals.labels).item();
  EXPECT_EQ(classifier_loss(model, normals, pool, w).item(), ce);
  EXPECT_EQ(classifier_loss(model, normals, OutlierPool{Matrix(0, 2)}, LossWeights{}).item(), ce);
}

TEST(ClassifierLoss, UniformNormalAndNegativeSumToTwoLn2) {
  auto model = zero_classifier(2, 2);
  LabeledBatch normals{Matrix(1, 2, {0.3, -0.2}), {0}};
  OutlierPool pool{Matrix(1, 2, {5, 5}), PoolSource::few_shot_oe};
  EXPECT_NEAR(classifier_loss(model, normals, pool, LossWeights{}).item(), 2.0 * std::log(2.0), 1e-15);
}

TEST(Dispersion, IdentityMapGivesOne) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix z(3, 2);
    for (auto& v : z.values) v = rng.uniform(-3, 3);
    const double value = dispersion_term(to_tensor(z), to_tensor(z), 1e-15).item();
    EXPECT_NEAR(value, 1.0, 1e-12);
    EXPECT_NEAR(value, brute_dispersion(z, z, 1e-15), 1e-12);
  }
}

TEST(Dispersion, MatchesBruteForceForGeneralOutputs) {
  Rng rng(8);
  Matrix z(5, 3), o(5, 2);
  for (auto& v : z.values) v = rng.uniform(-1, 1);
  for (auto& v : o.values) v = rng.uniform(-1, 1);
  EXPECT_NEAR(dispersion_term(to_tensor(z), to_tensor(o), 1e-6).item(), brute_dispersion(z, o, 1e-6), 1e-12);
}

TEST(Dispersion, CollapsedOutputsBlowUp) {
  Matrix z(4, 2, {0, 0, 1, 0, 0, 1, 1, 1});
  Matrix o(4, 2, std::vector<double>(8, 0.7));
  double mean_dist = 0.0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t j = 0; j < 4; ++j)
      if (a != j) mean_dist += std::hypot(z(a, 0) - z(j, 0), z(a, 1) - z(j, 1));
  mean_dist /= 12.0;
  EXPECT_NEAR(dispersion_term(to_tensor(z), to_tensor(o), 1e-6).item(), mean_dist / 1e-6, 1e-3);
}

TEST(Dispersion, NeedsTwoRows) {
  EXPECT_THROW(dispersion_term(row({1, 2}), row({1, 2}), 1e-6), std::invalid_argument);
}

TEST(Dominance, IdenticalLogitsGiveOneOverK) {
  auto l = Tensor::matrix(2, 3, {1, 2, 3, 0, 0, 5});
  EXPECT_NEAR(confidence_dominance_term(l, l).item(), 1.0 / 3.0, 1e-15);
}

TEST(Dominance, SaturatesAtOne) {
  EXPECT_NEAR(confidence_dominance_term(row({10, -10}), row({0, 0})).item(), 1.0, 1e-8);
}

TEST(Dominance, ThreeClassValue) {
  const double expected = std::exp(1.0) / (std::exp(1.0) + 1.0 + std::exp(-1.0));
  EXPECT_NEAR(confidence_dominance_term(row({2, 1, 0}), row({1, 1, 1})).item(), expected, 1e-12);
  EXPECT_NEAR(expected, 0.665241, 1e-6);
}

TEST(Proximity, PointOnReferenceContributesZero) {
  auto ref = Tensor::matrix(2, 2, {0, 0, 1, 1});
  EXPECT_EQ(proximity_term(Tensor::matrix(1, 2, {1, 1}), ref).item(), 0.0);
}

TEST(Proximity, ThreeFourFive) {
  EXPECT_DOUBLE_EQ(proximity_term(row({3, 4}), row({0, 0})).item(), 5.0);
}

TEST(Proximity, MatchesExhaustiveScan) {
  Rng rng(12);
  Matrix g(6, 3), ref(9, 3);
  for (auto& v : g.values) v = rng.uniform(-2, 2);
  for (auto& v : ref.values) v = rng.uniform(-2, 2);
  double expected = 0.0;
  for (std::size_t i = 0; i < g.rows; ++i) {
    double best = 1e300;
    for (std::size_t q = 0; q < ref.rows; ++q) {
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) s += (g(i, c) - ref(q, c)) * (g(i, c) - ref(q, c));
      best = std::min(best, std::sqrt(s));
    }
    expected += best / 6.0;
  }
  EXPECT_NEAR(proximity_term(to_tensor(g), to_tensor(ref)).item(), expected, 1e-12);
}

TEST(GeneratorLoss, WithoutDominanceAndProximityIsDispersion) {
  BoundaryGenerator gen(2, {3, 8, 2}, Activation::tanh);
  MlpClassifier clf(3, {2, 8, 3}, Activation::tanh);
  clf.net().set_trainable(false);
  LatentBatch z{Matrix(4, 3, {0.1, 0.2, 0.3, -1, 0.5, 2, 0.7, -0.7, 0, 1, 1, 1}), 0};
  Matrix reference(5, 2, {0, 0, 1, 1, -1, 0, 0.5, 0.5, 2, -1});
  LossWeights w;
  w.mu = 0.0;
  w.nu = 0.0;
  const double expected = dispersion_term(to_tensor(z.values), gen.generate(z), w.delta).item();
  EXPECT_EQ(generator_loss(gen, clf, z, reference, w, 7).item(), expected);
}

TEST(GeneratorLoss, ClassifierReceivesNoGradient) {
  BoundaryGenerator gen(2, {2, 8, 2}, Activation::tanh);
  MlpClassifier clf(3, {2, 8, 3}, Activation::tanh);
  clf.net().set_trainable(false);
  LatentBatch z{Matrix(3, 2, {0.1, 0.2, -1, 0.5, 0.7, -0.7}), 0};
  Matrix reference(2, 2, {0, 0, 1, 1});
  generator_loss(gen, clf, z, reference, LossWeights{}, 1).backward();
  for (const auto& p : clf.net().parameters()) EXPECT_FALSE(p.has_grad());
  for (const auto& p : gen.net().parameters()) EXPECT_TRUE(p.has_grad());
}

TEST(GeneratorLoss, RejectsTrainableClassifier) {
  BoundaryGenerator gen(2, {2, 4, 2}, Activation::tanh);
  MlpClassifier clf(3, {2, 4, 3}, Activation::tanh);
  LatentBatch z{Matrix(2, 2, {0, 1, 1, 0}), 0};
  EXPECT_THROW(generator_loss(gen, clf, z, Matrix(1, 2), LossWeights{}, 1), std::logic_error);
}

TEST(Weights, ValidationRejectsNegatives) {
  LossWeights w;
  w.mu = -1;
  EXPECT_THROW(w.validate(), std::invalid_argument);
  LossWeights d;
  d.delta = 0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}
