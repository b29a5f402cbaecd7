#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "frob/models.hpp"

using namespace frob;

namespace {

void set_all(Mlp& net, double value) {
  for (auto& l : net.layers()) {
    for (auto& w : l.weight.mutable_data()) w = value;
    for (auto& b : l.bias.mutable_data()) b = value;
  }
}

}  // namespace

TEST(Init, SameSeedSameParameters) {
  Mlp a(7, {2, 16, 3}, Activation::relu), b(7, {2, 16, 3}, Activation::relu), c(8, {2, 16, 3}, Activation::relu);
  EXPECT_EQ(a.flat_parameters(), b.flat_parameters());
  EXPECT_NE(a.flat_parameters(), c.flat_parameters());
}

TEST(Init, WeightShapesFollowLayerSizes) {
  Mlp net(1, {2, 16, 3}, Activation::relu);
  ASSERT_EQ(net.layers().size(), 2u);
  EXPECT_EQ(net.layers()[0].weight.shape(), (Shape{16, 2}));
  EXPECT_EQ(net.layers()[1].weight.shape(), (Shape{3, 16}));
  EXPECT_EQ(net.layers()[0].bias.shape(), (Shape{16}));
  for (double b : net.layers()[0].bias.data()) EXPECT_EQ(b, 0.0);
}

TEST(Init, WeightMeanIsNearZeroAndScaleBounded) {
  Mlp net(3, {100, 100, 1}, Activation::relu);
  const double scale = std::sqrt(2.0 / 100.0);
  double sum = 0.0;
  for (double w : net.layers()[0].weight.data()) {
    EXPECT_LE(std::abs(w), scale);
    sum += w;
  }
  const double mean = sum / 1e4;
  EXPECT_GT(mean, -0.05 * scale);
  EXPECT_LT(mean, 0.05 * scale);
}

TEST(Init, RejectsDegenerateSizes) {
  EXPECT_THROW(Mlp(1, {2}, Activation::relu), std::invalid_argument);
  EXPECT_THROW(Mlp(1, {2, 0, 3}, Activation::relu), std::invalid_argument);
}

TEST(Forward, ZeroNetworkGivesZeroLogits) {
  MlpClassifier model(1, {3, 8, 4}, Activation::relu);
  set_all(model.net(), 0.0);
  auto logits = model.logits(Matrix(2, 3, {1, 2, 3, -4, 5, 6}));
  for (double v : logits.data()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityLinearLayer) {
  MlpClassifier model(1, {2, 2}, Activation::relu);
  auto w = model.net().layers()[0].weight.mutable_data();
  w[0] = 1;
  w[1] = 0;
  w[2] = 0;
  w[3] = 1;
  EXPECT_EQ(model.logits(std::vector<double>{3, 4}), (std::vector<double>{3, 4}));
}

// Independent straight-line re-evaluation of the network from its raw
// parameter arrays.
TEST(Forward, MatchesStraightLineReevaluation) {
  for (auto act : {Activation::relu, Activation::tanh}) {
    MlpClassifier model(21, {3, 7, 5, 4}, act);
    Rng rng(2);
    for (auto& l : model.net().layers())
      for (auto& b : l.bias.mutable_data()) b = rng.uniform(-1, 1);
    Matrix batch(6, 3);
    for (auto& v : batch.values) v = rng.uniform(-2, 2);
    auto logits = model.logits(batch);
    for (std::size_t r = 0; r < batch.rows; ++r) {
      std::vector<double> h(batch.row(r).begin(), batch.row(r).end());
      const auto& layers = model.net().layers();
      for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& L = layers[li];
        std::vector<double> next(L.weight.rows());
        for (std::size_t o = 0; o < next.size(); ++o) {
          double acc = 0.0;
          for (std::size_t p = 0; p < h.size(); ++p) acc += h[p] * L.weight.at(o, p);
          next[o] = acc + L.bias.data()[o];
          if (li + 1 < layers.size()) next[o] = act == Activation::relu ? std::max(0.0, next[o]) : std::tanh(next[o]);
        }
        h = next;
      }
      for (std::size_t k = 0; k < h.size(); ++k) EXPECT_EQ(logits.at(r, k), h[k]);
      EXPECT_EQ(model.logits(batch.row(r)), h);
    }
  }
}

TEST(Forward, WrongWidthIsAShapeError) {
  MlpClassifier model(1, {3, 4, 2}, Activation::relu);
  EXPECT_THROW(model.logits(Matrix(1, 2)), ShapeError);
  EXPECT_THROW(model.logits(std::vector<double>{1.0}), ShapeError);
}

TEST(Generator, IdentityLayerReturnsLatents) {
  BoundaryGenerator gen(1, {2, 2}, Activation::relu);
  auto w = gen.net().layers()[0].weight.mutable_data();
  w[0] = 1;
  w[1] = 0;
  w[2] = 0;
  w[3] = 1;
  LatentBatch z{Matrix(3, 2, {0.5, -1, 2, 3, -4, 0}), 0};
  EXPECT_EQ(to_matrix(gen.generate(z)), z.values);
}

TEST(Generator, ZeroParametersGiveZeroOutputs) {
  BoundaryGenerator gen(1, {4, 8, 2}, Activation::tanh);
  set_all(gen.net(), 0.0);
  auto out = gen.generate(LatentBatch{Matrix(5, 4, std::vector<double>(20, 1.5)), 0});
  EXPECT_EQ(out.shape(), (Shape{5, 2}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Generator, OutputShape) {
  BoundaryGenerator gen(4, {3, 16, 2}, Activation::relu);
  EXPECT_EQ(gen.generate(LatentBatch{Matrix(5, 3), 0}).shape(), (Shape{5, 2}));
  EXPECT_THROW(gen.generate(LatentBatch{Matrix(5, 2), 0}), ShapeError);
}

TEST(Checkpoint, RoundTripIsExact) {
  Mlp net(99, {3, 5, 2}, Activation::tanh);
  Rng rng(1);
  for (auto& l : net.layers())
    for (auto& b : l.bias.mutable_data()) b = rng.uniform(-1, 1) * 1e-7;
  std::stringstream buf;
  net.save(buf);
  auto back = Mlp::load(buf);
  EXPECT_EQ(back.flat_parameters(), net.flat_parameters());
  EXPECT_EQ(back.layer_sizes(), net.layer_sizes());
  EXPECT_EQ(back.activation(), Activation::tanh);
}

TEST(Checkpoint, CorruptInputIsRejected) {
  std::stringstream bad("frob-mlp 1\nactivation relu\nlayers 2 2 1\nweight 2 0.5 abc\n");
  EXPECT_THROW(Mlp::load(bad), std::runtime_error);
  std::stringstream wrong("not a checkpoint");
  EXPECT_THROW(Mlp::load(wrong), std::runtime_error);
}

TEST(Clone, IsIndependent) {
  Mlp net(5, {2, 3, 2}, Activation::relu);
  auto copy = net.clone();
  copy.layers()[0].weight.mutable_data()[0] += 1.0;
  EXPECT_NE(copy.flat_parameters(), net.flat_parameters());
}

TEST(Format, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    double back = 0;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(back, v);
  }
  double ignored;
  EXPECT_FALSE(parse_double("1.5x", ignored));
  EXPECT_FALSE(parse_double("", ignored));
}
