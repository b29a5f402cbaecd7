#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "frob/datasets.hpp"

using namespace frob;

namespace {

std::string temp_file(const std::string& name, const std::string& contents = {}) {
  auto path = (std::filesystem::temp_directory_path() / name).string();
  if (!contents.empty()) std::ofstream(path) << contents;
  return path;
}

DatasetSpec ring_spec(std::size_t n, double r_in, double r_out) {
  DatasetSpec s;
  s.kind = DatasetKind::ring;
  s.size = n;
  s.seed = 4;
  s.r_inner = r_in;
  s.r_outer = r_out;
  return s;
}

}  // namespace

TEST(GaussianMixture, ClusterMeansAndLabels) {
  DatasetSpec s;
  s.size = 3000;
  s.seed = 9;
  s.scale = 0.1;
  s.means = {{0, 1}, {2, -1}, {-3, 0}};
  auto data = gen_gaussian_mixture(s);
  ASSERT_EQ(data.size(), 3000u);
  for (int c = 0; c < 3; ++c) {
    double mx = 0, my = 0;
    int count = 0;
    for (std::size_t r = 0; r < data.size(); ++r)
      if (data.labels[r] == c) {
        mx += data.inputs(r, 0);
        my += data.inputs(r, 1);
        ++count;
      }
    EXPECT_EQ(count, 1000);
    // Standard error is 0.1 / sqrt(1000) ~ 0.003.
    EXPECT_NEAR(mx / count, s.means[c][0], 0.015);
    EXPECT_NEAR(my / count, s.means[c][1], 0.015);
  }
}

TEST(GaussianMixture, DeterministicPerSeed) {
  DatasetSpec s;
  s.size = 50;
  s.seed = 1;
  s.means = {{0, 0}, {1, 1}};
  auto a = gen_gaussian_mixture(s);
  EXPECT_EQ(a.inputs, gen_gaussian_mixture(s).inputs);
  s.seed = 2;
  EXPECT_NE(a.inputs, gen_gaussian_mixture(s).inputs);
}

TEST(GaussianMixture, UnevenSizesFavourFirstComponents) {
  DatasetSpec s;
  s.size = 7;
  s.means = {{0, 0}, {1, 1}, {2, 2}};
  auto d = gen_gaussian_mixture(s);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 0, 0, 1, 1, 2, 2}));
}

TEST(GaussianMixture, MeanWidthMustMatchDimension) {
  DatasetSpec s;
  s.means = {{0, 0, 0}};
  EXPECT_THROW(gen_gaussian_mixture(s), std::invalid_argument);
}

TEST(Ring, RadiiStayInsideAnnulus) {
  auto pool = gen_ring(ring_spec(2000, 0.8, 1.0));
  for (std::size_t r = 0; r < pool.size(); ++r) {
    const double rad = std::hypot(pool.inputs(r, 0), pool.inputs(r, 1));
    EXPECT_GE(rad, 0.8 - 1e-12);
    EXPECT_LE(rad, 1.0 + 1e-12);
  }
}

TEST(Ring, EqualRadiiGiveACircle) {
  auto pool = gen_ring(ring_spec(100, 0.5, 0.5));
  for (std::size_t r = 0; r < pool.size(); ++r)
    EXPECT_NEAR(std::hypot(pool.inputs(r, 0), pool.inputs(r, 1)), 0.5, 1e-15);
}

TEST(Ring, AnglesAreUniform) {
  auto pool = gen_ring(ring_spec(8000, 0.8, 1.0));
  std::vector<double> bins(8, 0.0);
  for (std::size_t r = 0; r < pool.size(); ++r) {
    double a = std::atan2(pool.inputs(r, 1), pool.inputs(r, 0)) + std::numbers::pi;
    ++bins[std::min<std::size_t>(7, static_cast<std::size_t>(a / (2 * std::numbers::pi) * 8))];
  }
  double chi2 = 0.0;
  for (double b : bins) chi2 += (b - 1000.0) * (b - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 24.32);  // 7 dof, p = 0.001
}

TEST(Ring, HigherDimensionUsesUnitDirections) {
  auto s = ring_spec(200, 1.0, 1.0);
  s.dimension = 5;
  auto pool = gen_ring(s);
  for (std::size_t r = 0; r < pool.size(); ++r) {
    double n = 0.0;
    for (double v : pool.inputs.row(r)) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  }
}

TEST(Ring, InvertedRadiiRejected) {
  EXPECT_THROW(gen_ring(ring_spec(10, 1.0, 0.5)), std::invalid_argument);
}

TEST(UniformNoise, BoxAndMean) {
  DatasetSpec s;
  s.kind = DatasetKind::uniform_noise;
  s.size = 20000;
  s.seed = 3;
  s.box_lo = 1.0;
  s.box_hi = 3.0;
  auto pool = gen_uniform_noise(s);
  double sum = 0.0;
  for (double v : pool.inputs.values) {
    EXPECT_GE(v, 1.0);
    EXPECT_LT(v, 3.0);
    sum += v;
  }
  EXPECT_NEAR(sum / pool.inputs.values.size(), 2.0, 0.02 * 2.0);
}

TEST(LowFrequencyNoise, ZeroAmplitudeCopiesNormals) {
  LabeledBatch normals{Matrix(2, 3, {1, 2, 3, 4, 5, 6}), {0, 0}};
  DatasetSpec s;
  s.kind = DatasetKind::low_frequency_noise;
  s.dimension = 3;
  s.size = 5;
  s.amplitude = 0.0;
  auto pool = gen_low_frequency_noise(s, normals);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(pool.inputs(r, j), normals.inputs(r % 2, j));
}

TEST(LowFrequencyNoise, FullWindowGivesConstantOffset) {
  LabeledBatch normals{Matrix(1, 4, {0, 0, 0, 0}), {0}};
  DatasetSpec s;
  s.kind = DatasetKind::low_frequency_noise;
  s.dimension = 4;
  s.size = 20;
  s.window = 4;
  s.amplitude = 1.0;
  auto pool = gen_low_frequency_noise(s, normals);
  for (std::size_t r = 0; r < pool.size(); ++r)
    for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(pool.inputs(r, j), pool.inputs(r, 0), 1e-15);
}

TEST(LowFrequencyNoise, SmoothingHalvesVarianceAndCorrelatesNeighbours) {
  const std::size_t d = 8, n = 20000;
  LabeledBatch normals{Matrix(1, d), {0}};
  DatasetSpec s;
  s.kind = DatasetKind::low_frequency_noise;
  s.dimension = d;
  s.size = n;
  s.window = 2;
  s.amplitude = 1.0;
  auto pool = gen_low_frequency_noise(s, normals);
  double var = 0.0, lag1 = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) {
      var += pool.inputs(r, j) * pool.inputs(r, j);
      lag1 += pool.inputs(r, j) * pool.inputs(r, (j + 1) % d);
    }
  var /= static_cast<double>(n * d);
  lag1 /= static_cast<double>(n * d);
  // Average of two unit normals: variance 1/2, neighbour covariance 1/4.
  EXPECT_NEAR(var, 0.5, 0.02);
  EXPECT_NEAR(lag1, 0.25, 0.02);
}

TEST(LowFrequencyNoise, WindowLargerThanDimensionRejected) {
  DatasetSpec s;
  s.kind = DatasetKind::low_frequency_noise;
  s.dimension = 2;
  s.window = 3;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(FewShots, SizesAndDeterminism) {
  OutlierPool pool{Matrix(10, 1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), PoolSource::outlier_dataset};
  EXPECT_TRUE(sample_few_shots(pool, 0, 1).empty());
  auto all = sample_few_shots(pool, 10, 1);
  auto sorted = all.inputs.values;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, pool.inputs.values);
  EXPECT_EQ(sample_few_shots(pool, 4, 7).inputs, sample_few_shots(pool, 4, 7).inputs);
  auto four = sample_few_shots(pool, 4, 7).inputs.values;
  std::sort(four.begin(), four.end());
  EXPECT_EQ(std::adjacent_find(four.begin(), four.end()), four.end());
  EXPECT_THROW(sample_few_shots(pool, 11, 1), std::invalid_argument);
}

TEST(Csv, LabeledRoundTrip) {
  LabeledBatch batch{Matrix(2, 2, {0.1, -2.5e-7, 1.0 / 3.0, 4}), {1, 0}};
  auto path = temp_file("frob_ds_labeled.csv");
  save_csv(batch, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x0,x1,label");
  auto back = std::get<LabeledBatch>(load_csv(path));
  EXPECT_EQ(back.inputs, batch.inputs);
  EXPECT_EQ(back.labels, batch.labels);
  std::filesystem::remove(path);
}

TEST(Csv, UnlabeledRoundTrip) {
  OutlierPool pool{Matrix(3, 1, {1, 2, 3}), PoolSource::outlier_dataset};
  auto path = temp_file("frob_ds_pool.csv");
  save_csv(pool, path);
  EXPECT_EQ(std::get<OutlierPool>(load_csv(path)).inputs, pool.inputs);
  std::filesystem::remove(path);
}

TEST(Csv, RaggedLineIsReportedByNumber) {
  auto path = temp_file("frob_ds_ragged.csv", "a,b\n1,2\n3,4\n5,6\n7\n");
  try {
    load_csv(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(Csv, NonNumericFieldRejected) {
  auto path = temp_file("frob_ds_bad.csv", "a,b\n1,x\n");
  EXPECT_THROW(load_csv(path), DataError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_csv("/nonexistent/frob.csv"), DataError);
}
