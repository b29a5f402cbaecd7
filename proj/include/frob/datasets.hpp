// Synthetic desk-scale data sources, few-shot subsampling, and CSV I/O.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "frob/losses.hpp"
#include "frob/matrix.hpp"
#include "frob/models.hpp"

namespace frob {

enum class DatasetKind { gaussian_mixture, ring, uniform_noise, low_frequency_noise, csv };

inline std::string_view dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::gaussian_mixture: return "gaussian-mixture";
    case DatasetKind::ring: return "ring";
    case DatasetKind::uniform_noise: return "uniform-noise";
    case DatasetKind::low_frequency_noise: return "low-frequency-noise";
    case DatasetKind::csv: return "csv";
  }
  return "unknown";
}

inline DatasetKind parse_dataset_kind(std::string_view name) {
  for (auto k : {DatasetKind::gaussian_mixture, DatasetKind::ring, DatasetKind::uniform_noise,
                 DatasetKind::low_frequency_noise, DatasetKind::csv})
    if (dataset_kind_name(k) == name) return k;
  throw std::invalid_argument("unknown dataset kind '" + std::string(name) + "'");
}

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  DatasetKind kind = DatasetKind::gaussian_mixture;
  std::size_t dimension = 2;
  std::size_t size = 100;
  std::uint64_t seed = 0;
  // gaussian-mixture
  std::vector<std::vector<double>> means;
  double scale = 0.05;  // per-coordinate standard deviation
  // ring
  std::vector<double> center;
  double r_inner = 0.8;
  double r_outer = 1.0;
  // uniform-noise
  double box_lo = -1.0;
  double box_hi = 1.0;
  // low-frequency-noise
  double amplitude = 0.5;
  std::size_t window = 2;
  // csv
  std::string path;

  void validate() const {
    if (size < 1) throw std::invalid_argument("dataset size must be >= 1");
    if (dimension < 1) throw std::invalid_argument("dataset dimension must be >= 1");
    switch (kind) {
      case DatasetKind::gaussian_mixture:
        if (means.empty()) throw std::invalid_argument("gaussian-mixture needs at least one component mean");
        for (const auto& m : means)
          if (m.size() != dimension) throw std::invalid_argument("gaussian-mixture mean width differs from dimension");
        if (!(scale > 0.0)) throw std::invalid_argument("gaussian-mixture scale must be > 0");
        break;
      case DatasetKind::ring:
        if (!(r_inner >= 0.0 && r_inner <= r_outer))
          throw std::invalid_argument("ring radii must satisfy 0 <= r_inner <= r_outer");
        if (!center.empty() && center.size() != dimension)
          throw std::invalid_argument("ring center width differs from dimension");
        break;
      case DatasetKind::uniform_noise:
        if (!(box_lo < box_hi)) throw std::invalid_argument("uniform-noise box must satisfy box_lo < box_hi");
        break;
      case DatasetKind::low_frequency_noise:
        if (!(amplitude >= 0.0)) throw std::invalid_argument("low-frequency-noise amplitude must be >= 0");
        if (window < 1) throw std::invalid_argument("low-frequency-noise window must be >= 1");
        if (window > dimension) throw std::invalid_argument("low-frequency-noise window larger than dimension");
        break;
      case DatasetKind::csv:
        if (path.empty()) throw std::invalid_argument("csv dataset needs a path");
        break;
    }
  }
};

/// Equal-sized isotropic clusters, label = component index. When size is
/// not a multiple of the component count the first components get one
/// extra point.
inline LabeledBatch gen_gaussian_mixture(const DatasetSpec& spec) {
  if (spec.means.empty()) throw std::invalid_argument("gaussian-mixture needs at least one component mean");
  spec.validate();
  const std::size_t k = spec.means.size();
  Rng rng(spec.seed);
  LabeledBatch out{Matrix(spec.size, spec.dimension), std::vector<int>(spec.size)};
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t count = spec.size / k + (c < spec.size % k ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i, ++row) {
      for (std::size_t j = 0; j < spec.dimension; ++j) out.inputs(row, j) = spec.means[c][j] + spec.scale * rng.normal();
      out.labels[row] = static_cast<int>(c);
    }
  }
  return out;
}

/// Uniform direction, radius uniform in [r_inner, r_outer].
inline OutlierPool gen_ring(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  OutlierPool out{Matrix(spec.size, spec.dimension), PoolSource::outlier_dataset};
  std::vector<double> dir(spec.dimension);
  for (std::size_t r = 0; r < spec.size; ++r) {
    if (spec.dimension == 2) {
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      dir[0] = std::cos(angle);
      dir[1] = std::sin(angle);
    } else {
      double norm = 0.0;
      do {
        norm = 0.0;
        for (auto& v : dir) {
          v = rng.normal();
          norm += v * v;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      for (auto& v : dir) v /= norm;
    }
    const double radius = spec.r_inner == spec.r_outer ? spec.r_inner : rng.uniform(spec.r_inner, spec.r_outer);
    for (std::size_t j = 0; j < spec.dimension; ++j)
      out.inputs(r, j) = (spec.center.empty() ? 0.0 : spec.center[j]) + radius * dir[j];
  }
  return out;
}

inline OutlierPool gen_uniform_noise(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  OutlierPool out{Matrix(spec.size, spec.dimension), PoolSource::outlier_dataset};
  for (auto& v : out.inputs.values) v = rng.uniform(spec.box_lo, spec.box_hi);
  return out;
}

/// Circular moving average of width `window`.
inline std::vector<double> smooth_circular(std::span<const double> noise, std::size_t window) {
  const std::size_t d = noise.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < window; ++t) acc += noise[(j + t) % d];
    out[j] = acc / static_cast<double>(window);
  }
  return out;
}

/// Output row r is normals row (r mod N) plus amplitude times smoothed
/// Gaussian noise.
inline OutlierPool gen_low_frequency_noise(const DatasetSpec& spec, const LabeledBatch& normals) {
  spec.validate();
  if (normals.size() == 0) throw std::invalid_argument("low-frequency-noise needs normal samples");
  if (normals.dim() != spec.dimension) throw std::invalid_argument("low-frequency-noise dimension differs from normals");
  Rng rng(spec.seed);
  const std::size_t d = spec.dimension;
  OutlierPool out{Matrix(spec.size, d), PoolSource::outlier_dataset};
  std::vector<double> noise(d);
  for (std::size_t r = 0; r < spec.size; ++r) {
    for (auto& v : noise) v = rng.normal();
    auto smooth = smooth_circular(noise, spec.window);
    auto base = normals.inputs.row(r % normals.size());
    for (std::size_t j = 0; j < d; ++j) out.inputs(r, j) = base[j] + spec.amplitude * smooth[j];
  }
  return out;
}

/// Uniform subset of n rows without replacement (partial Fisher-Yates).
inline OutlierPool sample_few_shots(const OutlierPool& pool, std::size_t n, std::uint64_t seed) {
  if (n > pool.size())
    throw std::invalid_argument("sample_few_shots: requested " + std::to_string(n) + " from a pool of " +
                                std::to_string(pool.size()));
  OutlierPool out{Matrix(0, pool.inputs.cols), pool.source};
  if (n == 0) return out;
  std::vector<std::size_t> index(pool.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(index[i], index[i + rng.index(index.size() - i)]);
  index.resize(n);
  out.inputs = pool.inputs.select_rows(index);
  return out;
}

/// Either result of load_csv, depending on the presence of a label column.
using CsvData = std::variant<LabeledBatch, OutlierPool>;

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Reads a header-row CSV of decimal floats. A final column named "label"
/// makes the result a LabeledBatch; otherwise it is an OutlierPool.
inline CsvData load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = detail::split_csv_line(line);
  const bool labeled = !header.empty() && detail::trim(header.back()) == "label";
  const std::size_t width = header.size();
  const std::size_t d = labeled ? width - 1 : width;
  if (d == 0) throw DataError(path + ": header has no feature columns");
  Matrix inputs(0, d);
  std::vector<int> labels;
  std::vector<double> row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != width)
      throw DataError(path + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " columns, expected " + std::to_string(width));
    for (std::size_t j = 0; j < d; ++j)
      if (!parse_double(fields[j], row[j]) || !std::isfinite(row[j]))
        throw DataError(path + ": line " + std::to_string(line_no) + " column " + std::to_string(j + 1) +
                        " is not a finite number");
    if (labeled) {
      double label = 0.0;
      if (!parse_double(fields[d], label) || label != std::floor(label) || label < 0.0)
        throw DataError(path + ": line " + std::to_string(line_no) + " has an invalid label");
      labels.push_back(static_cast<int>(label));
    }
    inputs.append_row(row);
  }
  if (labeled) return LabeledBatch{std::move(inputs), std::move(labels)};
  return OutlierPool{std::move(inputs), PoolSource::outlier_dataset};
}

namespace detail {

inline void write_csv(const Matrix& inputs, const std::vector<int>* labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t j = 0; j < inputs.cols; ++j) out << (j ? "," : "") << 'x' << j;
  if (labels) out << ",label";
  out << '\n';
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    for (std::size_t j = 0; j < inputs.cols; ++j) out << (j ? "," : "") << format_double(inputs(r, j));
    if (labels) out << ',' << (*labels)[r];
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace detail

inline void save_csv(const LabeledBatch& batch, const std::string& path) { detail::write_csv(batch.inputs, &batch.labels, path); }
inline void save_csv(const OutlierPool& pool, const std::string& path) { detail::write_csv(pool.inputs, nullptr, path); }

}  // namespace frob
