// Classifier loss (cross-entropy plus negative training on outliers) and
// generator loss (dispersion, confidence dominance, proximity), exposed
// term by term.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "frob/grad.hpp"
#include "frob/matrix.hpp"
#include "frob/models.hpp"

namespace frob {

struct LossWeights {
  double lambda = 1.0;  // negative training
  double mu = 1.0;      // confidence dominance
  double nu = 1.0;      // proximity
  double delta = 1e-6;  // dispersion denominator guard
  bool dispersion = true;

  void validate() const {
    auto check = [](double v, std::string_view name) {
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("loss weight " + std::string(name) + " must be finite and >= 0");
    };
    check(lambda, "lambda");
    check(mu, "mu");
    check(nu, "nu");
    if (!std::isfinite(delta) || !(delta > 0.0)) throw std::invalid_argument("loss weight delta must be > 0");
  }
};

struct LabeledBatch {
  Matrix inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.rows; }
  std::size_t dim() const { return inputs.cols; }

  void validate(std::size_t num_classes) const {
    if (labels.size() != inputs.rows)
      throw ShapeError("labeled batch has " + std::to_string(inputs.rows) + " rows but " +
                       std::to_string(labels.size()) + " labels");
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
        throw std::out_of_range("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                " outside [0, " + std::to_string(num_classes) + ")");
  }

  LabeledBatch select(std::span<const std::size_t> index) const {
    LabeledBatch out{inputs.select_rows(index), {}};
    out.labels.reserve(index.size());
    for (auto i : index) out.labels.push_back(labels[i]);
    return out;
  }
};

enum class PoolSource { few_shot_oe, generated_boundary, outlier_dataset };

inline std::string_view pool_source_name(PoolSource s) {
  switch (s) {
    case PoolSource::few_shot_oe: return "few-shot-OE";
    case PoolSource::generated_boundary: return "generated-boundary";
    case PoolSource::outlier_dataset: return "outlier-dataset";
  }
  return "unknown";
}

struct OutlierPool {
  Matrix inputs;
  PoolSource source = PoolSource::few_shot_oe;

  std::size_t size() const { return inputs.rows; }
  bool empty() const { return inputs.rows == 0; }
};

/// -(1/N) sum_i log softmax(logits_i)[y_i], via log-sum-exp.
inline Tensor cross_entropy_term(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy_term: logits must be N x K, got " + shape_string(logits.shape()));
  auto log_prob = sub(pick(logits, labels), log_sum_exp(logits, 1));
  return scalar_mul(reduce_mean(log_prob), -1.0);
}

/// Max softmax probability per row, exp(max_k f_k - logsumexp f).
inline Tensor max_softmax(const Tensor& logits) {
  return exp(sub(max(logits, 1), log_sum_exp(logits, 1)));
}

/// -(1/M) sum_m log(1 - p*_m), p*_m the max softmax of row m; 1 - p* is
/// clamped at 1e-12.
inline Tensor negative_training_term(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("negative_training_term: logits must be M x K, got " + shape_string(logits.shape()));
  auto complement = clamp_min(scalar_add(scalar_mul(max_softmax(logits), -1.0), 1.0), 1e-12);
  return scalar_mul(reduce_mean(log(complement)), -1.0);
}

/// Cross-entropy on normals plus lambda times negative training on the pool.
/// An empty pool or lambda == 0 leaves the pure cross-entropy graph.
inline Tensor classifier_loss(const MlpClassifier& model, const LabeledBatch& normals, const OutlierPool& negatives,
                              const LossWeights& w) {
  normals.validate(model.num_classes());
  auto loss = cross_entropy_term(model.logits(normals.inputs), normals.labels);
  if (negatives.empty() || w.lambda == 0.0) return loss;
  if (negatives.inputs.cols != model.input_dim())
    throw ShapeError("outlier pool width " + std::to_string(negatives.inputs.cols) +
                     " does not match classifier input " + std::to_string(model.input_dim()));
  return add(loss, scalar_mul(negative_training_term(model.logits(negatives.inputs)), w.lambda));
}

/// Mean over ordered pairs (a, j), j != a, of
/// ||z_a - z_j|| / (||O(z_a) - O(z_j)|| + delta).
inline Tensor dispersion_term(const Tensor& latents, const Tensor& outputs, double delta) {
  if (latents.rank() != 2 || outputs.rank() != 2 || latents.rows() != outputs.rows())
    throw ShapeError("dispersion_term: latents " + shape_string(latents.shape()) + " and outputs " +
                     shape_string(outputs.shape()) + " must be row-paired");
  const std::size_t n = latents.rows();
  if (n < 2) throw std::invalid_argument("dispersion_term needs at least 2 latent rows, got " + std::to_string(n));
  auto latent_dist = l2_norm_of_difference(latents.detach(), latents.detach());
  // The diagonal has zero latent distance; adding 1 to its denominator keeps
  // the log finite without changing the sum.
  std::vector<double> guard(n * n, delta);
  for (std::size_t i = 0; i < n; ++i) guard[i * n + i] += 1.0;
  auto denom = add(l2_norm_of_difference(outputs, outputs), Tensor::matrix(n, n, std::move(guard)));
  auto ratio = mul(latent_dist, exp(scalar_mul(log(denom), -1.0)));
  return scalar_mul(reduce_sum(ratio), 1.0 / static_cast<double>(n * (n - 1)));
}

/// Mean over rows of max_l softmax(f(O(z)) - f(x))_l.
inline Tensor confidence_dominance_term(const Tensor& generated_logits, const Tensor& reference_logits) {
  if (generated_logits.shape() != reference_logits.shape())
    throw ShapeError("confidence_dominance_term: shapes " + shape_string(generated_logits.shape()) + " and " +
                     shape_string(reference_logits.shape()) + " differ");
  return reduce_mean(max_softmax(sub(generated_logits, reference_logits)));
}

/// Mean over generated rows of the distance to the nearest reference row.
inline Tensor proximity_term(const Tensor& generated, const Tensor& reference) {
  if (reference.rank() != 2 || reference.rows() == 0)
    throw std::invalid_argument("proximity_term: reference set must be non-empty");
  auto nearest = scalar_mul(max(scalar_mul(l2_norm_of_difference(generated, reference), -1.0), 1), -1.0);
  return reduce_mean(nearest);
}

struct GeneratorLossTerms {
  Tensor total;
  Tensor dispersion;
  Tensor dominance;
  Tensor proximity;
  Tensor generated;
};

/// Generator objective against a frozen classifier. Each generated row is
/// compared for dominance with a uniformly drawn reference row; the draw is
/// seeded by pairing_seed.
inline GeneratorLossTerms generator_loss_terms(const BoundaryGenerator& generator, const MlpClassifier& classifier,
                                               const LatentBatch& latents, const Matrix& normal_reference,
                                               const LossWeights& w, std::uint64_t pairing_seed) {
  if (classifier.net().trainable())
    throw std::logic_error("generator_loss: classifier must be frozen (grad tracking disabled)");
  if (generator.output_dim() != classifier.input_dim())
    throw ShapeError("generator output width " + std::to_string(generator.output_dim()) +
                     " does not match classifier input " + std::to_string(classifier.input_dim()));
  if (normal_reference.rows == 0) throw std::invalid_argument("generator_loss: empty normal reference");
  GeneratorLossTerms terms;
  auto z = to_tensor(latents.values);
  terms.generated = generator.generate(z);
  const std::size_t n = latents.size();

  Rng rng(pairing_seed);
  std::vector<std::size_t> pairing(n);
  for (auto& p : pairing) p = rng.index(normal_reference.rows);
  auto reference_logits = classifier.logits(normal_reference.select_rows(pairing));
  terms.dominance = confidence_dominance_term(classifier.logits(terms.generated), reference_logits);
  terms.proximity = proximity_term(terms.generated, to_tensor(normal_reference));

  terms.total = add(scalar_mul(terms.dominance, w.mu), scalar_mul(terms.proximity, w.nu));
  if (w.dispersion) {
    terms.dispersion = dispersion_term(z, terms.generated, w.delta);
    terms.total = add(terms.dispersion, terms.total);
  }
  return terms;
}

inline Tensor generator_loss(const BoundaryGenerator& generator, const MlpClassifier& classifier,
                             const LatentBatch& latents, const Matrix& normal_reference, const LossWeights& w,
                             std::uint64_t pairing_seed) {
  return generator_loss_terms(generator, classifier, latents, normal_reference, w, pairing_seed).total;
}

}  // namespace frob
