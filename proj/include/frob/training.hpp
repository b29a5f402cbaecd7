// Adam, latent sampling, the classifier and generator training loops, and
// the three-phase pipeline: classifier warm-up (A), boundary generator
// training against the frozen classifier (B), and classifier retraining with
// the generated boundary as extra negatives (C).
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "frob/grad.hpp"
#include "frob/losses.hpp"
#include "frob/matrix.hpp"
#include "frob/models.hpp"

namespace frob {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  OptimizerState() = default;
  explicit OptimizerState(AdamConfig c) : config(c) {}
};

/// One bias-corrected Adam update from the grads stored on `params`.
/// Parameters without a grad are treated as having a zero gradient.
inline void adam_step(std::vector<Tensor>& params, OptimizerState& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size())
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size())
      throw ShapeError("adam_step: accumulator shape differs from parameter " + std::to_string(i));
    if (params[i].has_grad())
      for (double g : params[i].grad())
        if (!std::isfinite(g))
          throw TrainingError("adam_step: non-finite gradient in parameter " + std::to_string(i));
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) continue;
    auto values = params[i].mutable_data();
    auto grad = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * grad[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

/// n x latent_dim standard-normal draws (Box-Muller on xoshiro256**).
inline LatentBatch sample_latent(std::uint64_t seed, std::size_t n, std::size_t latent_dim) {
  if (n < 1) throw std::invalid_argument("sample_latent: n must be >= 1");
  Rng rng(seed);
  LatentBatch batch{Matrix(n, latent_dim), seed};
  for (auto& v : batch.values.values) v = rng.normal();
  return batch;
}

enum class Phase { a, b, c };

inline std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::a: return "A";
    case Phase::b: return "B";
    case Phase::c: return "C";
  }
  return "?";
}

struct TrainSchedule {
  std::size_t phase_a_epochs = 60;
  std::size_t phase_b_epochs = 300;  // generator steps, one fresh latent batch each
  std::size_t phase_c_epochs = 60;
  std::size_t normal_batch = 64;      // N
  std::size_t negative_batch = 64;    // M
  std::size_t latent_batch = 64;
  std::size_t proximity_reference = 0;  // Q; 0 means N
  double lr_a = 1e-3;
  double lr_b = 1e-3;
  double lr_c = 1e-3;
  std::uint64_t seed = 1;
  std::size_t alternations = 1;
  std::size_t boundary_pool_size = 0;  // 0: few-shot count when nonzero, else M

  std::size_t reference_size() const { return proximity_reference == 0 ? normal_batch : proximity_reference; }

  void validate() const {
    if (normal_batch < 1) throw std::invalid_argument("schedule.normal_batch must be >= 1");
    if (negative_batch < 1) throw std::invalid_argument("schedule.negative_batch must be >= 1");
    if (phase_b_epochs > 0 && latent_batch < 2) throw std::invalid_argument("schedule.latent_batch must be >= 2");
    for (double lr : {lr_a, lr_b, lr_c})
      if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("schedule learning rates must be > 0");
  }

  std::size_t epochs(Phase p) const {
    return p == Phase::a ? phase_a_epochs : (p == Phase::b ? phase_b_epochs : phase_c_epochs);
  }
  double learning_rate(Phase p) const { return p == Phase::a ? lr_a : (p == Phase::b ? lr_b : lr_c); }
};

namespace detail {

inline std::uint64_t phase_stream(Phase p, std::size_t round, std::size_t epoch, std::uint64_t salt) {
  return (static_cast<std::uint64_t>(p) + 1) << 56 ^ static_cast<std::uint64_t>(round) << 40 ^
         static_cast<std::uint64_t>(epoch) << 8 ^ salt;
}

// M rows split evenly across the non-empty pools, drawn with replacement.
inline OutlierPool draw_negatives(const std::vector<OutlierPool>& pools, std::size_t m, Rng& rng) {
  std::vector<const OutlierPool*> active;
  for (const auto& p : pools)
    if (!p.empty()) active.push_back(&p);
  OutlierPool out{Matrix(0, 0), PoolSource::few_shot_oe};
  if (active.empty()) return out;
  out.inputs = Matrix(0, active.front()->inputs.cols);
  out.source = active.front()->source;
  for (std::size_t j = 0; j < active.size(); ++j) {
    const std::size_t share = m / active.size() + (j < m % active.size() ? 1 : 0);
    for (std::size_t i = 0; i < share; ++i) out.inputs.append_row(active[j]->inputs.row(rng.index(active[j]->size())));
  }
  return out;
}

}  // namespace detail

/// Mini-batch Adam on classifier_loss for the phase's epoch count. Returns
/// the mean loss per epoch. Normal batches are reshuffled every epoch from a
/// seed derived from (schedule.seed, phase, round, epoch); negatives come
/// from an independent stream.
inline std::vector<double> train_classifier(MlpClassifier& model, const LabeledBatch& normals,
                                            const std::vector<OutlierPool>& negatives, const LossWeights& w,
                                            const TrainSchedule& schedule, Phase phase, std::size_t round = 0) {
  if (normals.size() == 0) throw std::invalid_argument("train_classifier: no normal samples");
  normals.validate(model.num_classes());
  w.validate();
  std::vector<double> trace;
  const std::size_t epochs = schedule.epochs(phase);
  if (epochs == 0) return trace;
  model.net().set_trainable(true);
  auto params = model.net().parameters();
  OptimizerState state(AdamConfig{schedule.learning_rate(phase)});
  const std::size_t n = normals.size();
  const std::size_t batch = std::min(schedule.normal_batch, n);
  std::vector<std::size_t> order(n);
  std::size_t batch_index = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(schedule.seed, detail::phase_stream(phase, round, epoch, 1)));
    shuffle_rng.shuffle(order);
    Rng negative_rng(derive_seed(schedule.seed, detail::phase_stream(phase, round, epoch, 2)));
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += batch, ++batch_index) {
      const std::size_t stop = std::min(n, start + batch);
      auto slice = normals.select(std::span<const std::size_t>(order.data() + start, stop - start));
      auto neg = detail::draw_negatives(negatives, schedule.negative_batch, negative_rng);
      for (auto& p : params) p.zero_grad();
      auto loss = classifier_loss(model, slice, neg, w);
      if (!std::isfinite(loss.item()))
        throw TrainingError("phase " + std::string(phase_name(phase)) + ": non-finite classifier loss at batch " +
                            std::to_string(batch_index));
      loss.backward();
      adam_step(params, state);
      total += loss.item();
      ++steps;
    }
    trace.push_back(total / static_cast<double>(steps));
  }
  return trace;
}

/// Adam on generator_loss against a frozen copy of `classifier`; the
/// caller's classifier is never touched. One epoch is one step on a fresh
/// latent batch with a fresh proximity reference of Q normal rows.
inline std::vector<double> train_generator(BoundaryGenerator& generator, const MlpClassifier& classifier,
                                           const Matrix& normals, const LossWeights& w,
                                           const TrainSchedule& schedule, std::size_t round = 0) {
  if (normals.rows == 0) throw std::invalid_argument("train_generator: no normal samples");
  if (schedule.latent_batch < 2) throw std::invalid_argument("train_generator: latent batch must be >= 2");
  w.validate();
  MlpClassifier frozen = classifier.clone();
  frozen.net().set_trainable(false);
  generator.net().set_trainable(true);
  auto params = generator.net().parameters();
  OptimizerState state(AdamConfig{schedule.lr_b});
  const std::size_t q = std::min(schedule.reference_size(), normals.rows);
  std::vector<double> trace;
  std::vector<std::size_t> order(normals.rows);
  for (std::size_t step = 0; step < schedule.phase_b_epochs; ++step) {
    auto latents = sample_latent(derive_seed(schedule.seed, detail::phase_stream(Phase::b, round, step, 3)),
                                 schedule.latent_batch, generator.latent_dim());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng ref_rng(derive_seed(schedule.seed, detail::phase_stream(Phase::b, round, step, 4)));
    for (std::size_t i = 0; i < q; ++i) std::swap(order[i], order[i + ref_rng.index(order.size() - i)]);
    auto reference = normals.select_rows(std::span<const std::size_t>(order.data(), q));
    for (auto& p : params) p.zero_grad();
    auto loss = generator_loss(generator, frozen, latents, reference, w,
                               derive_seed(schedule.seed, detail::phase_stream(Phase::b, round, step, 5)));
    if (!std::isfinite(loss.item()))
      throw TrainingError("phase B: non-finite generator loss at batch " + std::to_string(step));
    loss.backward();
    adam_step(params, state);
    trace.push_back(loss.item());
  }
  return trace;
}

/// Ablation lattice: (i) outlier dataset only, (ii) few-shot outliers,
/// (iii) few-shot outliers plus generated boundary, (iv) all three.
enum class AblationMode { oe_only = 1, few_shot = 2, few_shot_boundary = 3, full = 4 };

inline std::string_view ablation_mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::oe_only: return "i";
    case AblationMode::few_shot: return "ii";
    case AblationMode::few_shot_boundary: return "iii";
    case AblationMode::full: return "iv";
  }
  return "?";
}

inline AblationMode parse_ablation_mode(std::string_view name) {
  if (name == "i" || name == "1") return AblationMode::oe_only;
  if (name == "ii" || name == "2") return AblationMode::few_shot;
  if (name == "iii" || name == "3") return AblationMode::few_shot_boundary;
  if (name == "iv" || name == "4") return AblationMode::full;
  throw std::invalid_argument("unknown ablation mode '" + std::string(name) + "' (expected i, ii, iii or iv)");
}

inline bool uses_boundary(AblationMode m) { return m == AblationMode::few_shot_boundary || m == AblationMode::full; }
inline bool uses_few_shots(AblationMode m) { return m != AblationMode::oe_only; }
inline bool uses_outlier_dataset(AblationMode m) { return m == AblationMode::oe_only || m == AblationMode::full; }

struct NetworkShape {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::relu;
};

struct PipelineConfig {
  LabeledBatch normals;
  OutlierPool few_shots{Matrix(0, 0), PoolSource::few_shot_oe};
  OutlierPool outlier_dataset{Matrix(0, 0), PoolSource::outlier_dataset};
  AblationMode mode = AblationMode::few_shot_boundary;
  LossWeights weights;
  TrainSchedule schedule;
  NetworkShape classifier;
  NetworkShape generator;
  std::size_t latent_dim = 2;
  std::size_t num_classes = 0;  // 0: one more than the largest label

  std::size_t classes() const {
    if (num_classes > 0) return num_classes;
    int top = 0;
    for (int y : normals.labels) top = std::max(top, y);
    return static_cast<std::size_t>(top) + 1;
  }

  void validate() const {
    if (normals.size() == 0) throw std::invalid_argument("pipeline: no normal samples");
    weights.validate();
    schedule.validate();
    if (latent_dim < 1) throw std::invalid_argument("pipeline: latent_dim must be >= 1");
    if (!few_shots.empty() && few_shots.inputs.cols != normals.dim())
      throw std::invalid_argument("pipeline: few-shot pool width differs from normal data");
    if (!outlier_dataset.empty() && outlier_dataset.inputs.cols != normals.dim())
      throw std::invalid_argument("pipeline: outlier dataset width differs from normal data");
    if (mode == AblationMode::full && outlier_dataset.empty())
      throw std::invalid_argument("pipeline: mode iv requires an outlier dataset");
    normals.validate(classes());
  }
};

struct PhaseTrace {
  std::string phase;
  std::vector<double> losses;
};

struct PipelineResult {
  MlpClassifier classifier;
  std::optional<BoundaryGenerator> generator;
  OutlierPool boundary_pool{Matrix(0, 0), PoolSource::generated_boundary};
  std::vector<PhaseTrace> traces;
};

inline std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

/// Boundary samples from fresh latents, tagged generated-boundary.
inline OutlierPool generate_boundary_pool(const BoundaryGenerator& generator, std::size_t size, std::uint64_t seed) {
  OutlierPool pool{Matrix(0, generator.output_dim()), PoolSource::generated_boundary};
  if (size == 0) return pool;
  auto latents = sample_latent(seed, size, generator.latent_dim());
  pool.inputs = to_matrix(generator.generate(latents));
  return pool;
}

namespace detail {

template <class F>
auto run_phase(std::string_view label, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw TrainingError("phase " + std::string(label) + " failed: " + e.what());
  }
}

}  // namespace detail

inline PipelineResult run_frob_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto& s = config.schedule;
  const std::size_t d = config.normals.dim();
  PipelineResult result;
  result.classifier = MlpClassifier(derive_seed(s.seed, 0xc1a55), layer_sizes(d, config.classifier.hidden, config.classes()),
                                    config.classifier.activation);

  std::vector<OutlierPool> negatives;
  if (uses_few_shots(config.mode) && !config.few_shots.empty()) negatives.push_back(config.few_shots);
  if (uses_outlier_dataset(config.mode) && !config.outlier_dataset.empty()) negatives.push_back(config.outlier_dataset);

  auto trace_a = detail::run_phase("A", [&] {
    return train_classifier(result.classifier, config.normals, negatives, config.weights, s, Phase::a);
  });
  result.traces.push_back({"A", std::move(trace_a)});
  if (!uses_boundary(config.mode)) return result;

  result.generator = BoundaryGenerator(derive_seed(s.seed, 0x9e4e),
                                       layer_sizes(config.latent_dim, config.generator.hidden, d),
                                       config.generator.activation);
  std::size_t pool_size = s.boundary_pool_size;
  if (pool_size == 0) pool_size = config.few_shots.empty() ? s.negative_batch : config.few_shots.size();

  for (std::size_t round = 0; round < std::max<std::size_t>(1, s.alternations); ++round) {
    auto trace_b = detail::run_phase("B", [&] {
      return train_generator(*result.generator, result.classifier, config.normals.inputs, config.weights, s, round);
    });
    result.traces.push_back({"B", std::move(trace_b)});

    result.boundary_pool = detail::run_phase("C", [&] {
      return generate_boundary_pool(*result.generator, pool_size,
                                    derive_seed(s.seed, detail::phase_stream(Phase::c, round, 0, 6)));
    });
    auto with_boundary = negatives;
    with_boundary.push_back(result.boundary_pool);
    auto trace_c = detail::run_phase("C", [&] {
      return train_classifier(result.classifier, config.normals, with_boundary, config.weights, s, Phase::c, round);
    });
    result.traces.push_back({"C", std::move(trace_c)});
  }
  return result;
}

}  // namespace frob
