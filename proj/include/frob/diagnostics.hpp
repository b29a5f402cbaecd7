// Randomized finite-difference audit of every loss component against the
// reverse-mode gradients. Used by the grad-check subcommand and the tests.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "frob/grad.hpp"
#include "frob/losses.hpp"
#include "frob/matrix.hpp"
#include "frob/models.hpp"
#include "frob/training.hpp"

namespace frob {

struct ComponentCheck {
  std::string component;
  GradCheckReport report;
};

struct GradientSuiteReport {
  bool passed = true;
  std::size_t instances = 0;
  double max_abs_discrepancy = 0.0;
  double max_rel_discrepancy = 0.0;
  std::vector<ComponentCheck> worst;  // per component, worst instance
  std::string first_failure;
};

namespace detail {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (auto& v : m.values) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<std::size_t> random_hidden(Rng& rng) {
  std::vector<std::size_t> hidden(1 + rng.index(2));
  for (auto& h : hidden) h = 1 + rng.index(16);
  return hidden;
}

inline double min_pairwise_distance(const Matrix& m) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.rows; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < m.cols; ++c) s += (m(i, c) - m(j, c)) * (m(i, c) - m(j, c));
      best = std::min(best, std::sqrt(s));
    }
  return best;
}

}  // namespace detail

/// One tiny random instance per index: d <= 8, K <= 4, hidden widths <= 16,
/// tanh activations so the losses are smooth at the probed points.
inline GradientSuiteReport run_gradient_suite(std::size_t instances, std::uint64_t seed, double h = 1e-5,
                                              double rel_tol = 1e-4) {
  GradientSuiteReport suite;
  suite.instances = instances;
  const std::vector<std::string> names{"cross_entropy",  "negative_training", "classifier_loss", "dispersion",
                                       "dominance",      "proximity",         "generator_loss"};
  for (const auto& n : names) suite.worst.push_back({n, {}});

  for (std::size_t inst = 0; inst < instances; ++inst) {
    Rng rng(derive_seed(seed, inst));
    const std::size_t d = 1 + rng.index(8);
    const std::size_t k = 2 + rng.index(3);
    const std::size_t n = 2 + rng.index(5);
    const std::size_t m = 1 + rng.index(5);
    const std::size_t latent = 1 + rng.index(4);
    const std::size_t gen_rows = 2 + rng.index(4);

    MlpClassifier classifier(rng.next_u64(), layer_sizes(d, detail::random_hidden(rng), k), Activation::tanh);
    BoundaryGenerator generator(rng.next_u64(), layer_sizes(latent, detail::random_hidden(rng), d), Activation::tanh);
    // Nonzero biases so the checks exercise every parameter.
    for (auto* net : {&classifier.net(), &generator.net()})
      for (auto& layer : net->layers())
        for (auto& b : layer.bias.mutable_data()) b = rng.uniform(-0.5, 0.5);

    LabeledBatch normals{detail::random_matrix(rng, n, d, -2.0, 2.0), std::vector<int>(n)};
    for (auto& y : normals.labels) y = static_cast<int>(rng.index(k));
    OutlierPool pool{detail::random_matrix(rng, m, d, -2.0, 2.0), PoolSource::few_shot_oe};
    // Nearly coincident generated rows make the dispersion ratio so steep
    // that central differences drown in rounding; redraw such latents.
    LatentBatch z{detail::random_matrix(rng, gen_rows, latent, -2.0, 2.0), 0};
    for (int attempt = 0; attempt < 100 && detail::min_pairwise_distance(to_matrix(generator.generate(z))) < 0.05;
         ++attempt)
      z.values = detail::random_matrix(rng, gen_rows, latent, -2.0, 2.0);
    Matrix reference = detail::random_matrix(rng, 1 + rng.index(6), d, -2.0, 2.0);
    LossWeights w;
    w.lambda = rng.uniform(0.1, 2.0);
    w.mu = rng.uniform(0.1, 2.0);
    w.nu = rng.uniform(0.1, 2.0);
    w.delta = 1e-6;
    const std::uint64_t pairing = rng.next_u64();

    MlpClassifier frozen = classifier.clone();
    frozen.net().set_trainable(false);
    auto cparams = classifier.net().parameters();
    auto gparams = generator.net().parameters();

    std::vector<GradCheckReport> reports;
    reports.push_back(grad_check_parameters(
        [&] { return cross_entropy_term(classifier.logits(normals.inputs), normals.labels); }, cparams, h, rel_tol));
    reports.push_back(grad_check_parameters(
        [&] { return negative_training_term(classifier.logits(pool.inputs)); }, cparams, h, rel_tol));
    reports.push_back(grad_check_parameters([&] { return classifier_loss(classifier, normals, pool, w); }, cparams, h,
                                            rel_tol));
    reports.push_back(grad_check_parameters(
        [&] { return dispersion_term(to_tensor(z.values), generator.generate(z), w.delta); }, gparams, h, rel_tol));
    reports.push_back(grad_check_parameters(
        [&] {
          auto generated = generator.generate(z);
          Matrix paired(gen_rows, d);
          for (std::size_t r = 0; r < gen_rows; ++r)
            std::copy_n(reference.row(r % reference.rows).begin(), d, paired.values.begin() + r * d);
          return confidence_dominance_term(frozen.logits(generated), frozen.logits(paired));
        },
        gparams, h, rel_tol));
    reports.push_back(grad_check_parameters(
        [&] { return proximity_term(generator.generate(z), to_tensor(reference)); }, gparams, h, rel_tol));
    reports.push_back(grad_check_parameters(
        [&] { return generator_loss(generator, frozen, z, reference, w, pairing); }, gparams, h, rel_tol));

    for (std::size_t c = 0; c < reports.size(); ++c) {
      const auto& r = reports[c];
      suite.max_abs_discrepancy = std::max(suite.max_abs_discrepancy, r.max_abs_discrepancy);
      suite.max_rel_discrepancy = std::max(suite.max_rel_discrepancy, r.max_rel_discrepancy);
      auto& worst = suite.worst[c].report;
      if (r.max_rel_discrepancy >= worst.max_rel_discrepancy) {
        const auto checked = worst.checked;
        const bool ok = worst.passed;
        worst = r;
        worst.checked = checked;
        worst.passed = ok;
      }
      worst.checked += r.checked;
      if (!r.passed) {
        worst.passed = false;
        if (suite.passed)
          suite.first_failure = names[c] + " on instance " + std::to_string(inst) + " (coordinate " +
                                std::to_string(r.worst_index) + ")";
        suite.passed = false;
      }
    }
  }
  return suite;
}

}  // namespace frob
