// Anomaly scoring, thresholding, and the clean / adversarial / certified
// AUROC metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "frob/grad.hpp"
#include "frob/losses.hpp"
#include "frob/matrix.hpp"
#include "frob/models.hpp"

namespace frob {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Upper bound on the max-softmax over a box of logits: for each candidate
/// class l, its logit at the upper end and every rival at its lower end.
/// Summation runs in class order so that degenerate intervals reproduce
/// anomaly_score bit for bit.
inline double certified_max_confidence(std::span<const Interval> bounds) {
  if (bounds.empty()) throw std::invalid_argument("certified_max_confidence: no logits");
  for (std::size_t k = 0; k < bounds.size(); ++k)
    if (!(bounds[k].lo <= bounds[k].hi))
      throw std::invalid_argument("certified_max_confidence: inverted interval for logit " + std::to_string(k));
  double best = 0.0;
  for (std::size_t l = 0; l < bounds.size(); ++l) {
    double denom = 0.0;
    for (std::size_t k = 0; k < bounds.size(); ++k)
      denom += k == l ? 1.0 : std::exp(bounds[k].lo - bounds[l].hi);
    best = std::max(best, 1.0 / denom);
  }
  return best;
}

/// max_l softmax(logits)_l.
inline double max_softmax_of(std::span<const double> logits) {
  std::vector<Interval> degenerate(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) degenerate[k] = {logits[k], logits[k]};
  return certified_max_confidence(degenerate);
}

inline double anomaly_score(const MlpClassifier& model, std::span<const double> x) {
  return max_softmax_of(model.logits(x));
}

inline std::vector<double> anomaly_scores(const MlpClassifier& model, const Matrix& xs) {
  std::vector<double> scores(xs.rows);
  for (std::size_t r = 0; r < xs.rows; ++r) scores[r] = anomaly_score(model, xs.row(r));
  return scores;
}

enum class Decision { in_distribution, ood };

/// OoD iff score < tau; a tie is in-distribution.
inline Decision classify_with_threshold(double score, double tau) {
  return score < tau ? Decision::ood : Decision::in_distribution;
}

/// Largest tau such that at least target_tpr of in_scores are >= tau.
inline double calibrate_threshold(std::span<const double> in_scores, double target_tpr) {
  if (in_scores.empty()) throw std::invalid_argument("calibrate_threshold: empty score set");
  if (!(target_tpr > 0.0 && target_tpr <= 1.0))
    throw std::invalid_argument("calibrate_threshold: target_tpr must be in (0, 1]");
  std::vector<double> sorted(in_scores.begin(), in_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  auto needed = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(sorted.size()) - 1e-9));
  needed = std::clamp<std::size_t>(needed, 1, sorted.size());
  return sorted[needed - 1];
}

enum class ScoreKind { clean, adversarial, certified_upper };

inline std::string_view score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::clean: return "clean";
    case ScoreKind::adversarial: return "adversarial";
    case ScoreKind::certified_upper: return "certified-upper";
  }
  return "unknown";
}

struct ScoreSet {
  std::vector<double> in_scores;
  std::vector<double> out_scores;
  ScoreKind kind = ScoreKind::clean;
};

/// P(in > out) + 0.5 P(in == out) through the Mann-Whitney rank sum with
/// midranks for ties.
inline double auroc(std::span<const double> in_scores, std::span<const double> out_scores) {
  if (in_scores.empty() || out_scores.empty()) throw std::invalid_argument("auroc: both score sets must be non-empty");
  const std::size_t n = in_scores.size(), m = out_scores.size();
  std::vector<std::pair<double, bool>> all;
  all.reserve(n + m);
  for (double s : in_scores) all.emplace_back(s, true);
  for (double s : out_scores) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Rank sums are kept doubled so midranks stay integral.
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const std::uint64_t doubled_midrank = static_cast<std::uint64_t>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (all[t].second) doubled_rank_sum += doubled_midrank;
    i = j;
  }
  const std::uint64_t doubled_u = doubled_rank_sum - static_cast<std::uint64_t>(n) * (n + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(n) * static_cast<double>(m));
}

inline double auroc(const ScoreSet& scores) { return auroc(scores.in_scores, scores.out_scores); }

struct RobustnessBudget {
  double epsilon = 0.05;
  int pgd_steps = 40;
  double pgd_step_size = 0.005;
  double tau = 0.5;
  int restarts = 0;
  std::optional<Interval> input_box;

  static RobustnessBudget with_epsilon(double eps) {
    RobustnessBudget b;
    b.epsilon = eps;
    b.pgd_step_size = eps > 0.0 ? eps / 10.0 : 1e-3;
    return b;
  }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("budget.epsilon must be >= 0");
    if (pgd_steps < 1) throw std::invalid_argument("budget.pgd_steps must be positive");
    if (!(pgd_step_size > 0.0)) throw std::invalid_argument("budget.pgd_step_size must be > 0");
    if (epsilon > 0.0 && pgd_step_size > epsilon)
      throw std::invalid_argument("budget.pgd_step_size must not exceed epsilon");
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("budget.tau must be in [0, 1]");
    if (restarts < 0) throw std::invalid_argument("budget.restarts must be >= 0");
    if (input_box && !(input_box->lo < input_box->hi)) throw std::invalid_argument("budget.input_box must have lo < hi");
  }
};

namespace detail {

inline void project(std::span<double> x, std::span<const double> center, double eps,
                    const std::optional<Interval>& box) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], center[i] - eps, center[i] + eps);
    if (box) x[i] = std::clamp(x[i], box->lo, box->hi);
  }
}

}  // namespace detail

/// Sign-gradient ascent on the anomaly score inside the l-inf ball around
/// every row of xs, batched. Returns, per row, the highest score over all
/// iterates including the starting point. Restarts begin from uniform draws
/// in the ball, seeded by `seed`.
inline std::vector<double> pgd_max_confidence(const MlpClassifier& model, const Matrix& xs,
                                              const RobustnessBudget& budget, std::uint64_t seed = 0) {
  std::vector<double> best = anomaly_scores(model, xs);
  if (budget.epsilon == 0.0 || xs.rows == 0) return best;
  const std::size_t n = xs.rows, d = xs.cols;
  Rng rng(seed);
  for (int run = 0; run <= budget.restarts; ++run) {
    Matrix current = xs;
    if (run > 0) {
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) current(r, c) += rng.uniform(-budget.epsilon, budget.epsilon);
        detail::project(current.row(r), xs.row(r), budget.epsilon, budget.input_box);
      }
    } else {
      for (std::size_t r = 0; r < n; ++r) detail::project(current.row(r), xs.row(r), budget.epsilon, budget.input_box);
    }
    for (int step = 0; step <= budget.pgd_steps; ++step) {
      for (std::size_t r = 0; r < n; ++r) best[r] = std::max(best[r], anomaly_score(model, current.row(r)));
      if (step == budget.pgd_steps) break;
      // Rows are independent, so the gradient of the summed score holds each
      // row's own gradient.
      Tensor x(Shape{n, d}, current.values, true);
      reduce_sum(max_softmax(model.logits(x))).backward();
      auto g = x.grad();
      for (std::size_t i = 0; i < current.values.size(); ++i) {
        const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        current.values[i] += budget.pgd_step_size * s;
      }
      for (std::size_t r = 0; r < n; ++r) detail::project(current.row(r), xs.row(r), budget.epsilon, budget.input_box);
    }
  }
  return best;
}

inline double pgd_max_confidence(const MlpClassifier& model, std::span<const double> x, const RobustnessBudget& budget,
                                  std::uint64_t seed = 0) {
  Matrix single(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return pgd_max_confidence(model, single, budget, seed)[0];
}

/// Interval bounds on every logit over the l-inf ball of radius epsilon
/// (intersected with the input box when given). Affine layers use
/// center-radius arithmetic; activations are applied at the endpoints.
/// Bounds with nonzero width are widened outward by a few ulps so that
/// floating-point rounding never makes them unsound.
inline std::vector<Interval> ibp_logit_bounds(const MlpClassifier& model, std::span<const double> x, double epsilon,
                                              const std::optional<Interval>& input_box = std::nullopt) {
  const auto& net = model.net();
  if (x.size() != net.input_dim())
    throw ShapeError("ibp_logit_bounds: input width " + std::to_string(x.size()) + " does not match network input " +
                     std::to_string(net.input_dim()));
  if (!(epsilon >= 0.0)) throw std::invalid_argument("ibp_logit_bounds: epsilon must be >= 0");
  if (net.activation() != Activation::relu && net.activation() != Activation::tanh)
    throw std::invalid_argument("ibp_logit_bounds: unsupported activation");
  std::vector<double> lo(x.size()), hi(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lo[i] = x[i] - epsilon;
    hi[i] = x[i] + epsilon;
    if (epsilon == 0.0) lo[i] = hi[i] = x[i];
    if (input_box) {
      lo[i] = std::clamp(lo[i], input_box->lo, input_box->hi);
      hi[i] = std::clamp(hi[i], input_box->lo, input_box->hi);
    }
  }
  const auto& layers = net.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& layer = layers[li];
    const std::size_t out = layer.weight.rows(), in = layer.weight.cols();
    auto w = layer.weight.data();
    auto b = layer.bias.data();
    std::vector<double> nlo(out), nhi(out);
    for (std::size_t o = 0; o < out; ++o) {
      double center = 0.0, radius = 0.0, magnitude = 0.0;
      for (std::size_t p = 0; p < in; ++p) {
        const double mid = lo[p] == hi[p] ? lo[p] : 0.5 * (lo[p] + hi[p]);
        const double rad = 0.5 * (hi[p] - lo[p]);
        center += mid * w[o * in + p];
        radius += std::abs(w[o * in + p]) * rad;
        magnitude += std::abs(mid * w[o * in + p]);
      }
      center = center + b[o];
      if (radius > 0.0) {
        // Bound on accumulated rounding error of the two dot products.
        const double slack = 4.0 * static_cast<double>(in + 2) * 0x1.0p-52 *
                             (magnitude + radius + std::abs(b[o]) + std::abs(center));
        radius += slack;
      }
      nlo[o] = radius > 0.0 ? center - radius : center;
      nhi[o] = radius > 0.0 ? center + radius : center;
    }
    if (li + 1 < layers.size()) {
      net.apply_activation(nlo);
      net.apply_activation(nhi);
    }
    lo = std::move(nlo);
    hi = std::move(nhi);
  }
  std::vector<Interval> bounds(lo.size());
  for (std::size_t k = 0; k < lo.size(); ++k) bounds[k] = {lo[k], hi[k]};
  return bounds;
}

struct MetricReport {
  double auroc = 0.0;
  double aauroc = 0.0;
  double gauroc = 0.0;
  RobustnessBudget budget;
  std::size_t in_count = 0;
  std::size_t out_count = 0;
  std::string fingerprint;

  bool ordered() const { return gauroc <= aauroc && aauroc <= auroc; }
};

/// Per-sample scores behind a MetricReport. In-distribution samples are
/// never perturbed, so their three columns coincide.
struct ScoreDump {
  std::vector<double> in_clean;
  std::vector<double> out_clean;
  std::vector<double> out_adversarial;
  std::vector<double> out_certified;
};

struct Evaluation {
  MetricReport report;
  ScoreDump scores;
};

inline Evaluation evaluate_ood_detailed(const MlpClassifier& model, const Matrix& in_set, const Matrix& out_set,
                                        const RobustnessBudget& budget, std::uint64_t seed = 0) {
  if (in_set.rows == 0 || out_set.rows == 0) throw std::invalid_argument("evaluate_ood: both sets must be non-empty");
  budget.validate();
  Evaluation ev;
  ev.scores.in_clean = anomaly_scores(model, in_set);
  ev.scores.out_clean = anomaly_scores(model, out_set);
  ev.scores.out_adversarial = pgd_max_confidence(model, out_set, budget, seed);
  ev.scores.out_certified.resize(out_set.rows);
  for (std::size_t r = 0; r < out_set.rows; ++r) {
    auto bounds = ibp_logit_bounds(model, out_set.row(r), budget.epsilon, budget.input_box);
    ev.scores.out_certified[r] = certified_max_confidence(bounds);
  }
  ev.report.auroc = auroc(ev.scores.in_clean, ev.scores.out_clean);
  ev.report.aauroc = auroc(ev.scores.in_clean, ev.scores.out_adversarial);
  ev.report.gauroc = auroc(ev.scores.in_clean, ev.scores.out_certified);
  ev.report.budget = budget;
  ev.report.in_count = in_set.rows;
  ev.report.out_count = out_set.rows;
  return ev;
}

inline MetricReport evaluate_ood(const MlpClassifier& model, const Matrix& in_set, const Matrix& out_set,
                                 const RobustnessBudget& budget, std::uint64_t seed = 0) {
  return evaluate_ood_detailed(model, in_set, out_set, budget, seed).report;
}

/// CSV: sample_id, set, clean_score, adv_score, cert_upper.
inline void write_score_dump(const ScoreDump& dump, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write score dump " + path);
  out << "sample_id,set,clean_score,adv_score,cert_upper\n";
  std::size_t id = 0;
  for (double s : dump.in_clean) {
    auto v = format_double(s);
    out << id++ << ",in," << v << ',' << v << ',' << v << '\n';
  }
  for (std::size_t i = 0; i < dump.out_clean.size(); ++i)
    out << id++ << ",out," << format_double(dump.out_clean[i]) << ',' << format_double(dump.out_adversarial[i]) << ','
        << format_double(dump.out_certified[i]) << '\n';
  if (!out) throw std::runtime_error("failed writing score dump " + path);
}

}  // namespace frob
