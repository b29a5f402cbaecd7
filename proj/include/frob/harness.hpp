// Experiment orchestration: dataset materialization, single runs, ablation
// over modes, few-shot sweeps with break-point detection, one-class
// rotation, and report emission.
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "frob/config.hpp"
#include "frob/datasets.hpp"
#include "frob/scoring.hpp"
#include "frob/training.hpp"

namespace frob {

struct NamedSet {
  std::string name;
  Matrix inputs;
};

/// Every dataset role of a config, generated or loaded once so that all
/// runs of an experiment see the identical data.
struct Scenario {
  LabeledBatch normals;
  LabeledBatch in_test;
  OutlierPool few_shot_pool{Matrix(0, 0), PoolSource::few_shot_oe};
  OutlierPool outlier_dataset{Matrix(0, 0), PoolSource::outlier_dataset};
  std::vector<NamedSet> test_sets;
};

namespace detail {

inline LabeledBatch labeled_dataset(const DatasetSpec& spec, std::string_view role) {
  if (spec.kind == DatasetKind::gaussian_mixture) return gen_gaussian_mixture(spec);
  if (spec.kind != DatasetKind::csv)
    throw ConfigError(std::string(role) + ".kind must be gaussian-mixture or csv for labeled data");
  auto data = load_csv(spec.path);
  if (!std::holds_alternative<LabeledBatch>(data))
    throw DataError(std::string(role) + ": csv '" + spec.path + "' has no label column");
  return std::get<LabeledBatch>(std::move(data));
}

/// Unlabeled rows of any dataset kind; low-frequency noise perturbs `base`.
inline Matrix unlabeled_dataset(const DatasetSpec& spec, const LabeledBatch& base) {
  switch (spec.kind) {
    case DatasetKind::gaussian_mixture: return gen_gaussian_mixture(spec).inputs;
    case DatasetKind::ring: return gen_ring(spec).inputs;
    case DatasetKind::uniform_noise: return gen_uniform_noise(spec).inputs;
    case DatasetKind::low_frequency_noise: return gen_low_frequency_noise(spec, base).inputs;
    case DatasetKind::csv: {
      auto data = load_csv(spec.path);
      if (auto* l = std::get_if<LabeledBatch>(&data)) return l->inputs;
      return std::get<OutlierPool>(data).inputs;
    }
  }
  return {};
}

inline void check_width(const Matrix& m, std::size_t d, std::string_view role) {
  if (m.cols != d)
    throw DataError(std::string(role) + " has width " + std::to_string(m.cols) + " but the normal data has width " +
                    std::to_string(d));
}

}  // namespace detail

inline Scenario materialize(const ExperimentConfig& config) {
  Scenario s;
  s.normals = detail::labeled_dataset(config.normal, "normal");
  const std::size_t d = s.normals.dim();
  s.in_test = detail::labeled_dataset(config.in_test, "in_test");
  detail::check_width(s.in_test.inputs, d, "in_test");
  if (config.few_shot_pool) {
    s.few_shot_pool.inputs = detail::unlabeled_dataset(*config.few_shot_pool, s.normals);
    detail::check_width(s.few_shot_pool.inputs, d, "few_shot_pool");
  }
  if (config.outlier_dataset) {
    s.outlier_dataset.inputs = detail::unlabeled_dataset(*config.outlier_dataset, s.normals);
    detail::check_width(s.outlier_dataset.inputs, d, "outlier_dataset");
  }
  for (const auto& t : config.test_sets) {
    // Low-frequency noise test anomalies perturb held-out normals.
    NamedSet set{t.name, detail::unlabeled_dataset(t.spec, s.in_test)};
    detail::check_width(set.inputs, d, "test set " + t.name);
    s.test_sets.push_back(std::move(set));
  }
  return s;
}

struct TestSetReport {
  std::string name;
  MetricReport metrics;
  ScoreDump scores;
};

struct RunReport {
  std::string run_id;
  std::string kind;  // train, eval, ablation, sweep, occ
  AblationMode mode = AblationMode::few_shot_boundary;
  std::size_t few_shots = 0;
  std::uint64_t seed = 0;
  std::optional<int> occ_class;
  std::string fingerprint;
  nlohmann::ordered_json config;
  std::vector<TestSetReport> tests;
  std::vector<PhaseTrace> traces;
  std::optional<std::size_t> boundary_pool_size;
  std::string error;     // non-empty when the run failed
  double seconds = 0.0;  // wall time, written to the sidecar only

  bool ok() const { return error.empty(); }

  const MetricReport* metrics_for(std::string_view test) const {
    for (const auto& t : tests)
      if (t.name == test) return &t.metrics;
    return nullptr;
  }
};

struct RunOptions {
  std::size_t jobs = 1;
  bool keep_scores = false;
  std::function<void(const std::string&)> progress;  // one line per event
};

struct RunOutcome {
  RunReport report;
  std::optional<PipelineResult> pipeline;
};

namespace detail {

inline void say(const RunOptions& opts, const std::string& line) {
  static std::mutex guard;
  if (!opts.progress) return;
  std::lock_guard lock(guard);
  opts.progress(line);
}

inline std::string make_run_id(std::string_view kind, AblationMode mode, std::size_t shots, std::uint64_t seed,
                               std::optional<int> occ_class = std::nullopt) {
  std::string id(kind);
  if (occ_class) id += "-c" + std::to_string(*occ_class);
  id += "-" + std::string(ablation_mode_name(mode)) + "-fs" + std::to_string(shots) + "-s" + std::to_string(seed);
  return id;
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results are written
/// by index, so the output order never depends on scheduling.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t j = 0; j < jobs; ++j)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& w : workers) w.join();
}

inline std::uint64_t eval_seed(std::uint64_t seed, std::string_view test) { return derive_seed(seed, fnv1a(test)); }

}  // namespace detail

/// Evaluates a trained classifier on every test set of the scenario against
/// the held-out normals.
inline std::vector<TestSetReport> evaluate_test_sets(const MlpClassifier& model, const Scenario& scenario,
                                                     const RobustnessBudget& budget, std::uint64_t seed,
                                                     const std::string& fingerprint, bool keep_scores) {
  std::vector<TestSetReport> out;
  for (const auto& t : scenario.test_sets) {
    auto ev = evaluate_ood_detailed(model, scenario.in_test.inputs, t.inputs, budget, detail::eval_seed(seed, t.name));
    ev.report.fingerprint = fingerprint;
    TestSetReport r{t.name, ev.report, {}};
    if (keep_scores) r.scores = std::move(ev.scores);
    out.push_back(std::move(r));
  }
  return out;
}

/// One pipeline run plus evaluation. The few-shot subset and every training
/// stream derive from `seed`; the scenario is shared.
inline RunOutcome run_single(const ExperimentConfig& config, const Scenario& scenario, AblationMode mode,
                             std::size_t few_shots, std::uint64_t seed, std::string_view kind,
                             const RunOptions& opts = {}, std::optional<int> occ_class = std::nullopt) {
  RunOutcome out;
  auto& rep = out.report;
  rep.kind = kind;
  rep.mode = mode;
  rep.few_shots = few_shots;
  rep.seed = seed;
  rep.occ_class = occ_class;
  rep.run_id = detail::make_run_id(kind, mode, few_shots, seed, occ_class);
  ExperimentConfig effective = config;
  effective.mode = mode;
  effective.few_shots = few_shots;
  effective.seed = seed;
  rep.config = to_json(effective);
  rep.fingerprint = fingerprint(effective);
  const auto start = std::chrono::steady_clock::now();
  try {
    config.validate_mode(mode);
    PipelineConfig pc;
    pc.normals = scenario.normals;
    pc.mode = mode;
    pc.weights = config.weights;
    pc.schedule = config.schedule;
    pc.schedule.seed = seed;
    pc.classifier = config.classifier;
    pc.generator = config.generator;
    pc.latent_dim = config.latent_dim;
    if (occ_class) pc.num_classes = 2;
    if (uses_few_shots(mode)) {
      if (few_shots > scenario.few_shot_pool.size())
        throw std::invalid_argument("few-shot count " + std::to_string(few_shots) + " exceeds the pool size " +
                                    std::to_string(scenario.few_shot_pool.size()));
      pc.few_shots = sample_few_shots(scenario.few_shot_pool, few_shots, derive_seed(seed, detail::fnv1a("few-shots")));
      pc.few_shots.source = PoolSource::few_shot_oe;
    }
    if (uses_outlier_dataset(mode)) {
      pc.outlier_dataset = scenario.outlier_dataset;
      pc.outlier_dataset.source = PoolSource::outlier_dataset;
    }
    detail::say(opts, "run=" + rep.run_id + " event=start");
    auto result = run_frob_pipeline(pc);
    if (uses_boundary(mode)) rep.boundary_pool_size = result.boundary_pool.size();
    rep.traces = result.traces;
    rep.tests = evaluate_test_sets(result.classifier, scenario, config.budget, seed, rep.fingerprint, opts.keep_scores);
    out.pipeline = std::move(result);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string line = "run=" + rep.run_id + " event=done";
    for (const auto& t : rep.tests) line += " " + t.name + ".auroc=" + format_double(t.metrics.auroc);
    detail::say(opts, line);
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.tests.clear();
    rep.traces.clear();
    rep.boundary_pool_size.reset();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::say(opts, "run=" + rep.run_id + " event=failed error=\"" + rep.error + "\"");
  }
  return out;
}

/// One run per requested mode, all with the master seed and few-shot count.
/// A failing mode is reported and the others still run.
inline std::vector<RunReport> run_ablation(const ExperimentConfig& config, const Scenario& scenario,
                                           const RunOptions& opts = {}) {
  std::vector<RunReport> reports(config.ablation_modes.size());
  detail::parallel_for(reports.size(), opts.jobs, [&](std::size_t i) {
    reports[i] = run_single(config, scenario, config.ablation_modes[i], config.few_shots, config.seed, "ablation", opts)
                     .report;
  });
  return reports;
}

inline std::vector<RunReport> run_ablation(const ExperimentConfig& config, const RunOptions& opts = {}) {
  return run_ablation(config, materialize(config), opts);
}

struct SweepResult {
  std::vector<RunReport> runs;  // in the order of the requested counts
  std::map<std::string, std::optional<std::size_t>> break_points;
  std::string fingerprint;
};

/// Break point of one curve given as (count, auroc) in descending count
/// order: the largest count with AUROC below `floor`, provided the curve at
/// or after that count reaches 0.55 or less.
inline std::optional<std::size_t> detect_break_point(const std::vector<std::pair<std::size_t, double>>& curve,
                                                     double floor = 0.55) {
  if (!(floor > 0.5 && floor < 1.0)) throw std::invalid_argument("break-point floor must lie in (0.5, 1)");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!(curve[i].second < floor)) continue;
    for (std::size_t j = i; j < curve.size(); ++j)
      if (curve[j].second <= 0.55) return curve[i].first;
    return std::nullopt;
  }
  return std::nullopt;
}

/// Per-test-set break points over the successful runs of a sweep.
inline std::map<std::string, std::optional<std::size_t>> detect_break_point(const SweepResult& sweep,
                                                                             double floor = 0.55) {
  if (sweep.runs.empty()) throw std::invalid_argument("detect_break_point: empty sweep");
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> curves;
  for (const auto& run : sweep.runs)
    for (const auto& t : run.tests) curves[t.name].emplace_back(run.few_shots, t.metrics.auroc);
  std::map<std::string, std::optional<std::size_t>> out;
  for (const auto& [name, curve] : curves) out[name] = detect_break_point(curve, floor);
  return out;
}

/// Retrains per count; count index i uses seed master + i.
inline SweepResult run_fewshot_sweep(const ExperimentConfig& config, const Scenario& scenario,
                                     const std::vector<std::size_t>& counts, const RunOptions& opts = {}) {
  if (counts.empty()) throw ConfigError("sweep.counts must not be empty");
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] >= counts[i - 1]) throw ConfigError("sweep.counts must be strictly decreasing");
  SweepResult sweep;
  sweep.fingerprint = fingerprint(config);
  sweep.runs.resize(counts.size());
  detail::parallel_for(counts.size(), opts.jobs, [&](std::size_t i) {
    sweep.runs[i] = run_single(config, scenario, config.mode, counts[i], config.seed + i, "sweep", opts).report;
  });
  sweep.break_points = detect_break_point(sweep, config.break_floor);
  return sweep;
}

inline SweepResult run_fewshot_sweep(const ExperimentConfig& config, const RunOptions& opts = {}) {
  return run_fewshot_sweep(config, materialize(config), config.sweep_counts, opts);
}

struct OccResult {
  std::vector<RunReport> runs;  // one per class, in class order
  double mean_auroc = 0.0;
  double mean_aauroc = 0.0;
  double mean_gauroc = 0.0;
  std::size_t succeeded = 0;
};

/// One-class rotation: class c alone is normal (relabeled 0 under a
/// two-logit head), the other classes of the held-out data are the OoD test
/// set. Class c trains with seed master + c.
inline OccResult run_occ(const ExperimentConfig& config, const Scenario& scenario, const RunOptions& opts = {}) {
  int top = -1;
  for (int y : scenario.normals.labels) top = std::max(top, y);
  const std::size_t classes = static_cast<std::size_t>(top + 1);
  if (classes < 2) throw ConfigError("occ needs a normal dataset with at least 2 classes");
  OccResult occ;
  occ.runs.resize(classes);
  detail::parallel_for(classes, opts.jobs, [&](std::size_t c) {
    auto pick = [&](const LabeledBatch& b, bool same) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < b.size(); ++i)
        if ((b.labels[i] == static_cast<int>(c)) == same) rows.push_back(i);
      return b.select(rows);
    };
    Scenario local;
    local.normals = pick(scenario.normals, true);
    std::fill(local.normals.labels.begin(), local.normals.labels.end(), 0);
    local.in_test = pick(scenario.in_test, true);
    local.few_shot_pool = scenario.few_shot_pool;
    local.outlier_dataset = scenario.outlier_dataset;
    local.test_sets.push_back({"other-classes", pick(scenario.in_test, false).inputs});
    const auto seed = config.seed + c;
    occ.runs[c] = run_single(config, local, config.mode, config.few_shots, seed, "occ", opts, static_cast<int>(c)).report;
  });
  for (const auto& run : occ.runs) {
    if (!run.ok()) continue;
    const auto& m = run.tests.front().metrics;
    occ.mean_auroc += m.auroc;
    occ.mean_aauroc += m.aauroc;
    occ.mean_gauroc += m.gauroc;
    ++occ.succeeded;
  }
  if (occ.succeeded > 0) {
    const double n = static_cast<double>(occ.succeeded);
    occ.mean_auroc /= n;
    occ.mean_aauroc /= n;
    occ.mean_gauroc /= n;
  }
  return occ;
}

inline OccResult run_occ(const ExperimentConfig& config, const RunOptions& opts = {}) {
  return run_occ(config, materialize(config), opts);
}

// ---------------------------------------------------------------------------
// Report emission

/// Tally of every MetricReport written by emit_report in this process, used
/// to audit the gauroc <= aauroc <= auroc chain.
struct ReportAudit {
  std::size_t reports = 0;
  std::size_t violations = 0;
  std::vector<std::string> offenders;
};

inline ReportAudit& report_audit() {
  static ReportAudit audit;
  return audit;
}

inline std::mutex& report_audit_mutex() {
  static std::mutex m;
  return m;
}

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["run_id"] = r.run_id;
  j["kind"] = r.kind;
  j["mode"] = ablation_mode_name(r.mode);
  j["few_shots"] = r.few_shots;
  j["seed"] = r.seed;
  if (r.occ_class) j["occ_class"] = *r.occ_class;
  j["fingerprint"] = r.fingerprint;
  j["status"] = r.ok() ? "ok" : "failed";
  if (!r.ok()) j["error"] = r.error;
  if (r.boundary_pool_size) j["boundary"] = {{"pool_size", *r.boundary_pool_size}};
  auto tests = nlohmann::ordered_json::array();
  for (const auto& t : r.tests)
    tests.push_back({{"name", t.name},
                     {"auroc", t.metrics.auroc},
                     {"aauroc", t.metrics.aauroc},
                     {"gauroc", t.metrics.gauroc},
                     {"epsilon", t.metrics.budget.epsilon},
                     {"in_count", t.metrics.in_count},
                     {"out_count", t.metrics.out_count}});
  j["test_sets"] = std::move(tests);
  auto traces = nlohmann::ordered_json::array();
  for (const auto& t : r.traces) traces.push_back({{"phase", t.phase}, {"losses", t.losses}});
  j["traces"] = std::move(traces);
  j["config"] = r.config;
  return j;
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{"run_id", "mode", "few_shots", "test_set", "auroc",
                                             "aauroc", "gauroc", "epsilon",   "seed"};
  return cols;
}

/// Summary rows rebuilt from a parsed result file.
inline std::vector<std::string> summary_rows(const nlohmann::ordered_json& result) {
  std::vector<std::string> rows;
  for (const auto& t : result.at("test_sets")) {
    rows.push_back(result.at("run_id").get<std::string>() + "," + result.at("mode").get<std::string>() + "," +
                   std::to_string(result.at("few_shots").get<std::size_t>()) + "," + t.at("name").get<std::string>() +
                   "," + format_double(t.at("auroc").get<double>()) + "," +
                   format_double(t.at("aauroc").get<double>()) + "," + format_double(t.at("gauroc").get<double>()) +
                   "," + format_double(t.at("epsilon").get<double>()) + "," +
                   std::to_string(result.at("seed").get<std::uint64_t>()));
  }
  return rows;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw ReportError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw ReportError("failed writing " + path.string());
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

struct EmitOptions {
  bool plots = false;         // count-vs-metric series (sweeps)
  bool score_dumps = false;   // per-sample CSVs when the reports carry scores
};

/// Writes, under out_dir:
///   runs/<run_id>.json       result document (deterministic)
///   runs/<run_id>.meta.json  wall time and timestamp
///   summary.csv              one row per successful run x test set
///   plots/<mode>_<test>_<metric>.dat   when opts.plots
///   scores/<run_id>_<test>.csv         when opts.score_dumps
inline void emit_report(const std::vector<RunReport>& runs, const std::filesystem::path& out_dir,
                        const EmitOptions& opts = {}) {
  static std::mutex emission;
  std::lock_guard lock(emission);
  std::string csv;
  for (std::size_t i = 0; i < summary_columns().size(); ++i) csv += (i ? "," : "") + summary_columns()[i];
  csv += '\n';
  for (const auto& run : runs) {
    auto doc = to_json(run);
    detail::write_text(out_dir / "runs" / (run.run_id + ".json"), doc.dump(2) + "\n");
    nlohmann::ordered_json meta{{"run_id", run.run_id}, {"wall_seconds", run.seconds},
                                {"written_at", detail::utc_timestamp()}};
    detail::write_text(out_dir / "runs" / (run.run_id + ".meta.json"), meta.dump(2) + "\n");
    for (const auto& row : summary_rows(doc)) csv += row + "\n";
    {
      std::lock_guard audit_lock(report_audit_mutex());
      auto& audit = report_audit();
      for (const auto& t : run.tests) {
        ++audit.reports;
        if (t.metrics.budget.epsilon > 0.0 && !t.metrics.ordered()) {
          ++audit.violations;
          audit.offenders.push_back(run.run_id + "/" + t.name);
        }
      }
    }
    if (opts.score_dumps)
      for (const auto& t : run.tests)
        if (!t.scores.in_clean.empty()) {
          auto path = out_dir / "scores" / (run.run_id + "_" + t.name + ".csv");
          std::filesystem::create_directories(path.parent_path());
          write_score_dump(t.scores, path.string());
        }
  }
  detail::write_text(out_dir / "summary.csv", csv);

  if (!opts.plots) return;
  std::map<std::string, std::vector<const RunReport*>> by_mode;
  for (const auto& run : runs)
    if (run.ok()) by_mode[std::string(ablation_mode_name(run.mode))].push_back(&run);
  for (auto& [mode, list] : by_mode) {
    std::stable_sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->few_shots > b->few_shots; });
    std::map<std::string, std::array<std::string, 3>> series;
    for (const auto* run : list)
      for (const auto& t : run->tests) {
        auto& s = series[t.name];
        const std::string count = std::to_string(run->few_shots);
        s[0] += count + " " + format_double(t.metrics.auroc) + "\n";
        s[1] += count + " " + format_double(t.metrics.aauroc) + "\n";
        s[2] += count + " " + format_double(t.metrics.gauroc) + "\n";
      }
    const char* metric[3] = {"auroc", "aauroc", "gauroc"};
    for (const auto& [test, s] : series)
      for (int m = 0; m < 3; ++m)
        detail::write_text(out_dir / "plots" / (mode + "_" + test + "_" + metric[m] + ".dat"),
                           std::string("# few_shots ") + metric[m] + "\n" + s[m]);
  }
}

inline nlohmann::ordered_json to_json(const SweepResult& sweep) {
  nlohmann::ordered_json j;
  j["fingerprint"] = sweep.fingerprint;
  auto counts = nlohmann::ordered_json::array();
  auto runs = nlohmann::ordered_json::array();
  for (const auto& r : sweep.runs) {
    counts.push_back(r.few_shots);
    runs.push_back(r.run_id);
  }
  auto bp = nlohmann::ordered_json::object();
  for (const auto& [name, point] : sweep.break_points) bp[name] = point ? nlohmann::ordered_json(*point) : nullptr;
  j["counts"] = std::move(counts);
  j["runs"] = std::move(runs);
  j["break_points"] = std::move(bp);
  return j;
}

inline nlohmann::ordered_json to_json(const OccResult& occ) {
  nlohmann::ordered_json j;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& r : occ.runs) {
    nlohmann::ordered_json c{{"class", *r.occ_class}, {"run_id", r.run_id}, {"status", r.ok() ? "ok" : "failed"}};
    if (r.ok()) {
      c["auroc"] = r.tests.front().metrics.auroc;
      c["aauroc"] = r.tests.front().metrics.aauroc;
      c["gauroc"] = r.tests.front().metrics.gauroc;
    }
    classes.push_back(c);
  }
  j["classes"] = std::move(classes);
  j["succeeded"] = occ.succeeded;
  j["mean_auroc"] = occ.mean_auroc;
  j["mean_aauroc"] = occ.mean_aauroc;
  j["mean_gauroc"] = occ.mean_gauroc;
  return j;
}

inline void emit_sweep(const SweepResult& sweep, const std::filesystem::path& out_dir) {
  emit_report(sweep.runs, out_dir, {.plots = true});
  detail::write_text(out_dir / "sweep.json", to_json(sweep).dump(2) + "\n");
}

inline void emit_occ(const OccResult& occ, const std::filesystem::path& out_dir) {
  emit_report(occ.runs, out_dir);
  detail::write_text(out_dir / "occ.json", to_json(occ).dump(2) + "\n");
}

}  // namespace frob
