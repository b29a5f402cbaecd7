// frob: command-line entry point.
//
//   frob train      --config FILE [--set k=v]... [--output-dir DIR]
//   frob eval       --config FILE [--classifier CKPT]
//   frob sweep      --config FILE [--jobs N]
//   frob ablate     --config FILE [--jobs N]
//   frob occ        --config FILE [--jobs N]
//   frob gen-data   [--config FILE | --set kind=ring --set size=50 ...]
//   frob grad-check [--instances N] [--seed S]
//
// Exit status: 0 success, 2 configuration error, 1 runtime failure.
// Progress goes to stderr; artifacts only under the output directory.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frob/config.hpp"
#include "frob/datasets.hpp"
#include "frob/diagnostics.hpp"
#include "frob/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct Invocation {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::size_t jobs = 1;
  int verbosity = 1;
  std::string classifier_path;
  std::size_t instances = 100;
  std::uint64_t grad_seed = 1;
};

void progress(const Invocation& inv, const std::string& line, int level = 1) {
  if (inv.verbosity >= level) std::cerr << "[frob] " << line << '\n';
}

frob::RunOptions run_options(const Invocation& inv) {
  frob::RunOptions opts;
  opts.jobs = inv.jobs;
  opts.progress = [&inv](const std::string& line) { progress(inv, line); };
  return opts;
}

frob::ExperimentConfig load(const Invocation& inv) {
  if (inv.config_path.empty()) throw frob::ConfigError("--config is required for this subcommand");
  return frob::load_config(inv.config_path, inv.overrides);
}

// --output-dir, then the config's output_dir, then $FROB_OUTPUT_ROOT, then
// ./frob-out.
fs::path output_dir(const Invocation& inv, const std::string& from_config) {
  fs::path dir;
  if (!inv.output_dir.empty()) {
    dir = inv.output_dir;
  } else if (!from_config.empty()) {
    dir = from_config;
  } else if (const char* root = std::getenv("FROB_OUTPUT_ROOT"); root && *root) {
    dir = root;
  } else {
    dir = "frob-out";
  }
  fs::create_directories(dir);
  progress(inv, "output_dir=" + dir.string(), 2);
  return dir;
}

int status_of(const std::vector<frob::RunReport>& runs) {
  for (const auto& r : runs)
    if (!r.ok()) return kRuntimeError;
  return kOk;
}

int cmd_train(const Invocation& inv) {
  auto config = load(inv);
  auto scenario = frob::materialize(config);
  auto out = output_dir(inv, config.output_dir);
  auto outcome = frob::run_single(config, scenario, config.mode, config.few_shots, config.seed, "train",
                                  run_options(inv));
  if (outcome.pipeline) {
    fs::create_directories(out / "models");
    outcome.pipeline->classifier.net().save((out / "models" / "classifier.ckpt").string());
    if (outcome.pipeline->generator) {
      outcome.pipeline->generator->net().save((out / "models" / "generator.ckpt").string());
      fs::create_directories(out / "data");
      frob::save_csv(outcome.pipeline->boundary_pool, (out / "data" / "boundary_pool.csv").string());
    }
  }
  frob::emit_report({outcome.report}, out);
  return status_of({outcome.report});
}

int cmd_eval(const Invocation& inv) {
  auto config = load(inv);
  auto scenario = frob::materialize(config);
  auto out = output_dir(inv, config.output_dir);
  fs::path ckpt = inv.classifier_path.empty() ? out / "models" / "classifier.ckpt" : fs::path(inv.classifier_path);
  frob::MlpClassifier model(frob::Mlp::load(ckpt.string()));
  if (model.input_dim() != scenario.normals.dim())
    throw std::runtime_error("checkpoint " + ckpt.string() + " expects inputs of width " +
                             std::to_string(model.input_dim()));
  frob::RunReport rep;
  rep.kind = "eval";
  rep.mode = config.mode;
  rep.few_shots = config.few_shots;
  rep.seed = config.seed;
  rep.run_id = frob::detail::make_run_id("eval", config.mode, config.few_shots, config.seed);
  rep.config = frob::to_json(config);
  rep.fingerprint = frob::fingerprint(config);
  progress(inv, "run=" + rep.run_id + " event=start checkpoint=" + ckpt.string());
  rep.tests = frob::evaluate_test_sets(model, scenario, config.budget, config.seed, rep.fingerprint, true);
  for (const auto& t : rep.tests) progress(inv, "run=" + rep.run_id + " " + t.name + ".auroc=" + frob::format_double(t.metrics.auroc));
  frob::emit_report({rep}, out, {.score_dumps = true});
  return kOk;
}

int cmd_sweep(const Invocation& inv) {
  auto config = load(inv);
  auto scenario = frob::materialize(config);
  auto out = output_dir(inv, config.output_dir);
  auto sweep = frob::run_fewshot_sweep(config, scenario, config.sweep_counts, run_options(inv));
  frob::emit_sweep(sweep, out);
  for (const auto& [name, point] : sweep.break_points)
    progress(inv, "test_set=" + name + " break_point=" + (point ? std::to_string(*point) : "none"));
  return status_of(sweep.runs);
}

int cmd_ablate(const Invocation& inv) {
  auto config = load(inv);
  auto scenario = frob::materialize(config);
  auto out = output_dir(inv, config.output_dir);
  auto runs = frob::run_ablation(config, scenario, run_options(inv));
  frob::emit_report(runs, out);
  return status_of(runs);
}

int cmd_occ(const Invocation& inv) {
  auto config = load(inv);
  auto scenario = frob::materialize(config);
  auto out = output_dir(inv, config.output_dir);
  auto occ = frob::run_occ(config, scenario, run_options(inv));
  frob::emit_occ(occ, out);
  progress(inv, "occ mean_auroc=" + frob::format_double(occ.mean_auroc));
  return status_of(occ.runs);
}

void write_dataset(const frob::DatasetSpec& spec, const frob::LabeledBatch& base, const fs::path& path) {
  if (spec.kind == frob::DatasetKind::gaussian_mixture) {
    frob::save_csv(frob::gen_gaussian_mixture(spec), path.string());
  } else {
    frob::OutlierPool pool{frob::detail::unlabeled_dataset(spec, base), frob::PoolSource::outlier_dataset};
    frob::save_csv(pool, path.string());
  }
}

int cmd_gen_data(const Invocation& inv) {
  if (inv.config_path.empty()) {
    // Inline spec: every --set names a dataset key.
    YAML::Node node(YAML::NodeType::Map);
    for (const auto& o : inv.overrides) frob::apply_override(node, o);
    auto spec = frob::detail::parse_dataset(node, "", 1);
    if (spec.kind == frob::DatasetKind::low_frequency_noise)
      throw frob::ConfigError("low-frequency-noise needs normal data; use --config");
    if (spec.kind == frob::DatasetKind::csv) throw frob::ConfigError("kind csv cannot be generated");
    auto out = output_dir(inv, "");
    fs::create_directories(out / "data");
    write_dataset(spec, {}, out / "data" / "dataset.csv");
    progress(inv, "wrote " + (out / "data" / "dataset.csv").string());
    return kOk;
  }
  auto config = load(inv);
  auto out = output_dir(inv, config.output_dir);
  auto scenario = frob::materialize(config);
  auto dir = out / "data";
  fs::create_directories(dir);
  frob::save_csv(scenario.normals, (dir / "normal.csv").string());
  frob::save_csv(scenario.in_test, (dir / "in_test.csv").string());
  if (config.few_shot_pool) frob::save_csv(scenario.few_shot_pool, (dir / "few_shot_pool.csv").string());
  if (config.outlier_dataset) frob::save_csv(scenario.outlier_dataset, (dir / "outlier_dataset.csv").string());
  for (const auto& t : scenario.test_sets)
    frob::save_csv(frob::OutlierPool{t.inputs, frob::PoolSource::outlier_dataset},
                   (dir / ("test_" + t.name + ".csv")).string());
  progress(inv, "wrote datasets under " + dir.string());
  return kOk;
}

int cmd_grad_check(const Invocation& inv) {
  auto suite = frob::run_gradient_suite(inv.instances, inv.grad_seed);
  for (const auto& c : suite.worst)
    progress(inv, "component=" + c.component + " max_rel=" + frob::format_double(c.report.max_rel_discrepancy) +
                      " checked=" + std::to_string(c.report.checked) + (c.report.passed ? " ok" : " FAILED"));
  std::cout << "instances=" << suite.instances << " max_abs_discrepancy=" << frob::format_double(suite.max_abs_discrepancy)
            << " max_rel_discrepancy=" << frob::format_double(suite.max_rel_discrepancy)
            << " status=" << (suite.passed ? "pass" : "fail") << '\n';
  if (!suite.passed) std::cerr << "[frob] first failure: " << suite.first_failure << '\n';
  return suite.passed ? kOk : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  Invocation inv;
  CLI::App app{"Few-shot robust OoD detection lab"};
  app.require_subcommand(1);
  app.add_flag_function("-v,--verbose", [&](std::int64_t n) { inv.verbosity += static_cast<int>(n); },
                        "More progress output on stderr");
  app.add_flag_function("-q,--quiet", [&](std::int64_t) { inv.verbosity = 0; }, "No progress output");

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("-c,--config", inv.config_path, "Experiment config (YAML)");
    if (config_required) c->required();
    sub->add_option("-s,--set", inv.overrides, "Override, dotted.key=value (repeatable)");
    sub->add_option("-o,--output-dir", inv.output_dir, "Output directory (default: $FROB_OUTPUT_ROOT or ./frob-out)");
    sub->add_option("-j,--jobs", inv.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "Train one pipeline, save checkpoints, evaluate");
  common(train, true);
  auto* eval = app.add_subcommand("eval", "Evaluate a saved classifier on the configured test sets");
  common(eval, true);
  eval->add_option("--classifier", inv.classifier_path, "Classifier checkpoint (default: OUT/models/classifier.ckpt)");
  auto* sweep = app.add_subcommand("sweep", "Few-shot sweep with break-point detection");
  common(sweep, true);
  auto* ablate = app.add_subcommand("ablate", "Run every configured ablation mode");
  common(ablate, true);
  auto* occ = app.add_subcommand("occ", "One-class rotation over the normal classes");
  common(occ, true);
  auto* gen = app.add_subcommand("gen-data", "Write the configured datasets (or one inline spec) as CSV");
  common(gen, false);
  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of every loss component");
  grad->add_option("--instances", inv.instances, "Random instances")->check(CLI::PositiveNumber);
  grad->add_option("--seed", inv.grad_seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return cmd_train(inv);
    if (*eval) return cmd_eval(inv);
    if (*sweep) return cmd_sweep(inv);
    if (*ablate) return cmd_ablate(inv);
    if (*occ) return cmd_occ(inv);
    if (*gen) return cmd_gen_data(inv);
    if (*grad) return cmd_grad_check(inv);
  } catch (const frob::ConfigError& e) {
    std::cerr << "[frob] config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "[frob] error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
