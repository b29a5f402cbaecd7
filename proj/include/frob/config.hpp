// Experiment configuration: a YAML document with nested sections, strict
// key checking, dotted-key overrides, and a canonical JSON form used for
// fingerprints and result files.
//
// Every key and its default:
//
//   seed: 1                      master seed
//   mode: iii                    ablation mode (i | ii | iii | iv)
//   few_shots: 64                few-shot outliers drawn from few_shot_pool
//   output_dir: ""               overridden by --output-dir
//   normal:          dataset     (required) labeled normal training data
//   in_test:         dataset     held-out normals; default: normal with size 300
//   few_shot_pool:   dataset     required by modes ii-iv
//   outlier_dataset: dataset     required by mode iv
//   test_sets: [ {name: ..., <dataset keys>} ]   (required, non-empty)
//   weights:    lambda 1, mu 1, nu 1, delta 1e-6, dispersion true
//   schedule:   phase_a_epochs 60, phase_b_epochs 300, phase_c_epochs 60,
//               normal_batch 64, negative_batch 64, latent_batch 64,
//               proximity_reference 0 (= normal_batch), lr_a/lr_b/lr_c 1e-3,
//               alternations 1, boundary_pool_size 0 (= few-shot count or
//               negative_batch)
//   classifier: hidden [64, 64], activation relu
//   generator:  latent_dim 2, hidden [64, 64], activation relu
//   budget:     epsilon 0.05, pgd_steps 40, pgd_step_size epsilon/10,
//               tau 0.5, restarts 0, input_lo/input_hi (unset)
//   sweep:      counts [256, 128, 64, 32, 8, 0], floor 0.55
//   ablation:   modes [i, ii, iii, iv]
//
// Dataset keys: kind (gaussian-mixture | ring | uniform-noise |
// low-frequency-noise | csv), dimension 2, size 100, seed (derived from the
// master seed and role), means, scale 0.05, center, r_inner 0.8,
// r_outer 1.0, box_lo -1, box_hi 1, amplitude 0.5, window 2, path.
#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "frob/datasets.hpp"
#include "frob/losses.hpp"
#include "frob/models.hpp"
#include "frob/scoring.hpp"
#include "frob/training.hpp"

namespace frob {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedDataset {
  std::string name;
  DatasetSpec spec;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  AblationMode mode = AblationMode::few_shot_boundary;
  std::size_t few_shots = 64;
  std::string output_dir;
  DatasetSpec normal;
  DatasetSpec in_test;
  std::optional<DatasetSpec> few_shot_pool;
  std::optional<DatasetSpec> outlier_dataset;
  std::vector<NamedDataset> test_sets;
  LossWeights weights;
  TrainSchedule schedule;
  NetworkShape classifier;
  NetworkShape generator;
  std::size_t latent_dim = 2;
  RobustnessBudget budget;
  std::vector<std::size_t> sweep_counts{256, 128, 64, 32, 8, 0};
  double break_floor = 0.55;
  std::vector<AblationMode> ablation_modes{AblationMode::oe_only, AblationMode::few_shot,
                                           AblationMode::few_shot_boundary, AblationMode::full};

  void validate_mode(AblationMode m) const {
    if (m != AblationMode::oe_only && !few_shot_pool)
      throw ConfigError("mode " + std::string(ablation_mode_name(m)) + " requires a few_shot_pool section");
    if (m == AblationMode::full && !outlier_dataset)
      throw ConfigError("mode iv requires an outlier_dataset section");
  }

  void validate() const {
    auto wrap = [](std::string_view where, auto&& check) {
      try {
        check();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(where) + ": " + e.what());
      }
    };
    if (normal.kind != DatasetKind::gaussian_mixture && normal.kind != DatasetKind::csv)
      throw ConfigError("normal.kind must be gaussian-mixture or csv");
    wrap("normal", [&] { normal.validate(); });
    wrap("in_test", [&] { in_test.validate(); });
    if (few_shot_pool) wrap("few_shot_pool", [&] { few_shot_pool->validate(); });
    if (outlier_dataset) wrap("outlier_dataset", [&] { outlier_dataset->validate(); });
    if (test_sets.empty()) throw ConfigError("test_sets must list at least one test set");
    std::set<std::string> names;
    for (const auto& t : test_sets) {
      if (t.name.empty() || t.name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") != std::string::npos)
        throw ConfigError("test set name '" + t.name + "' must be non-empty and use only letters, digits, '_' or '-'");
      if (!names.insert(t.name).second) throw ConfigError("duplicate test set name '" + t.name + "'");
      wrap("test_sets." + t.name, [&] { t.spec.validate(); });
    }
    wrap("weights", [&] { weights.validate(); });
    wrap("schedule", [&] { schedule.validate(); });
    wrap("budget", [&] { budget.validate(); });
    validate_mode(mode);
    if (!(break_floor > 0.5 && break_floor < 1.0)) throw ConfigError("sweep.floor must be in (0.5, 1)");
    for (std::size_t i = 1; i < sweep_counts.size(); ++i)
      if (sweep_counts[i] >= sweep_counts[i - 1]) throw ConfigError("sweep.counts must be strictly decreasing");
    if (latent_dim == 0) throw ConfigError("generator.latent_dim must be >= 1");
  }
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

// Reads one mapping node, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError("'" + path_ + "' must be a section of key: value pairs");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(node_[key], qualified(key));
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return node_ && node_.IsMap() ? node_[key] : YAML::Node();
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& entry : node_) {
      auto key = entry.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError("unknown key '" + qualified(key) + "'");
    }
  }

  template <class T>
  static T convert(const YAML::Node& n, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        auto text = n.as<std::string>();
        if (!text.empty() && text.front() == '-') throw YAML::Exception(YAML::Mark::null_mark(), "negative");
        return n.as<T>();
      } else if constexpr (is_vector<T>::value) {
        // A lone scalar (e.g. from --set ablation.modes=iii) is a one-element list.
        if (n.IsScalar()) return T{n.as<typename T::value_type>()};
        return n.as<T>();
      } else {
        return n.as<T>();
      }
    } catch (const YAML::Exception&) {
      throw ConfigError("key '" + where + "' expects " + expected<T>() + ", got '" + describe(n) + "'");
    }
  }

 private:
  template <class T>
  static std::string expected() {
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_integral_v<T>) return "a non-negative integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a list";
  }

  static std::string describe(const YAML::Node& n) {
    if (n.IsScalar()) return n.Scalar();
    YAML::Emitter e;
    e << YAML::Flow << n;
    return e.c_str();
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

inline DatasetSpec parse_dataset(YAML::Node node, const std::string& path, std::uint64_t default_seed,
                                 const std::set<std::string>& extra_keys = {}) {
  Section s(node, path);
  DatasetSpec d;
  if (!s.has("kind")) throw ConfigError("missing key '" + s.qualified("kind") + "'");
  try {
    d.kind = parse_dataset_kind(s.get<std::string>("kind", ""));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + s.qualified("kind") + "': " + e.what());
  }
  d.dimension = s.get<std::size_t>("dimension", d.dimension);
  d.size = s.get<std::size_t>("size", d.size);
  d.seed = s.get<std::uint64_t>("seed", default_seed);
  d.means = s.get<std::vector<std::vector<double>>>("means", d.means);
  d.scale = s.get<double>("scale", d.scale);
  d.center = s.get<std::vector<double>>("center", d.center);
  d.r_inner = s.get<double>("r_inner", d.r_inner);
  d.r_outer = s.get<double>("r_outer", d.r_outer);
  d.box_lo = s.get<double>("box_lo", d.box_lo);
  d.box_hi = s.get<double>("box_hi", d.box_hi);
  d.amplitude = s.get<double>("amplitude", d.amplitude);
  d.window = s.get<std::size_t>("window", d.window);
  d.path = s.get<std::string>("path", d.path);
  for (const auto& k : extra_keys) s.raw(k);
  s.finish();
  return d;
}

inline NetworkShape parse_network(Section& s, NetworkShape shape) {
  shape.hidden = s.get<std::vector<std::size_t>>("hidden", shape.hidden);
  auto act = s.get<std::string>("activation", std::string(activation_name(shape.activation)));
  try {
    shape.activation = parse_activation(act);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + s.qualified("activation") + "': " + e.what());
  }
  for (auto h : shape.hidden)
    if (h == 0) throw ConfigError("key '" + s.qualified("hidden") + "' needs positive sizes");
  return shape;
}

inline AblationMode parse_mode(const std::string& text, const std::string& where) {
  try {
    return parse_ablation_mode(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + where + "': " + e.what());
  }
}

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace detail

/// Applies one "dotted.key=value" override. Comma-separated values become
/// lists; bracketed values are parsed as YAML flow sequences.
inline void apply_override(YAML::Node& root, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must have the form dotted.key=value");
  auto key = assignment.substr(0, eq);
  auto text = assignment.substr(eq + 1);
  YAML::Node value;
  if (!text.empty() && text.front() != '[' && text.find(',') != std::string::npos) {
    value = YAML::Node(YAML::NodeType::Sequence);
    for (const auto& part : detail::split(text, ',')) value.push_back(part);
  } else {
    try {
      value = YAML::Load(text);
    } catch (const YAML::Exception&) {
      throw ConfigError("override '" + assignment + "' has an unparsable value");
    }
  }
  auto parts = detail::split(key, '.');
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  YAML::Node cur;
  cur.reset(root);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& part = parts[i];
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    const bool last = i + 1 == parts.size();
    if (cur.IsSequence()) {
      if (!detail::is_index(part) || std::stoul(part) >= cur.size())
        throw ConfigError("override key '" + key + "': '" + part + "' is not a valid list index");
      if (last) {
        cur[std::stoul(part)] = value;
      } else {
        YAML::Node next = cur[std::stoul(part)];
        cur.reset(next);
      }
      continue;
    }
    if (!cur.IsMap() && !cur.IsNull())
      throw ConfigError("override key '" + key + "': '" + part + "' is inside a non-section value");
    if (last) {
      cur[part] = value;
    } else {
      if (!cur[part] || cur[part].IsNull()) cur[part] = YAML::Node(YAML::NodeType::Map);
      YAML::Node next = cur[part];
      cur.reset(next);
    }
  }
}

inline ExperimentConfig parse_config(const YAML::Node& root) {
  detail::Section top(root, "");
  ExperimentConfig c;
  c.seed = top.get<std::uint64_t>("seed", c.seed);
  c.mode = detail::parse_mode(top.get<std::string>("mode", std::string(ablation_mode_name(c.mode))), "mode");
  c.few_shots = top.get<std::size_t>("few_shots", c.few_shots);
  c.output_dir = top.get<std::string>("output_dir", c.output_dir);
  auto role_seed = [&](std::string_view role) { return derive_seed(c.seed, detail::fnv1a(role)); };

  if (!top.has("normal")) throw ConfigError("missing section 'normal'");
  c.normal = detail::parse_dataset(top.raw("normal"), "normal", role_seed("normal"));
  if (top.has("in_test")) {
    c.in_test = detail::parse_dataset(top.raw("in_test"), "in_test", role_seed("in_test"));
  } else {
    c.in_test = c.normal;
    c.in_test.seed = role_seed("in_test");
    c.in_test.size = 300;
  }
  if (top.has("few_shot_pool"))
    c.few_shot_pool = detail::parse_dataset(top.raw("few_shot_pool"), "few_shot_pool", role_seed("few_shot_pool"));
  if (top.has("outlier_dataset"))
    c.outlier_dataset =
        detail::parse_dataset(top.raw("outlier_dataset"), "outlier_dataset", role_seed("outlier_dataset"));
  if (top.has("test_sets")) {
    auto list = top.raw("test_sets");
    if (!list.IsSequence()) throw ConfigError("'test_sets' must be a list of datasets");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "test_sets." + std::to_string(i);
      if (!list[i].IsMap() || !list[i]["name"]) throw ConfigError("missing key '" + where + ".name'");
      NamedDataset t;
      t.name = detail::Section::convert<std::string>(list[i]["name"], where + ".name");
      t.spec = detail::parse_dataset(list[i], where, role_seed("test:" + t.name), {"name"});
      c.test_sets.push_back(std::move(t));
    }
  }

  {
    detail::Section s(top.raw("weights"), "weights");
    c.weights.lambda = s.get<double>("lambda", c.weights.lambda);
    c.weights.mu = s.get<double>("mu", c.weights.mu);
    c.weights.nu = s.get<double>("nu", c.weights.nu);
    c.weights.delta = s.get<double>("delta", c.weights.delta);
    c.weights.dispersion = s.get<bool>("dispersion", c.weights.dispersion);
    s.finish();
  }
  {
    detail::Section s(top.raw("schedule"), "schedule");
    auto& t = c.schedule;
    t.phase_a_epochs = s.get<std::size_t>("phase_a_epochs", t.phase_a_epochs);
    t.phase_b_epochs = s.get<std::size_t>("phase_b_epochs", t.phase_b_epochs);
    t.phase_c_epochs = s.get<std::size_t>("phase_c_epochs", t.phase_c_epochs);
    t.normal_batch = s.get<std::size_t>("normal_batch", t.normal_batch);
    t.negative_batch = s.get<std::size_t>("negative_batch", t.negative_batch);
    t.latent_batch = s.get<std::size_t>("latent_batch", t.latent_batch);
    t.proximity_reference = s.get<std::size_t>("proximity_reference", t.proximity_reference);
    t.lr_a = s.get<double>("lr_a", t.lr_a);
    t.lr_b = s.get<double>("lr_b", t.lr_b);
    t.lr_c = s.get<double>("lr_c", t.lr_c);
    t.alternations = s.get<std::size_t>("alternations", t.alternations);
    t.boundary_pool_size = s.get<std::size_t>("boundary_pool_size", t.boundary_pool_size);
    t.seed = c.seed;
    s.finish();
  }
  {
    detail::Section s(top.raw("classifier"), "classifier");
    c.classifier = detail::parse_network(s, c.classifier);
    s.finish();
  }
  {
    detail::Section s(top.raw("generator"), "generator");
    c.generator = detail::parse_network(s, c.generator);
    c.latent_dim = s.get<std::size_t>("latent_dim", c.latent_dim);
    s.finish();
  }
  {
    detail::Section s(top.raw("budget"), "budget");
    auto& b = c.budget;
    b.epsilon = s.get<double>("epsilon", b.epsilon);
    b.pgd_steps = s.get<int>("pgd_steps", b.pgd_steps);
    b.pgd_step_size = s.get<double>("pgd_step_size", b.epsilon > 0.0 ? b.epsilon / 10.0 : 1e-3);
    b.tau = s.get<double>("tau", b.tau);
    b.restarts = s.get<int>("restarts", b.restarts);
    const bool lo = s.has("input_lo"), hi = s.has("input_hi");
    if (lo != hi) throw ConfigError("budget.input_lo and budget.input_hi must be given together");
    if (lo) b.input_box = Interval{s.get<double>("input_lo", 0.0), s.get<double>("input_hi", 0.0)};
    s.finish();
  }
  {
    detail::Section s(top.raw("sweep"), "sweep");
    c.sweep_counts = s.get<std::vector<std::size_t>>("counts", c.sweep_counts);
    c.break_floor = s.get<double>("floor", c.break_floor);
    s.finish();
  }
  {
    detail::Section s(top.raw("ablation"), "ablation");
    if (s.has("modes")) {
      c.ablation_modes.clear();
      for (const auto& m : s.get<std::vector<std::string>>("modes", {}))
        c.ablation_modes.push_back(detail::parse_mode(m, "ablation.modes"));
    }
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

inline YAML::Node load_config_document(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read config file '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ConfigError("config file '" + path + "' is not valid YAML: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  auto root = load_config_document(path);
  for (const auto& o : overrides) apply_override(root, o);
  return parse_config(root);
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(root, o);
  return parse_config(root);
}

inline nlohmann::ordered_json to_json(const DatasetSpec& d) {
  nlohmann::ordered_json j;
  j["kind"] = dataset_kind_name(d.kind);
  j["dimension"] = d.dimension;
  j["size"] = d.size;
  j["seed"] = d.seed;
  switch (d.kind) {
    case DatasetKind::gaussian_mixture:
      j["means"] = d.means;
      j["scale"] = d.scale;
      break;
    case DatasetKind::ring:
      j["center"] = d.center;
      j["r_inner"] = d.r_inner;
      j["r_outer"] = d.r_outer;
      break;
    case DatasetKind::uniform_noise:
      j["box_lo"] = d.box_lo;
      j["box_hi"] = d.box_hi;
      break;
    case DatasetKind::low_frequency_noise:
      j["amplitude"] = d.amplitude;
      j["window"] = d.window;
      break;
    case DatasetKind::csv:
      j["path"] = d.path;
      break;
  }
  return j;
}

inline nlohmann::ordered_json to_json(const RobustnessBudget& b) {
  nlohmann::ordered_json j;
  j["epsilon"] = b.epsilon;
  j["pgd_steps"] = b.pgd_steps;
  j["pgd_step_size"] = b.pgd_step_size;
  j["tau"] = b.tau;
  j["restarts"] = b.restarts;
  if (b.input_box) {
    j["input_lo"] = b.input_box->lo;
    j["input_hi"] = b.input_box->hi;
  }
  return j;
}

/// Canonical form of the effective configuration (output_dir excluded, so
/// the same experiment fingerprints identically wherever it is written).
inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["mode"] = ablation_mode_name(c.mode);
  j["few_shots"] = c.few_shots;
  j["normal"] = to_json(c.normal);
  j["in_test"] = to_json(c.in_test);
  if (c.few_shot_pool) j["few_shot_pool"] = to_json(*c.few_shot_pool);
  if (c.outlier_dataset) j["outlier_dataset"] = to_json(*c.outlier_dataset);
  auto tests = nlohmann::ordered_json::array();
  for (const auto& t : c.test_sets) {
    auto entry = to_json(t.spec);
    entry["name"] = t.name;
    tests.push_back(entry);
  }
  j["test_sets"] = std::move(tests);
  j["weights"] = {{"lambda", c.weights.lambda},
                  {"mu", c.weights.mu},
                  {"nu", c.weights.nu},
                  {"delta", c.weights.delta},
                  {"dispersion", c.weights.dispersion}};
  const auto& s = c.schedule;
  j["schedule"] = {{"phase_a_epochs", s.phase_a_epochs}, {"phase_b_epochs", s.phase_b_epochs},
                   {"phase_c_epochs", s.phase_c_epochs}, {"normal_batch", s.normal_batch},
                   {"negative_batch", s.negative_batch}, {"latent_batch", s.latent_batch},
                   {"proximity_reference", s.proximity_reference}, {"lr_a", s.lr_a},
                   {"lr_b", s.lr_b}, {"lr_c", s.lr_c},
                   {"alternations", s.alternations}, {"boundary_pool_size", s.boundary_pool_size}};
  j["classifier"] = {{"hidden", c.classifier.hidden}, {"activation", activation_name(c.classifier.activation)}};
  j["generator"] = {{"latent_dim", c.latent_dim},
                    {"hidden", c.generator.hidden},
                    {"activation", activation_name(c.generator.activation)}};
  j["budget"] = to_json(c.budget);
  j["sweep"] = {{"counts", c.sweep_counts}, {"floor", c.break_floor}};
  std::vector<std::string> modes;
  for (auto m : c.ablation_modes) modes.emplace_back(ablation_mode_name(m));
  j["ablation"] = {{"modes", modes}};
  return j;
}

inline std::string fingerprint(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(detail::fnv1a(to_json(c).dump())));
  return buf;
}

}  // namespace frob
