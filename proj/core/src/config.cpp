#include "seed/config.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace seed {

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  stream.validate();
  effective_threshold().validate();
  if (arch.hidden.empty()) fail("model.hidden: at least one hidden layer is required");
  if (optimizer.batch_size < 2) fail("optim.batch_size: must be at least 2");
  if (optimizer.epochs_per_task == 0) fail("optim.epochs: must be positive");
  if (!(optimizer.learning_rate > 0.0)) fail("optim.lr: must be positive");
  if (!(optimizer.weight_decay >= 0.0)) fail("optim.wd: must be non-negative");
  if (!(memory.b_m_frac >= 0.0 && memory.b_m_frac < 1.0)) fail("memory.b_m: must lie in [0,1)");
  if (!(memory.bma >= 0.0 && memory.bma <= 1.0)) fail("memory.bma: must lie in [0,1]");
  if (!(gpm.energy > 0.0 && gpm.energy <= 1.0)) fail("gpm.energy: must lie in (0,1]");
  if (!(repspace_energy > 0.0 && repspace_energy <= 1.0)) fail("repspace.energy: must lie in (0,1]");
  if (!(oracle.flip_prob >= 0.0 && oracle.flip_prob <= 1.0)) fail("active.flip_prob: must lie in [0,1]");
  if (seeds.empty()) fail("run.seeds: at least one seed is required");
}

ThresholdConfig ExperimentConfig::effective_threshold() const {
  ThresholdConfig t = threshold;
  t.label_ratio = threshold_r.value_or(stream.label_ratio);
  return t;
}

namespace {

void set_hyper(ExperimentConfig& c, double b_m, double bma, double lr, double wd, double tau_max, double gpm_energy) {
  c.memory.b_m_frac = b_m;
  c.memory.bma = bma;
  c.optimizer.learning_rate = lr;
  c.optimizer.weight_decay = wd;
  c.threshold.tau_max = tau_max;
  c.gpm.energy = gpm_energy;
}

}  // namespace

std::vector<std::string> preset_names() { return {"default", "bodmas-like", "androzoo-like", "apigraph-like"}; }

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "default") {
    // bodmas-like optimiser and memory settings; the low GPM energy suits the 200-d synthetic stream
    set_hyper(c, 0.5, 0.8, 1e-1, 1e-9, 0.09, 0.10);
  } else if (name == "bodmas-like") {
    set_hyper(c, 0.5, 0.8, 1e-1, 1e-9, 0.09, 0.99);
  } else if (name == "androzoo-like") {
    set_hyper(c, 0.3, 0.4, 1e-2, 1e-1, 0.05, 0.10);
  } else if (name == "apigraph-like") {
    set_hyper(c, 0.6, 0.7, 1e-1, 1e-4, 0.05, 0.10);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
  }
  return c;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigParse, key + ": " + what);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad(key, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad(key, "expected true/false, got '" + v + "'");
}

double fraction(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0.0 || x > 1.0) bad(key, "must lie in [0,1], got " + v);
  return x;
}

double positive(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x > 0.0)) bad(key, "must be positive, got " + v);
  return x;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join_uints(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::map<std::string, Field>& fields() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["name"] = {[](C& c, S, S v) { c.name = v; }, [](const C& c) { return c.name; }};
    t["dataset.csv"] = {[](C& c, S, S v) { c.dataset_csv = v; }, [](const C& c) { return c.dataset_csv; }};

    t["stream.n_tasks"] = {[](C& c, S k, S v) { c.stream.n_tasks = to_uint(k, v); },
                           [](const C& c) { return std::to_string(c.stream.n_tasks); }};
    t["stream.seen_tasks"] = {[](C& c, S k, S v) { c.stream.seen_tasks = to_uint(k, v); },
                              [](const C& c) { return std::to_string(c.stream.seen_tasks); }};
    t["stream.samples_per_task"] = {[](C& c, S k, S v) { c.stream.samples_per_task = to_uint(k, v); },
                                    [](const C& c) { return std::to_string(c.stream.samples_per_task); }};
    t["stream.class_imbalance"] = {[](C& c, S k, S v) { c.stream.class_imbalance = positive(k, v); },
                                   [](const C& c) { return fmt(c.stream.class_imbalance); }};
    t["stream.feature_dim"] = {[](C& c, S k, S v) { c.stream.feature_dim = to_uint(k, v); },
                               [](const C& c) { return std::to_string(c.stream.feature_dim); }};
    t["stream.label_ratio"] = {[](C& c, S k, S v) { c.stream.label_ratio = fraction(k, v); },
                               [](const C& c) { return fmt(c.stream.label_ratio); }};
    t["stream.noise_ratio"] = {[](C& c, S k, S v) { c.stream.noise_ratio = fraction(k, v); },
                               [](const C& c) { return fmt(c.stream.noise_ratio); }};
    t["stream.mean_shift"] = {[](C& c, S k, S v) { c.stream.mean_shift = to_double(k, v); },
                              [](const C& c) { return fmt(c.stream.mean_shift); }};
    t["stream.cluster_spread"] = {[](C& c, S k, S v) { c.stream.cluster_spread = positive(k, v); },
                                  [](const C& c) { return fmt(c.stream.cluster_spread); }};
    t["stream.class_separation"] = {[](C& c, S k, S v) { c.stream.class_separation = to_double(k, v); },
                                    [](const C& c) { return fmt(c.stream.class_separation); }};
    t["stream.drift_correlation"] = {[](C& c, S k, S v) {
                                       c.stream.drift_correlation = to_double(k, v);
                                       if (std::abs(c.stream.drift_correlation) > 1.0) bad(k, "must lie in [-1,1]");
                                     },
                                     [](const C& c) { return fmt(c.stream.drift_correlation); }};
    t["stream.start_month"] = {[](C& c, S, S v) { c.stream.start_month = v; },
                               [](const C& c) { return c.stream.start_month; }};

    t["model.hidden"] = {[](C& c, S k, S v) {
                           std::vector<std::size_t> h;
                           for (const auto& s : split_list(v)) h.push_back(to_uint(k, s));
                           if (h.empty() || std::count(h.begin(), h.end(), 0u) > 0) bad(k, "widths must be positive");
                           c.arch.hidden = h;
                         },
                         [](const C& c) {
                           std::vector<std::uint64_t> h(c.arch.hidden.begin(), c.arch.hidden.end());
                           return join_uints(h);
                         }};
    t["model.dropout"] = {[](C& c, S k, S v) {
                            c.arch.dropout = fraction(k, v);
                            if (c.arch.dropout >= 1.0) bad(k, "must be below 1");
                          },
                          [](const C& c) { return fmt(c.arch.dropout); }};
    t["model.batchnorm"] = {[](C& c, S k, S v) { c.arch.batchnorm = to_bool(k, v); },
                            [](const C& c) { return std::string(c.arch.batchnorm ? "true" : "false"); }};

    t["active.budget"] = {[](C& c, S k, S v) { c.monthly_budget = to_uint(k, v); },
                          [](const C& c) { return std::to_string(c.monthly_budget); }};
    t["active.oracle"] = {[](C& c, S k, S v) {
                            if (v == "ground_truth") c.oracle.variant = OracleKind::Variant::GroundTruth;
                            else if (v == "self_label") c.oracle.variant = OracleKind::Variant::SelfLabel;
                            else if (v == "noisy") c.oracle.variant = OracleKind::Variant::Noisy;
                            else bad(k, "expected ground_truth|self_label|noisy, got '" + v + "'");
                          },
                          [](const C& c) { return c.oracle.name(); }};
    t["active.flip_prob"] = {[](C& c, S k, S v) { c.oracle.flip_prob = fraction(k, v); },
                             [](const C& c) { return fmt(c.oracle.flip_prob); }};
    t["active.distance"] = {[](C& c, S k, S v) {
                              if (v == "all_samples") c.distance = DistanceStrategy::AllSamples;
                              else if (v == "centroid") c.distance = DistanceStrategy::Centroid;
                              else bad(k, "expected all_samples|centroid, got '" + v + "'");
                            },
                            [](const C& c) {
                              return std::string(c.distance == DistanceStrategy::Centroid ? "centroid" : "all_samples");
                            }};
    t["active.ranking"] = {[](C& c, S k, S v) {
                             if (v == "closest") c.ranking = RankingDirection::ClosestFirst;
                             else if (v == "farthest") c.ranking = RankingDirection::FarthestFirst;
                             else bad(k, "expected closest|farthest, got '" + v + "'");
                           },
                           [](const C& c) {
                             return std::string(c.ranking == RankingDirection::FarthestFirst ? "farthest" : "closest");
                           }};

    t["delay.delta"] = {[](C& c, S k, S v) { c.delay.delta_tasks = to_uint(k, v); },
                        [](const C& c) { return std::to_string(c.delay.delta_tasks); }};
    t["delay.seen_tasks"] = {[](C& c, S k, S v) { c.delay_seen_tasks = to_bool(k, v); },
                             [](const C& c) { return std::string(c.delay_seen_tasks ? "true" : "false"); }};
    t["delay.train_on_pending"] = {[](C& c, S k, S v) { c.train_on_pending = to_bool(k, v); },
                                   [](const C& c) { return std::string(c.train_on_pending ? "true" : "false"); }};

    t["optim.lr"] = {[](C& c, S k, S v) { c.optimizer.learning_rate = positive(k, v); },
                     [](const C& c) { return fmt(c.optimizer.learning_rate); }};
    t["optim.wd"] = {[](C& c, S k, S v) {
                       c.optimizer.weight_decay = to_double(k, v);
                       if (c.optimizer.weight_decay < 0.0) bad(k, "must be non-negative");
                     },
                     [](const C& c) { return fmt(c.optimizer.weight_decay); }};
    t["optim.batch_size"] = {[](C& c, S k, S v) { c.optimizer.batch_size = to_uint(k, v); },
                             [](const C& c) { return std::to_string(c.optimizer.batch_size); }};
    t["optim.epochs"] = {[](C& c, S k, S v) { c.optimizer.epochs_per_task = to_uint(k, v); },
                         [](const C& c) { return std::to_string(c.optimizer.epochs_per_task); }};
    t["optim.patience"] = {[](C& c, S k, S v) { c.optimizer.patience = to_uint(k, v); },
                           [](const C& c) { return std::to_string(c.optimizer.patience); }};

    t["threshold.tau_max"] = {[](C& c, S k, S v) { c.threshold.tau_max = positive(k, v); },
                              [](const C& c) { return fmt(c.threshold.tau_max); }};
    t["threshold.beta"] = {[](C& c, S k, S v) {
                             c.threshold.beta = to_double(k, v);
                             if (c.threshold.beta < 0.0) bad(k, "must be non-negative");
                           },
                           [](const C& c) { return fmt(c.threshold.beta); }};
    t["threshold.r"] = {[](C& c, S k, S v) {
                          if (v == "auto") c.threshold_r.reset();
                          else c.threshold_r = fraction(k, v);
                        },
                        [](const C& c) { return c.threshold_r ? fmt(*c.threshold_r) : std::string("auto"); }};
    t["threshold.tau_init"] = {[](C& c, S k, S v) {
                                 if (v == "auto") c.threshold.tau_init.reset();
                                 else c.threshold.tau_init = positive(k, v);
                               },
                               [](const C& c) {
                                 return c.threshold.tau_init ? fmt(*c.threshold.tau_init) : std::string("auto");
                               }};
    t["threshold.step"] = {[](C& c, S k, S v) {
                             if (v == "auto") c.threshold.step.reset();
                             else c.threshold.step = positive(k, v);
                           },
                           [](const C& c) { return c.threshold.step ? fmt(*c.threshold.step) : std::string("auto"); }};

    t["gpm.enabled"] = {[](C& c, S k, S v) { c.gpm.enabled = to_bool(k, v); },
                        [](const C& c) { return std::string(c.gpm.enabled ? "true" : "false"); }};
    t["gpm.energy"] = {[](C& c, S k, S v) {
                         c.gpm.energy = fraction(k, v);
                         if (c.gpm.energy == 0.0) bad(k, "must be positive");
                       },
                       [](const C& c) { return fmt(c.gpm.energy); }};
    t["gpm.layerwise"] = {[](C& c, S k, S v) { c.gpm.layerwise = to_bool(k, v); },
                          [](const C& c) { return std::string(c.gpm.layerwise ? "true" : "false"); }};
    t["gpm.max_rank"] = {[](C& c, S k, S v) { c.gpm.max_rank = to_uint(k, v); },
                         [](const C& c) { return std::to_string(c.gpm.max_rank); }};

    t["memory.replay"] = {[](C& c, S k, S v) { c.memory.replay = to_bool(k, v); },
                          [](const C& c) { return std::string(c.memory.replay ? "true" : "false"); }};
    t["memory.b_m"] = {[](C& c, S k, S v) {
                         c.memory.b_m_frac = fraction(k, v);
                         if (c.memory.b_m_frac >= 1.0) bad(k, "must be below 1");
                       },
                       [](const C& c) { return fmt(c.memory.b_m_frac); }};
    t["memory.bma"] = {[](C& c, S k, S v) { c.memory.bma = fraction(k, v); },
                       [](const C& c) { return fmt(c.memory.bma); }};

    t["repspace.energy"] = {[](C& c, S k, S v) {
                              c.repspace_energy = fraction(k, v);
                              if (c.repspace_energy == 0.0) bad(k, "must be positive");
                            },
                            [](const C& c) { return fmt(c.repspace_energy); }};
    t["repspace.svd"] = {[](C& c, S k, S v) { c.svd_enabled = to_bool(k, v); },
                         [](const C& c) { return std::string(c.svd_enabled ? "true" : "false"); }};
    t["pairing.enabled"] = {[](C& c, S k, S v) { c.pairing_enabled = to_bool(k, v); },
                            [](const C& c) { return std::string(c.pairing_enabled ? "true" : "false"); }};
    t["pairing.stop_exemplar_gradient"] = {
        [](C& c, S k, S v) { c.stop_exemplar_gradient = to_bool(k, v); },
        [](const C& c) { return std::string(c.stop_exemplar_gradient ? "true" : "false"); }};

    t["eval.before_adaptation"] = {[](C& c, S k, S v) { c.evaluate_before_adaptation = to_bool(k, v); },
                                   [](const C& c) { return std::string(c.evaluate_before_adaptation ? "true" : "false"); }};
    t["eval.retrospective"] = {[](C& c, S k, S v) { c.retrospective_eval = to_bool(k, v); },
                               [](const C& c) { return std::string(c.retrospective_eval ? "true" : "false"); }};
    t["run.checkpoints"] = {[](C& c, S k, S v) {
                              if (v == "none") c.checkpoints = CheckpointPolicy::None;
                              else if (v == "final") c.checkpoints = CheckpointPolicy::Final;
                              else if (v == "every_task") c.checkpoints = CheckpointPolicy::EveryTask;
                              else bad(k, "expected none|final|every_task, got '" + v + "'");
                            },
                            [](const C& c) {
                              switch (c.checkpoints) {
                                case CheckpointPolicy::None: return std::string("none");
                                case CheckpointPolicy::Final: return std::string("final");
                                case CheckpointPolicy::EveryTask: return std::string("every_task");
                              }
                              return std::string("final");
                            }};
    t["run.seeds"] = {[](C& c, S k, S v) {
                        try {
                          c.seeds = parse_seed_list(v);
                        } catch (const Error& e) {
                          bad(k, e.what());
                        }
                      },
                      [](const C& c) { return join_uints(c.seeds); }};
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) out.push_back(to_uint("seeds", trim(item)));
  if (out.empty()) throw Error(ErrorCode::ConfigParse, "seeds: empty list");
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorCode::ConfigParse, key + ": unknown key");
  it->second.set(cfg, key, value);
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg = preset_config("default");
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_key = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigParse, where + "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "preset") {
        if (saw_key) throw Error(ErrorCode::ConfigParse, "preset: must precede all other keys");
        cfg = preset_config(value);
      } else {
        apply_setting(cfg, key, value);
      }
    } catch (const Error& e) {
      // Re-tag with the location; strip the code prefix of the inner message.
      std::string msg = e.what();
      const auto colon = msg.find(": ");
      if (colon != std::string::npos) msg = msg.substr(colon + 2);
      throw Error(ErrorCode::ConfigParse, where + (key == "preset" && e.code() == ErrorCode::InvalidConfig ? "preset: " : "") + msg);
    }
    saw_key = true;
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigParse, origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_snapshot(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + "=" + field.get(cfg) + "\n";
  return out;
}

}  // namespace seed
