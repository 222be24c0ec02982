#pragma once

#include "seed/active.hpp"
#include "seed/data.hpp"
#include "seed/memory.hpp"
#include "seed/model.hpp"
#include "seed/repspace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seed {

struct GpmSettings {
  bool enabled = true;
  double energy = 0.99;
  bool layerwise = true;
  std::size_t max_rank = 0;  // 0 = no cap
};

struct MemorySettings {
  bool replay = true;        // draw B_m from the buffer during training
  double b_m_frac = 0.5;     // share of each batch taken from memory
  double bma = 0.8;          // share of B_m that is malware
};

enum class CheckpointPolicy { None, Final, EveryTask };

/// Everything one experiment needs. The stream seed is taken from `seeds`.
struct ExperimentConfig {
  std::string name = "seed";
  std::string dataset_csv;  // empty: synthetic stream
  StreamConfig stream;      // seen_tasks, label_ratio and noise_ratio live here
  Architecture arch = Architecture::detector(200);  // input_dim follows the data

  std::size_t monthly_budget = 100;
  OracleKind oracle;
  DistanceStrategy distance = DistanceStrategy::AllSamples;
  RankingDirection ranking = RankingDirection::ClosestFirst;

  DelayPolicy delay;
  bool delay_seen_tasks = false;
  bool train_on_pending = false;  // use labels still waiting in the delay queue for L_sup

  OptimizerConfig optimizer;
  ThresholdConfig threshold;
  std::optional<double> threshold_r;  // unset: follow stream.label_ratio
  GpmSettings gpm;
  MemorySettings memory;
  double repspace_energy = 0.95;
  bool svd_enabled = true;
  bool pairing_enabled = true;
  bool stop_exemplar_gradient = false;

  bool evaluate_before_adaptation = false;
  bool retrospective_eval = false;
  CheckpointPolicy checkpoints = CheckpointPolicy::Final;
  std::vector<std::uint64_t> seeds{1};

  /// Cross-field checks; throws InvalidConfig.
  void validate() const;
  ThresholdConfig effective_threshold() const;
};

/// "default", "bodmas-like", "androzoo-like", "apigraph-like". Throws InvalidConfig.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Sets one dotted key. Throws ConfigParse naming the key for unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// key=value lines, '#' comments. An optional `preset=` line must precede other keys.
/// Errors carry "<origin>:<line>: <key>: ..." in the message.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Every key with its current value; parse_config(to_snapshot(c)) reproduces c.
std::string to_snapshot(const ExperimentConfig& cfg);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace seed
