#pragma once

#include "seed/numerics.hpp"
#include "seed/random.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seed {

using SampleId = std::int64_t;

struct Sample {
  SampleId id = 0;
  Vec64 features;
  int true_label = 0;                 // hidden from training; used by oracles and evaluation
  std::optional<int> observed_label;  // present iff the sample is labelled for training
  std::size_t task_index = 0;
};

/// One task's partitions: labelled / unlabelled training data plus held-out splits.
struct TaskData {
  std::size_t index = 0;
  std::string month;
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;
  std::vector<Sample> validation;
  std::vector<Sample> test;

  std::size_t train_size() const { return labeled.size() + unlabeled.size(); }
  std::size_t size() const { return train_size() + validation.size() + test.size(); }
};

/// Samples in stream order with the month string of every task index.
struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> months;
  std::size_t feature_dim = 0;
};

/// Parameters of the synthetic drifting stream.
struct StreamConfig {
  std::size_t n_tasks = 12;
  std::size_t seen_tasks = 5;
  std::size_t samples_per_task = 1000;
  double class_imbalance = 9.0;  // benign : malware
  std::size_t feature_dim = 200;
  double label_ratio = 0.2;
  double noise_ratio = 0.0;
  double mean_shift = 0.35;      // per-task translation of each class mean
  double cluster_spread = 1.0;   // per-feature standard deviation
  double class_separation = 3.0; // distance between the task-0 class means
  double drift_correlation = 0.9; // cosine between the benign and malware drift directions
  std::string start_month = "2019-01";
  std::uint64_t seed = 1;

  void validate() const;
};

/// id -> (original observed label, flipped label)
using NoiseRecord = std::map<SampleId, std::pair<int, int>>;

/// Reads `id,month,label,f0,...,f{d-1}`. Months map to consecutive task indices.
Dataset load_csv_dataset(const std::string& path);

/// Writes the same schema; features use round-trip ("%.17g") formatting.
void write_csv_dataset(const std::string& path, const Dataset& data);

/// Groups samples by task index and splits each task 70/5/25 after a seeded
/// shuffle. All training samples start labelled (observed = true label).
std::vector<TaskData> make_tasks(const Dataset& data, std::uint64_t split_seed);

/// Keeps round(ratio * |train|) training samples labelled; the rest move to
/// `unlabeled` without an observed label. Validation/test are untouched.
TaskData mask_labels(TaskData task, double label_ratio, Rng& rng);

/// Flips round(ratio * |labeled|) observed labels and records each flip.
std::pair<TaskData, NoiseRecord> inject_label_noise(TaskData task, double noise_ratio, Rng& rng);

/// Gaussian benign/malware clusters whose means translate every task.
Dataset gen_synthetic_dataset(const StreamConfig& cfg);

/// Cluster centre of class `label` at task `task` for the stream described by `cfg`.
Vec64 synthetic_class_mean(const StreamConfig& cfg, std::size_t task, int label);

/// gen_synthetic_dataset + make_tasks (unmasked).
std::vector<TaskData> gen_synthetic_stream(const StreamConfig& cfg);

/// Rows of `samples`' feature vectors stacked into a matrix.
Mat64 stack_features(const std::vector<Sample>& samples);
Mat64 stack_features(const std::vector<const Sample*>& samples);

/// "2019-01" + k months.
std::string add_months(const std::string& yyyy_mm, std::size_t k);

}  // namespace seed
