#pragma once

#include "seed/active.hpp"
#include "seed/config.hpp"
#include "seed/data.hpp"
#include "seed/gpm.hpp"
#include "seed/memory.hpp"
#include "seed/metrics.hpp"
#include "seed/model.hpp"
#include "seed/repspace.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace seed {

/// Wall-clock seconds per phase of one task.
struct PhaseTimings {
  double buffer = 0.0;     // delay-queue admission, storage and replay retrieval
  double svd = 0.0;        // representation-space rebuild
  double gpm = 0.0;        // gradient collection, basis update and projection
  double selection = 0.0;  // unseen-task distances, ranking and oracle
  double train = 0.0;      // forward/backward/step including the phases above that run per batch
  double eval = 0.0;
  double total = 0.0;

  PhaseTimings& operator+=(const PhaseTimings& o);
};

struct TaskRecord {
  std::size_t task = 0;
  std::string month;
  bool seen = true;
  double pr_auc_benign = std::numeric_limits<double>::quiet_NaN();
  double pr_auc_malware = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> pre_pr_auc_benign;   // unseen tasks, before adaptation
  std::optional<double> pre_pr_auc_malware;

  std::size_t labeled = 0;          // |D_l| used for supervision
  std::size_t unlabeled = 0;        // |D_u|
  std::size_t oracle_calls = 0;
  std::size_t budget_shortfall = 0; // budget minus pool size when the pool saturates
  std::size_t accepted_pairs = 0;
  std::size_t rejected_pairs = 0;
  std::size_t epochs_run = 0;
  std::size_t steps = 0;
  double best_validation = std::numeric_limits<double>::quiet_NaN();
  std::size_t gpm_rank = 0;
  std::size_t gpm_added = 0;
  AdmissionReport admitted;
  OccupancyReport occupancy;

  // Task-order audit: FNV-1a over the sorted ids of every sample that entered
  // a gradient computation during this task, and the newest task index among them.
  std::uint64_t consumed_checksum = 0;
  std::size_t consumed_count = 0;
  std::size_t consumed_max_task = 0;
  bool test_leak = false;  // a test/validation id showed up among consumed samples

  PhaseTimings timings;
};

struct SelectionRecord {
  std::size_t task = 0;
  SampleId sample_id = 0;
  double d0 = 0.0;
  double d1 = 0.0;
  std::string label_source;
  int label = 0;
};

/// Test PR-AUC of task `eval_task` measured after training on `after_task`.
struct RetroRecord {
  std::size_t after_task = 0;
  std::size_t eval_task = 0;
  double pr_auc_benign = 0.0;
  double pr_auc_malware = 0.0;
};

struct AutSummary {
  double seen_b = 0.0, seen_a = 0.0;
  double unseen_b = 0.0, unseen_a = 0.0;
  double overall_b = 0.0, overall_a = 0.0;

  std::vector<double> values() const { return {seen_b, seen_a, unseen_b, unseen_a, overall_b, overall_a}; }
  static AutSummary from_values(const std::vector<double>& v);
};

/// aut() that tolerates a single-task series (returns its value) and skips
/// tasks whose PR-AUC was undefined.
double series_aut(const std::vector<double>& series);

AutSummary summarize(const std::vector<TaskRecord>& tasks);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<TaskRecord> tasks;
  std::vector<SelectionRecord> selections;
  std::vector<RetroRecord> retro;
  AutSummary aut;
  PhaseTimings timings;
};

struct RunArtifacts {
  ExperimentConfig config;
  std::vector<SeedRun> runs;
  AutSummary mean;
  AutSummary stddev;  // population standard deviation over seeds
};

/// Mutable state carried from task to task within one seed.
struct TrainerState {
  ModelParams model;
  BufferMemory memory;
  GpmStore gpm;
  Rng rng;             // batches, dropout, replay retrieval
  Rng oracle_rng;      // noisy oracle flips
  std::size_t tasks_trained = 0;
  std::vector<std::size_t> seen_test_tasks;
};

TrainerState init_state(const ExperimentConfig& cfg, std::size_t input_dim, std::uint64_t seed);

/// Algorithm 1 on one task whose labelled part is already in `task.labeled`.
void train_seen_task(TrainerState& state, const TaskData& task, const ExperimentConfig& cfg, TaskRecord& rec);

/// Rank, buy labels, then train like a seen task. `task` must arrive unlabelled
/// (everything in `task.unlabeled`).
void run_unseen_task(TrainerState& state, const TaskData& task, const ExperimentConfig& cfg, TaskRecord& rec,
                     std::vector<SelectionRecord>& selections);

/// PR-AUC of both classes on a test split (NaN when the class is absent).
std::pair<double, double> evaluate_split(const ModelParams& m, const std::vector<Sample>& split);

struct RunOptions {
  std::string checkpoint_dir;      // empty: no checkpoints
  std::ostream* log = nullptr;     // progress lines
  /// Called after each task with the state just trained (tests use this for audits).
  std::function<void(std::uint64_t seed, std::size_t task, const TrainerState&)> on_task_end;
};

/// Builds (or loads) the stream for `seed`, masks seen tasks to the configured
/// label ratio and strips all labels from unseen tasks.
std::vector<TaskData> prepare_stream(const ExperimentConfig& cfg, std::uint64_t seed);

SeedRun run_single_seed(const ExperimentConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});
RunArtifacts run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace seed
