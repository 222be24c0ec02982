#pragma once

#include "seed/trainer.hpp"

#include <map>
#include <string>
#include <vector>

namespace seed {

inline const std::vector<std::string>& aut_column_names() {
  static const std::vector<std::string> names{"seen-AUT(B)",   "seen-AUT(A)",    "unseen-AUT(B)",
                                              "unseen-AUT(A)", "overall-AUT(B)", "overall-AUT(A)"};
  return names;
}

/// Writes config.snapshot, metrics.csv, selections.csv, memory.csv, timings.csv
/// (and retro.csv when retrospective evaluation ran) into `dir`. Every file
/// except timings.csv is a deterministic function of config and seeds.
void write_run_directory(const std::string& dir, const RunArtifacts& art);

/// Rendering used by write_run_directory; exposed for tests.
std::string format_metrics_csv(const RunArtifacts& art);
std::string format_selections_csv(const RunArtifacts& art);
std::string format_memory_csv(const RunArtifacts& art);
std::string format_timings_csv(const RunArtifacts& art);

struct MetricsRow {
  std::size_t task = 0;
  std::string split;
  std::uint64_t seed = 0;
  std::string month;
  double pr_auc_benign = 0.0;
  double pr_auc_malware = 0.0;
};

struct MetricsFile {
  std::vector<MetricsRow> rows;
  std::map<std::string, AutSummary> summary;  // "seed=<s>", "mean", "std"
};

/// Throws MissingMetrics when the file is absent or lacks the summary block.
MetricsFile read_metrics_csv(const std::string& path);

struct SelectionRow {
  std::uint64_t seed = 0;
  std::size_t task = 0;
  SampleId sample_id = 0;
  double d0 = 0.0;
  double d1 = 0.0;
  std::string label_source;
  int label = 0;
};

std::vector<SelectionRow> read_selections_csv(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace seed
