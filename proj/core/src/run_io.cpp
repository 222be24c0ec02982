#include "seed/run_io.hpp"

#include "seed/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace seed {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedRow, where + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    f << text;
    if (!f) {
      std::remove(tmp.c_str());
      throw Error(ErrorCode::IoError, "short write to '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename into '" + path.string() + "': " + ec.message());
}

std::string summary_line(const std::string& label, const AutSummary& s) {
  std::string out = label;
  for (double v : s.values()) out += "," + format_double(v);
  return out + "\n";
}

}  // namespace

std::string format_metrics_csv(const RunArtifacts& art) {
  std::string out = "task,split,seed,month,pr_auc_benign,pr_auc_malware\n";
  for (const SeedRun& r : art.runs) {
    for (const TaskRecord& t : r.tasks) {
      out += std::to_string(t.task) + "," + (t.seen ? "seen" : "unseen") + "," + std::to_string(r.seed) + "," +
             t.month + "," + format_double(t.pr_auc_benign) + "," + format_double(t.pr_auc_malware) + "\n";
    }
  }
  out += "\nsummary";
  for (const auto& name : aut_column_names()) out += "," + name;
  out += "\n";
  for (const SeedRun& r : art.runs) out += summary_line("seed=" + std::to_string(r.seed), r.aut);
  out += summary_line("mean", art.mean);
  out += summary_line("std", art.stddev);
  return out;
}

std::string format_selections_csv(const RunArtifacts& art) {
  std::string out = "seed,task,sample_id,d0,d1,label_source,label\n";
  for (const SeedRun& r : art.runs) {
    for (const SelectionRecord& s : r.selections) {
      out += std::to_string(r.seed) + "," + std::to_string(s.task) + "," + std::to_string(s.sample_id) + "," +
             format_double(s.d0) + "," + format_double(s.d1) + "," + s.label_source + "," + std::to_string(s.label) +
             "\n";
    }
  }
  return out;
}

std::string format_memory_csv(const RunArtifacts& art) {
  std::string out =
      "seed,task,chunks,benign,malware,queued_entries,queued_samples,admitted,relabeled,labeled,unlabeled,"
      "oracle_calls,budget_shortfall,accepted_pairs,rejected_pairs,gpm_rank,epochs,steps,consumed,consumed_checksum\n";
  for (const SeedRun& r : art.runs) {
    for (const TaskRecord& t : r.tasks) {
      const auto& o = t.occupancy;
      out += std::to_string(r.seed) + "," + std::to_string(t.task) + "," + std::to_string(o.chunks) + "," +
             std::to_string(o.benign) + "," + std::to_string(o.malware) + "," + std::to_string(o.queued_entries) + "," +
             std::to_string(o.queued_samples) + "," + std::to_string(t.admitted.samples) + "," +
             std::to_string(t.admitted.relabeled) + "," + std::to_string(t.labeled) + "," +
             std::to_string(t.unlabeled) + "," + std::to_string(t.oracle_calls) + "," +
             std::to_string(t.budget_shortfall) + "," + std::to_string(t.accepted_pairs) + "," +
             std::to_string(t.rejected_pairs) + "," + std::to_string(t.gpm_rank) + "," +
             std::to_string(t.epochs_run) + "," + std::to_string(t.steps) + "," + std::to_string(t.consumed_count) +
             "," + std::to_string(t.consumed_checksum) + "\n";
    }
  }
  return out;
}

std::string format_timings_csv(const RunArtifacts& art) {
  std::string out = "seed,task,buffer_s,svd_s,gpm_s,selection_s,train_s,eval_s,total_s\n";
  auto row = [&](const std::string& seed, const std::string& task, const PhaseTimings& p) {
    out += seed + "," + task + "," + format_double(p.buffer) + "," + format_double(p.svd) + "," +
           format_double(p.gpm) + "," + format_double(p.selection) + "," + format_double(p.train) + "," +
           format_double(p.eval) + "," + format_double(p.total) + "\n";
  };
  for (const SeedRun& r : art.runs) {
    for (const TaskRecord& t : r.tasks) row(std::to_string(r.seed), std::to_string(t.task), t.timings);
    row(std::to_string(r.seed), "all", r.timings);
  }
  return out;
}

void write_run_directory(const std::string& dir, const RunArtifacts& art) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "checkpoints", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create run directory '" + dir + "': " + ec.message());
  const fs::path root(dir);
  write_file(root / "config.snapshot", to_snapshot(art.config));
  write_file(root / "metrics.csv", format_metrics_csv(art));
  write_file(root / "selections.csv", format_selections_csv(art));
  write_file(root / "memory.csv", format_memory_csv(art));
  write_file(root / "timings.csv", format_timings_csv(art));
  bool retro = false;
  for (const SeedRun& r : art.runs) retro = retro || !r.retro.empty();
  if (retro) {
    std::string out = "seed,after_task,eval_task,pr_auc_benign,pr_auc_malware\n";
    for (const SeedRun& r : art.runs) {
      for (const RetroRecord& x : r.retro) {
        out += std::to_string(r.seed) + "," + std::to_string(x.after_task) + "," + std::to_string(x.eval_task) + "," +
               format_double(x.pr_auc_benign) + "," + format_double(x.pr_auc_malware) + "\n";
      }
    }
    write_file(root / "retro.csv", out);
  }
}

MetricsFile read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::MissingMetrics, "no metrics file at '" + path + "'");
  MetricsFile out;
  std::string line;
  std::size_t lineno = 0;
  bool in_summary = false;
  bool header_seen = false;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      if (cells.empty() || cells[0] != "task") throw Error(ErrorCode::MissingMetrics, where + ": unexpected header");
      header_seen = true;
      continue;
    }
    if (cells[0] == "summary") {
      in_summary = true;
      continue;
    }
    if (in_summary) {
      if (cells.size() != 7) throw Error(ErrorCode::MalformedRow, where + ": summary row needs 7 cells");
      std::vector<double> v;
      for (std::size_t i = 1; i < 7; ++i) v.push_back(parse_double(cells[i], where));
      out.summary[cells[0]] = AutSummary::from_values(v);
    } else {
      if (cells.size() != 6) throw Error(ErrorCode::MalformedRow, where + ": metrics row needs 6 cells");
      MetricsRow r;
      r.task = static_cast<std::size_t>(std::stoull(cells[0]));
      r.split = cells[1];
      r.seed = std::stoull(cells[2]);
      r.month = cells[3];
      r.pr_auc_benign = parse_double(cells[4], where);
      r.pr_auc_malware = parse_double(cells[5], where);
      out.rows.push_back(std::move(r));
    }
  }
  if (!out.summary.count("mean")) throw Error(ErrorCode::MissingMetrics, path + ": no summary block");
  return out;
}

std::vector<SelectionRow> read_selections_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<SelectionRow> out;
  std::string line;
  std::getline(f, line);
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (c.size() != 7) throw Error(ErrorCode::MalformedRow, where + ": selection row needs 7 cells");
    out.push_back({std::stoull(c[0]), static_cast<std::size_t>(std::stoull(c[1])), std::stoll(c[2]),
                   parse_double(c[3], where), parse_double(c[4], where), c[5], std::stoi(c[6])});
  }
  return out;
}

}  // namespace seed
