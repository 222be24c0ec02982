#include "commands.hpp"

#include <seed/config.hpp>
#include <seed/data.hpp>
#include <seed/error.hpp>
#include <seed/run_io.hpp>
#include <seed/trainer.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>

namespace seedctl {

namespace {

bool is_config_error(seed::ErrorCode c) {
  using seed::ErrorCode;
  return c == ErrorCode::ConfigParse || c == ErrorCode::InvalidConfig;
}

int fail(const seed::Error& e, std::ostream& err) {
  err << "seedctl: " << e.what() << "\n";
  return is_config_error(e.code()) ? kExitUsage : kExitRuntime;
}

seed::ExperimentConfig build_config(const std::string& path, const std::string& preset,
                                    const std::vector<std::string>& settings) {
  seed::ExperimentConfig cfg = path.empty() ? seed::preset_config(preset.empty() ? "default" : preset)
                                            : seed::load_config(path);
  if (!path.empty() && !preset.empty()) {
    throw seed::Error(seed::ErrorCode::ConfigParse, "--preset and --config are mutually exclusive");
  }
  for (const std::string& kv : settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw seed::Error(seed::ErrorCode::ConfigParse, "--set expects key=value, got '" + kv + "'");
    seed::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  try {
    cfg.validate();
  } catch (const seed::Error& e) {
    throw seed::Error(seed::ErrorCode::ConfigParse, e.what());
  }
  return cfg;
}

std::string pm(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", mean, sd);
  return buf;
}

}  // namespace

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  try {
    seed::ExperimentConfig cfg = build_config(o.config, "", o.settings);
    seed::StreamConfig sc = cfg.stream;
    sc.seed = o.seed.value_or(cfg.seeds.front());
    const seed::Dataset data = seed::gen_synthetic_dataset(sc);
    seed::write_csv_dataset(o.out, data);
    out << "wrote " << data.samples.size() << " rows, " << data.months.size() << " tasks, " << data.feature_dim
        << " features to " << o.out << "\n";
    return kExitOk;
  } catch (const seed::Error& e) {
    return fail(e, err);
  }
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  try {
    seed::ExperimentConfig cfg = build_config(o.config, o.preset, o.settings);
    if (!o.seeds.empty()) cfg.seeds = seed::parse_seed_list(o.seeds);
    if (!cfg.dataset_csv.empty() && !std::filesystem::exists(cfg.dataset_csv)) {
      throw seed::Error(seed::ErrorCode::DatasetMissing, "dataset '" + cfg.dataset_csv + "' does not exist");
    }
    seed::RunOptions ro;
    ro.checkpoint_dir = (std::filesystem::path(o.out) / "checkpoints").string();
    if (!o.quiet) ro.log = &err;
    const seed::RunArtifacts art = seed::run_experiment(cfg, ro);
    seed::write_run_directory(o.out, art);

    const auto& names = seed::aut_column_names();
    const auto mean = art.mean.values();
    const auto sd = art.stddev.values();
    out << "run " << cfg.name << " (" << art.runs.size() << " seed" << (art.runs.size() == 1 ? "" : "s") << ") -> "
        << o.out << "\n";
    for (std::size_t k = 0; k < names.size(); ++k) out << "  " << names[k] << " = " << pm(mean[k], sd[k]) << "\n";
    return kExitOk;
  } catch (const seed::Error& e) {
    return fail(e, err);
  }
}

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err) {
  if (o.format != "csv" && o.format != "markdown") {
    err << "seedctl: --format must be csv or markdown\n";
    return kExitUsage;
  }
  try {
    struct Row {
      std::string name;
      seed::AutSummary mean;
      seed::AutSummary sd;
    };
    std::vector<Row> rows;
    for (const std::string& dir : o.runs) {
      const auto mf = seed::read_metrics_csv((std::filesystem::path(dir) / "metrics.csv").string());
      std::string name = std::filesystem::path(dir).lexically_normal().filename().string();
      if (name.empty()) name = std::filesystem::path(dir).lexically_normal().parent_path().filename().string();
      const auto sd = mf.summary.count("std") ? mf.summary.at("std") : seed::AutSummary{};
      rows.push_back({name, mf.summary.at("mean"), sd});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.name < b.name; });

    const auto& names = seed::aut_column_names();
    if (o.format == "csv") {
      out << "run";
      for (const auto& n : names) out << "," << n;
      out << "\n";
      for (const Row& r : rows) {
        out << r.name;
        for (double v : r.mean.values()) out << "," << seed::format_double(v);
        out << "\n";
      }
    } else {
      out << "| run |";
      for (const auto& n : names) out << " " << n << " |";
      out << "\n|---|";
      for (std::size_t i = 0; i < names.size(); ++i) out << "---|";
      out << "\n";
      for (const Row& r : rows) {
        out << "| " << r.name << " |";
        const auto m = r.mean.values();
        const auto s = r.sd.values();
        for (std::size_t k = 0; k < m.size(); ++k) out << " " << pm(m[k], s[k]) << " |";
        out << "\n";
      }
    }
    return kExitOk;
  } catch (const seed::Error& e) {
    return fail(e, err);
  }
}

}  // namespace seedctl
