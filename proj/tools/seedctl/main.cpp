#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"seedctl: semi-supervised continual malware detection experiments"};
  app.require_subcommand(1);

  seedctl::GenOptions gen;
  auto* g = app.add_subcommand("gen", "Write a synthetic drifting stream as CSV (id,month,label,f0..)");
  g->add_option("--out", gen.out, "Output CSV path")->required();
  g->add_option("--config", gen.config, "Config file; its stream.* keys shape the stream");
  g->add_option("--seed", gen.seed, "Stream seed (default: first entry of run.seeds)");
  g->add_option("--set", gen.settings, "Override a config key, e.g. --set stream.n_tasks=6 (repeatable)");

  seedctl::RunOptions run;
  auto* r = app.add_subcommand("run", "Run an experiment and write its run directory");
  r->add_option("--config", run.config, "Config file of key=value lines");
  r->add_option("--preset", run.preset, "default | bodmas-like | androzoo-like | apigraph-like (instead of --config)");
  r->add_option("--out", run.out, "Run directory to create")->required();
  r->add_option("--seeds", run.seeds, "Comma-separated seeds, overrides run.seeds");
  r->add_option("--set", run.settings, "Override a config key (repeatable)");
  r->add_flag("--quiet", run.quiet, "Suppress per-task progress on standard error");

  seedctl::ReportOptions report;
  auto* p = app.add_subcommand("report", "Tabulate the six AUT columns of finished runs");
  p->add_option("--runs", report.runs, "Run directories")->required();
  p->add_option("--format", report.format, "csv | markdown")->check(CLI::IsMember({"csv", "markdown"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? seedctl::kExitOk : seedctl::kExitUsage;
  }

  if (*g) return seedctl::cmd_gen(gen, std::cout, std::cerr);
  if (*r) return seedctl::cmd_run(run, std::cout, std::cerr);
  return seedctl::cmd_report(report, std::cout, std::cerr);
}
