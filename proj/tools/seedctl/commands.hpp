#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace seedctl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct GenOptions {
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> settings;  // key=value overrides
};

struct RunOptions {
  std::string config;
  std::string preset;
  std::string out;
  std::string seeds;
  std::vector<std::string> settings;
  bool quiet = false;
};

struct ReportOptions {
  std::vector<std::string> runs;
  std::string format = "markdown";
};

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err);

}  // namespace seedctl
