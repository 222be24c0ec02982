#include "seed/data.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace seed {

void StreamConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, "stream: " + what); };
  if (n_tasks == 0) fail("n_tasks must be >= 1");
  if (seen_tasks > n_tasks) fail("seen_tasks exceeds n_tasks");
  if (samples_per_task < 2) fail("samples_per_task must be >= 2");
  if (!(class_imbalance > 0.0)) fail("class_imbalance must be positive");
  if (feature_dim == 0) fail("feature_dim must be >= 1");
  if (!(label_ratio >= 0.0 && label_ratio <= 1.0)) fail("label_ratio must lie in [0,1]");
  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0)) fail("noise_ratio must lie in [0,1]");
  if (!(mean_shift >= 0.0)) fail("mean_shift must be non-negative");
  if (!(cluster_spread > 0.0)) fail("cluster_spread must be positive");
  if (!(drift_correlation >= -1.0 && drift_correlation <= 1.0)) fail("drift_correlation must lie in [-1,1]");
  if (start_month.size() != 7 || start_month[4] != '-') fail("start_month must be YYYY-MM");
}

namespace {

bool valid_month(std::string_view m) {
  if (m.size() != 7 || m[4] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u})
    if (m[i] < '0' || m[i] > '9') return false;
  const int month = (m[5] - '0') * 10 + (m[6] - '0');
  return month >= 1 && month <= 12;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

Vec64 unit_direction(Rng& rng, std::size_t dim) {
  Vec64 v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = standard_normal(rng);
  return v / v.norm();
}

struct Directions {
  Vec64 separation, benign_drift, malware_drift;
};

Directions synthetic_directions(const StreamConfig& cfg) {
  Rng rng(cfg.seed ^ 0x5eed'd1a7'0000'0001ULL);
  Directions d;
  d.separation = unit_direction(rng, cfg.feature_dim);
  d.benign_drift = unit_direction(rng, cfg.feature_dim);
  const Vec64 own = unit_direction(rng, cfg.feature_dim);
  Vec64 ortho = own - own.dot(d.benign_drift) * d.benign_drift;
  const double on = ortho.norm();
  ortho = on > 0.0 ? Vec64(ortho / on) : d.benign_drift;
  const double rho = cfg.drift_correlation;
  d.malware_drift = rho * d.benign_drift + std::sqrt(1.0 - rho * rho) * ortho;
  return d;
}

}  // namespace

std::string add_months(const std::string& yyyy_mm, std::size_t k) {
  if (!valid_month(yyyy_mm)) throw Error(ErrorCode::InvalidArgument, "bad month '" + yyyy_mm + "'");
  int year = std::stoi(yyyy_mm.substr(0, 4));
  int month = std::stoi(yyyy_mm.substr(5, 2)) - 1 + static_cast<int>(k);
  year += month / 12;
  month %= 12;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month + 1);
  return buf;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DatasetMissing, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, path + ": empty file, no header");
  const auto header = split_commas(line);
  const char* required[] = {"id", "month", "label"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (header.size() <= i || header[i] != required[i]) {
      throw Error(ErrorCode::MissingColumn, path + ": header column " + std::to_string(i) + " must be '" + required[i] + "'");
    }
  }
  const std::size_t dim = header.size() - 3;
  if (dim == 0) throw Error(ErrorCode::MissingColumn, path + ": no feature columns");
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[3 + j] != "f" + std::to_string(j)) {
      throw Error(ErrorCode::MissingColumn, path + ": expected column 'f" + std::to_string(j) + "'");
    }
  }

  struct Row {
    std::string month;
    Sample sample;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                               std::to_string(fields.size()));
    }
    Row r;
    if (!parse_number(fields[0], r.sample.id)) throw Error(ErrorCode::MalformedRow, where + ": bad id");
    if (!valid_month(fields[1])) throw Error(ErrorCode::MalformedRow, where + ": month must be YYYY-MM");
    r.month = std::string(fields[1]);
    if (fields[2] != "0" && fields[2] != "1") throw Error(ErrorCode::MalformedRow, where + ": label must be 0 or 1");
    r.sample.true_label = fields[2] == "1" ? 1 : 0;
    r.sample.features.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!parse_number(fields[3 + j], v) || !std::isfinite(v)) {
        throw Error(ErrorCode::NonNumericFeature, where + ": column f" + std::to_string(j));
      }
      r.sample.features[static_cast<Eigen::Index>(j)] = v;
    }
    rows.push_back(std::move(r));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.month != b.month ? a.month < b.month : a.sample.id < b.sample.id;
  });

  Dataset out;
  out.feature_dim = dim;
  for (Row& r : rows) {
    if (out.months.empty() || out.months.back() != r.month) out.months.push_back(r.month);
    r.sample.task_index = out.months.size() - 1;
    r.sample.observed_label = r.sample.true_label;
    out.samples.push_back(std::move(r.sample));
  }
  return out;
}

void write_csv_dataset(const std::string& path, const Dataset& data) {
  // Write to a sibling temp file first so a failure leaves no partial output.
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << "id,month,label";
    for (std::size_t j = 0; j < data.feature_dim; ++j) out << ",f" << j;
    out << '\n';
    char buf[64];
    for (const Sample& s : data.samples) {
      out << s.id << ',' << data.months.at(s.task_index) << ',' << s.true_label;
      for (Eigen::Index j = 0; j < s.features.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", s.features[j]);
        out << ',' << buf;
      }
      out << '\n';
    }
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "write failed for " + path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move output into place: " + path);
  }
}

std::vector<TaskData> make_tasks(const Dataset& data, std::uint64_t split_seed) {
  std::size_t n_tasks = data.months.size();
  for (const Sample& s : data.samples) n_tasks = std::max(n_tasks, s.task_index + 1);
  std::vector<std::vector<const Sample*>> by_task(n_tasks);
  for (const Sample& s : data.samples) by_task[s.task_index].push_back(&s);

  std::vector<TaskData> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    auto& members = by_task[t];
    if (members.empty()) throw Error(ErrorCode::EmptyTask, "task " + std::to_string(t) + " has no samples");
    Rng rng(split_seed * 0x9E3779B97F4A7C15ULL + t);
    shuffle(members, rng);
    const std::size_t n = members.size();
    const auto n_train = static_cast<std::size_t>(std::floor(0.70 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n)));

    TaskData task;
    task.index = t;
    task.month = t < data.months.size() ? data.months[t] : std::string();
    for (std::size_t i = 0; i < n; ++i) {
      Sample s = *members[i];
      s.task_index = t;
      if (i < n_train) {
        s.observed_label = s.true_label;
        task.labeled.push_back(std::move(s));
      } else if (i < n_train + n_val) {
        task.validation.push_back(std::move(s));
      } else {
        task.test.push_back(std::move(s));
      }
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

TaskData mask_labels(TaskData task, double label_ratio, Rng& rng) {
  if (!(label_ratio >= 0.0 && label_ratio <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mask_labels: ratio outside [0,1]");
  std::vector<Sample> train;
  train.reserve(task.train_size());
  for (Sample& s : task.labeled) train.push_back(std::move(s));
  for (Sample& s : task.unlabeled) train.push_back(std::move(s));
  const auto keep = static_cast<std::size_t>(std::llround(label_ratio * static_cast<double>(train.size())));

  std::vector<std::size_t> picked = sample_without_replacement(train.size(), keep, rng);
  std::vector<char> is_labeled(train.size(), 0);
  for (std::size_t i : picked) is_labeled[i] = 1;

  task.labeled.clear();
  task.unlabeled.clear();
  for (std::size_t i = 0; i < train.size(); ++i) {
    Sample& s = train[i];
    if (is_labeled[i]) {
      if (!s.observed_label) s.observed_label = s.true_label;
      task.labeled.push_back(std::move(s));
    } else {
      s.observed_label.reset();
      task.unlabeled.push_back(std::move(s));
    }
  }
  return task;
}

std::pair<TaskData, NoiseRecord> inject_label_noise(TaskData task, double noise_ratio, Rng& rng) {
  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "inject_label_noise: ratio outside [0,1]");
  }
  NoiseRecord record;
  const auto flips = static_cast<std::size_t>(std::llround(noise_ratio * static_cast<double>(task.labeled.size())));
  for (std::size_t i : sample_without_replacement(task.labeled.size(), flips, rng)) {
    Sample& s = task.labeled[i];
    const int original = s.observed_label.value_or(s.true_label);
    const int flipped = 1 - original;
    s.observed_label = flipped;
    record.emplace(s.id, std::make_pair(original, flipped));
  }
  return {std::move(task), std::move(record)};
}

Vec64 synthetic_class_mean(const StreamConfig& cfg, std::size_t task, int label) {
  const Directions d = synthetic_directions(cfg);
  const double drift = static_cast<double>(task) * cfg.mean_shift;
  if (label == 1) return cfg.class_separation * d.separation + drift * d.malware_drift;
  return drift * d.benign_drift;
}

Dataset gen_synthetic_dataset(const StreamConfig& cfg) {
  cfg.validate();
  const Directions d = synthetic_directions(cfg);
  Rng rng(cfg.seed);
  Dataset out;
  out.feature_dim = cfg.feature_dim;

  const auto n_mal = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.samples_per_task) / (cfg.class_imbalance + 1.0)));
  const std::size_t n_ben = cfg.samples_per_task - n_mal;
  SampleId next_id = 0;
  for (std::size_t t = 0; t < cfg.n_tasks; ++t) {
    out.months.push_back(add_months(cfg.start_month, t));
    const double drift = static_cast<double>(t) * cfg.mean_shift;
    const Vec64 mu_b = drift * d.benign_drift;
    const Vec64 mu_m = cfg.class_separation * d.separation + drift * d.malware_drift;
    for (std::size_t i = 0; i < n_ben + n_mal; ++i) {
      const int label = i < n_ben ? 0 : 1;
      const Vec64& mu = label == 1 ? mu_m : mu_b;
      Sample s;
      s.id = next_id++;
      s.task_index = t;
      s.true_label = label;
      s.observed_label = label;
      s.features.resize(static_cast<Eigen::Index>(cfg.feature_dim));
      for (Eigen::Index j = 0; j < s.features.size(); ++j) s.features[j] = mu[j] + cfg.cluster_spread * standard_normal(rng);
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<TaskData> gen_synthetic_stream(const StreamConfig& cfg) {
  return make_tasks(gen_synthetic_dataset(cfg), cfg.seed);
}

Mat64 stack_features(const std::vector<Sample>& samples) {
  if (samples.empty()) return {};
  Mat64 out(static_cast<Eigen::Index>(samples.size()), samples.front().features.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = samples[i].features.transpose();
  return out;
}

Mat64 stack_features(const std::vector<const Sample*>& samples) {
  if (samples.empty()) return {};
  Mat64 out(static_cast<Eigen::Index>(samples.size()), samples.front()->features.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = samples[i]->features.transpose();
  return out;
}

}  // namespace seed
