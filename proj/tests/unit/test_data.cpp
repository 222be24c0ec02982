#include <seed/data.hpp>
#include <seed/error.hpp>

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace seed;
namespace fs = std::filesystem;

namespace {

std::string write_file(const std::string& name, const std::string& body) {
  fs::create_directories(TEST_TMP_DIR);
  const std::string path = std::string(TEST_TMP_DIR) + "/" + name;
  std::ofstream(path) << body;
  return path;
}

ErrorCode load_error(const std::string& body) {
  try {
    load_csv_dataset(write_file("bad.csv", body));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for:\n" << body;
  return ErrorCode::InvalidArgument;
}

Dataset flat_dataset(std::size_t n, std::size_t months) {
  Dataset d;
  d.feature_dim = 1;
  for (std::size_t m = 0; m < months; ++m) d.months.push_back(add_months("2020-01", m));
  for (std::size_t i = 0; i < n * months; ++i) {
    d.samples.push_back(fixture::sample(static_cast<SampleId>(i), i % 10 == 0, i / n, fixture::vec({double(i)})));
  }
  return d;
}

std::set<SampleId> ids(const std::vector<Sample>& v) {
  std::set<SampleId> out;
  for (const auto& s : v) out.insert(s.id);
  return out;
}

StreamConfig small_stream() {
  StreamConfig c;
  c.n_tasks = 4;
  c.seen_tasks = 2;
  c.samples_per_task = 200;
  c.feature_dim = 8;
  return c;
}

}  // namespace

TEST(LoadCsv, WellFormed) {
  const std::string path = write_file("ok.csv", "id,month,label,f0,f1\n7,2019-02,1,0.5,-1e-3\n3,2019-01,0,1,2\n");
  const Dataset d = load_csv_dataset(path);
  ASSERT_EQ(d.samples.size(), 2u);
  EXPECT_EQ(d.feature_dim, 2u);
  EXPECT_EQ(d.samples[0].id, 3);
  EXPECT_EQ(d.samples[0].task_index, 0u);
  EXPECT_EQ(d.samples[1].id, 7);
  EXPECT_EQ(d.samples[1].true_label, 1);
  EXPECT_DOUBLE_EQ(d.samples[1].features[1], -1e-3);
  EXPECT_EQ(d.months, (std::vector<std::string>{"2019-01", "2019-02"}));
}

TEST(LoadCsv, MonthGapsCollapse) {
  const Dataset d = load_csv_dataset(write_file("gap.csv", "id,month,label,f0\n1,2019-08,0,1\n2,2019-10,1,2\n"));
  EXPECT_EQ(d.samples[0].task_index, 0u);
  EXPECT_EQ(d.samples[1].task_index, 1u);
}

TEST(LoadCsv, Errors) {
  EXPECT_EQ(load_error("id,month,label,f0\n1,2019-01,2,0.5\n"), ErrorCode::MalformedRow);
  EXPECT_EQ(load_error("id,month,label,f0\n1,2019-01,1\n"), ErrorCode::MalformedRow);
  EXPECT_EQ(load_error("id,month,label,f0\n1,Jan,1,0\n"), ErrorCode::MalformedRow);
  EXPECT_EQ(load_error("id,month,label,f0\n1,2019-01,1,abc\n"), ErrorCode::NonNumericFeature);
  EXPECT_EQ(load_error("id,label,f0\n1,1,0\n"), ErrorCode::MissingColumn);
  EXPECT_EQ(load_error("id,month,label\n"), ErrorCode::MissingColumn);
  try {
    load_csv_dataset(std::string(TEST_TMP_DIR) + "/does_not_exist.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DatasetMissing);
  }
}

TEST(LoadCsv, MalformedRowReportsLine) {
  try {
    load_csv_dataset(write_file("line.csv", "id,month,label,f0\n1,2019-01,0,1\n2,2019-01,5,1\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

TEST(CsvRoundTrip, WriteThenLoad) {
  const Dataset d = gen_synthetic_dataset(small_stream());
  const std::string path = std::string(TEST_TMP_DIR) + "/roundtrip.csv";
  fs::create_directories(TEST_TMP_DIR);
  write_csv_dataset(path, d);
  const Dataset back = load_csv_dataset(path);
  ASSERT_EQ(back.samples.size(), d.samples.size());
  EXPECT_EQ(back.months, d.months);
  // samples come back ordered by (month, id)
  std::vector<Sample> sorted = d.samples;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Sample& a, const Sample& b) {
    return std::tie(a.task_index, a.id) < std::tie(b.task_index, b.id);
  });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    EXPECT_EQ(back.samples[i].id, sorted[i].id);
    EXPECT_EQ(back.samples[i].true_label, sorted[i].true_label);
    EXPECT_TRUE(back.samples[i].features == sorted[i].features);
  }
}

TEST(MakeTasks, SplitArithmetic) {
  const auto tasks = make_tasks(flat_dataset(100, 12), 1);
  ASSERT_EQ(tasks.size(), 12u);
  for (const TaskData& t : tasks) {
    EXPECT_EQ(t.labeled.size(), 70u);
    EXPECT_EQ(t.validation.size(), 5u);
    EXPECT_EQ(t.test.size(), 25u);
    EXPECT_TRUE(t.unlabeled.empty());
  }
  EXPECT_EQ(make_tasks(flat_dataset(37, 1), 1).size(), 1u);
}

TEST(MakeTasks, PartitionsDisjointAndExhaustive) {
  for (std::size_t n : {3u, 17u, 64u, 101u}) {
    const auto tasks = make_tasks(flat_dataset(n, 3), 9);
    for (const TaskData& t : tasks) {
      std::set<SampleId> all;
      for (const auto* part : {&t.labeled, &t.unlabeled, &t.validation, &t.test}) {
        for (const Sample& s : *part) EXPECT_TRUE(all.insert(s.id).second);
      }
      EXPECT_EQ(all.size(), n);
      EXPECT_EQ(t.labeled.size(), (n * 70) / 100);
      EXPECT_EQ(t.validation.size(), (n * 5) / 100);
    }
  }
}

TEST(MakeTasks, EmptyTask) {
  Dataset d = flat_dataset(10, 1);
  d.months.push_back("2020-02");
  try {
    make_tasks(d, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTask);
  }
}

TEST(MaskLabels, Ratios) {
  const TaskData t = make_tasks(flat_dataset(100, 1), 1).front();
  Rng rng(1);
  const TaskData all = mask_labels(t, 1.0, rng);
  EXPECT_EQ(all.labeled.size(), 70u);
  const TaskData none = mask_labels(t, 0.0, rng);
  EXPECT_TRUE(none.labeled.empty());
  EXPECT_EQ(none.unlabeled.size(), 70u);
  const TaskData part = mask_labels(t, 0.2, rng);
  EXPECT_EQ(part.labeled.size(), 14u);
  EXPECT_EQ(part.unlabeled.size(), 56u);
  for (const Sample& s : part.unlabeled) EXPECT_FALSE(s.observed_label.has_value());
  for (const Sample& s : part.labeled) EXPECT_EQ(s.observed_label, s.true_label);
  EXPECT_EQ(ids(part.validation), ids(t.validation));
  EXPECT_EQ(ids(part.test), ids(t.test));
}

TEST(InjectNoise, Ratios) {
  Rng rng(2);
  const TaskData t = mask_labels(make_tasks(flat_dataset(100, 1), 1).front(), 0.2, rng);
  EXPECT_TRUE(inject_label_noise(t, 0.0, rng).second.empty());
  const auto [half, rec] = inject_label_noise(t, 0.5, rng);
  EXPECT_EQ(rec.size(), 7u);
  std::size_t flipped = 0;
  for (const Sample& s : half.labeled) {
    if (s.observed_label != s.true_label) {
      ++flipped;
      ASSERT_TRUE(rec.count(s.id));
      EXPECT_EQ(rec.at(s.id).first, s.true_label);
      EXPECT_EQ(rec.at(s.id).second, *s.observed_label);
    }
  }
  EXPECT_EQ(flipped, 7u);
  const auto [full, rec_all] = inject_label_noise(t, 1.0, rng);
  for (const Sample& s : full.labeled) EXPECT_NE(s.observed_label, s.true_label);
  EXPECT_EQ(ids(full.test), ids(t.test));
  for (const Sample& s : full.test) EXPECT_EQ(s.observed_label, s.true_label);
}

TEST(Synthetic, CountsAndDeterminism) {
  StreamConfig c;
  c.n_tasks = 2;
  c.seen_tasks = 1;
  c.feature_dim = 10;
  const Dataset a = gen_synthetic_dataset(c);
  ASSERT_EQ(a.samples.size(), 2000u);
  std::size_t malware = 0;
  for (const Sample& s : a.samples) malware += (s.task_index == 0 && s.true_label == 1);
  EXPECT_EQ(malware, 100u);
  const Dataset b = gen_synthetic_dataset(c);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_TRUE(a.samples[i].features == b.samples[i].features);
  c.seed = 2;
  EXPECT_FALSE(gen_synthetic_dataset(c).samples[0].features == a.samples[0].features);
}

TEST(Synthetic, NoShiftMeansNoDrift) {
  StreamConfig c = small_stream();
  c.mean_shift = 0.0;
  for (int y : {0, 1}) {
    EXPECT_EQ(synthetic_class_mean(c, 0, y), synthetic_class_mean(c, 3, y));
  }
}

TEST(Synthetic, DriftGrowsLinearly) {
  const StreamConfig c = small_stream();
  for (int y : {0, 1}) {
    const Vec64 m0 = synthetic_class_mean(c, 0, y);
    const double step = (synthetic_class_mean(c, 1, y) - m0).norm();
    EXPECT_NEAR(step, c.mean_shift, 1e-12);
    for (std::size_t t = 2; t < c.n_tasks; ++t) {
      EXPECT_NEAR((synthetic_class_mean(c, t, y) - m0).norm(), static_cast<double>(t) * step, 1e-9);
    }
  }
}

TEST(Synthetic, DriftCorrelation) {
  StreamConfig c = small_stream();
  for (double rho : {0.0, 0.5, 0.9}) {
    c.drift_correlation = rho;
    const Vec64 db = synthetic_class_mean(c, 1, 0) - synthetic_class_mean(c, 0, 0);
    const Vec64 dm = synthetic_class_mean(c, 1, 1) - synthetic_class_mean(c, 0, 1);
    EXPECT_NEAR(db.dot(dm) / (db.norm() * dm.norm()), rho, 1e-12);
  }
}

TEST(Synthetic, InvalidConfig) {
  StreamConfig c = small_stream();
  c.seen_tasks = 9;
  EXPECT_THROW(gen_synthetic_dataset(c), Error);
  c = small_stream();
  c.label_ratio = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = small_stream();
  c.drift_correlation = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Months, AddMonths) {
  EXPECT_EQ(add_months("2019-01", 0), "2019-01");
  EXPECT_EQ(add_months("2019-11", 3), "2020-02");
  EXPECT_EQ(add_months("2019-01", 24), "2021-01");
}
