#include <seed/active.hpp>
#include <seed/error.hpp>

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace seed;
using fixture::vec;

namespace {

Mat64 rows_of(std::initializer_list<Vec64> rows) {
  Mat64 m(static_cast<Eigen::Index>(rows.size()), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) m.row(i++) = r.transpose();
  return m;
}

ModelParams bias_only_model(double b0, double b1) {
  Architecture arch;
  arch.input_dim = 2;
  arch.hidden = {};
  arch.batchnorm = false;
  arch.dropout = 0.0;
  ModelParams m = init_model(arch, 1);
  m.classifier.flat << 0, 0, 0, 0, b0, b1;
  m.mode = Mode::Eval;
  return m;
}

std::vector<GroupDistances> random_distances(Rng& rng, std::size_t n) {
  std::vector<GroupDistances> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<SampleId>(i), uniform(rng, 0, 2), uniform(rng, 0, 2)});
  }
  return out;
}

std::set<SampleId> as_set(const std::vector<SampleId>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(GroupDistances, Examples) {
  GroupLatents g;
  g.group0 = rows_of({vec({1, 0})});
  g.group1 = rows_of({vec({0, 1})});
  const GroupDistances a = group_distances(vec({1, 0}), g, DistanceStrategy::AllSamples, 4);
  EXPECT_EQ(a.sample_id, 4);
  EXPECT_DOUBLE_EQ(a.d0, 0.0);
  EXPECT_DOUBLE_EQ(a.d1, 1.0);
  const GroupDistances c = group_distances(vec({3, 1}), g, DistanceStrategy::Centroid);
  const GroupDistances s = group_distances(vec({3, 1}), g, DistanceStrategy::AllSamples);
  EXPECT_DOUBLE_EQ(c.d0, s.d0);
  EXPECT_DOUBLE_EQ(c.d1, s.d1);

  g.group0 = rows_of({vec({1, 0}), vec({0, 1})});
  EXPECT_NEAR(group_distances(vec({1, 0}), g, DistanceStrategy::AllSamples).d0, 0.5, 1e-15);
  EXPECT_NEAR(group_distances(vec({1, 0}), g, DistanceStrategy::Centroid).d0, 1.0 - 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(group_distances(vec({1, 0}), g, DistanceStrategy::Centroid).d0, 0.29289, 1e-5);
}

TEST(GroupDistances, MissingClass) {
  BufferMemory mem;
  mem.store_task_chunks(0, fixture::labeled(3, 0, 0));
  try {
    memory_group_latents(mem, init_model(2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingClass);
  }
}

TEST(GroupDistances, FromMemoryMatchesManualLatents) {
  Rng rng(4);
  ModelParams m = init_model(3, 4);
  m.mode = Mode::Eval;
  std::vector<Sample> stored;
  for (int i = 0; i < 6; ++i) stored.push_back(fixture::sample(i, i % 2, 0, vec({uniform01(rng), uniform01(rng), 1.0})));
  BufferMemory mem;
  mem.store_task_chunks(0, stored);
  const Vec64 z = encode(m, vec({0.2, 0.7, 1.0}).transpose()).row(0).transpose();
  const GroupDistances d = group_distances(z, mem, m, DistanceStrategy::AllSamples);
  double d0 = 0, d1 = 0;
  for (const Sample& s : stored) {
    const Vec64 l = encode(m, s.features.transpose()).row(0).transpose();
    (s.true_label == 0 ? d0 : d1) += cosine_distance(z, l) / 3.0;
  }
  EXPECT_NEAR(d.d0, d0, 1e-12);
  EXPECT_NEAR(d.d1, d1, 1e-12);
}

TEST(SelectForLabeling, Examples) {
  // d0 order a,b,c,d ; d1 order c,d,a,b  (ids a=0 .. d=3)
  const std::vector<GroupDistances> d{{0, 0.1, 0.7}, {1, 0.2, 0.8}, {2, 0.3, 0.1}, {3, 0.4, 0.2}};
  EXPECT_TRUE(select_for_labeling(d, 0).empty());
  EXPECT_EQ(select_for_labeling(d, 2), (std::vector<SampleId>{0, 2}));
  EXPECT_EQ(as_set(select_for_labeling(d, 10)), (std::set<SampleId>{0, 1, 2, 3}));
  // odd budget: two from the benign ranking, one from the malware ranking
  EXPECT_EQ(select_for_labeling(d, 3), (std::vector<SampleId>{0, 1, 2}));
}

TEST(SelectForLabeling, OverlapIsBackFilled) {
  // sample 0 is first in both rankings
  const std::vector<GroupDistances> d{{0, 0.1, 0.1}, {1, 0.2, 0.5}, {2, 0.3, 0.2}, {3, 0.4, 0.3}};
  const auto s = select_for_labeling(d, 4);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(as_set(s).size(), 4u);
}

TEST(SelectForLabeling, TiesByIdAscending) {
  const std::vector<GroupDistances> d{{9, 0.5, 0.5}, {3, 0.5, 0.5}, {5, 0.5, 0.5}};
  EXPECT_EQ(select_for_labeling(d, 2), (std::vector<SampleId>{3, 5}));
}

TEST(SelectForLabeling, SizeAndUniqueness) {
  Rng rng(12);
  for (int t = 0; t < 300; ++t) {
    const auto d = random_distances(rng, uniform_index(rng, 30));
    const std::size_t budget = uniform_index(rng, 40);
    const auto s = select_for_labeling(d, budget);
    EXPECT_EQ(s.size(), std::min(budget, d.size()));
    EXPECT_EQ(as_set(s).size(), s.size());
  }
}

TEST(SelectForLabeling, CloserBenignCandidateDisplacesOnePick) {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    auto d = random_distances(rng, 10 + uniform_index(rng, 20));
    const std::size_t budget = 2 + uniform_index(rng, 8);
    const auto before = as_set(select_for_labeling(d, budget));
    const SampleId fresh = 1000;
    d.push_back({fresh, 0.0, 2.0});
    const auto after = as_set(select_for_labeling(d, budget));
    EXPECT_TRUE(after.count(fresh));
    std::vector<SampleId> lost;
    std::set_difference(before.begin(), before.end(), after.begin(), after.end(), std::back_inserter(lost));
    EXPECT_EQ(lost.size(), 1u);
  }
}

TEST(SelectForLabeling, FarthestIsMirror) {
  Rng rng(14);
  for (int t = 0; t < 200; ++t) {
    const auto d = random_distances(rng, 5 + uniform_index(rng, 20));
    auto mirrored = d;
    for (auto& g : mirrored) {
      g.d0 = 2.0 - g.d0;
      g.d1 = 2.0 - g.d1;
    }
    const std::size_t budget = uniform_index(rng, 12);
    EXPECT_EQ(select_for_labeling(d, budget, RankingDirection::FarthestFirst), select_for_labeling(mirrored, budget));
  }
}

TEST(LabelWithOracle, Variants) {
  std::vector<Sample> v = fixture::labeled(5, 5, 0);
  std::vector<const Sample*> p;
  for (auto& s : v) {
    s.observed_label.reset();
    p.push_back(&s);
  }
  Rng rng(1);
  const ModelParams m = bias_only_model(std::log(0.9), std::log(0.1));
  const auto truth = label_with_oracle(p, OracleKind::ground_truth(), m, rng);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(truth[i], v[i].true_label);
  const auto flipped = label_with_oracle(p, OracleKind::noisy(1.0), m, rng);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(flipped[i], 1 - v[i].true_label);
  const auto self = label_with_oracle(p, OracleKind::self_label(), m, rng);
  for (int y : self) EXPECT_EQ(y, 0);
  const auto tie = label_with_oracle(p, OracleKind::self_label(), bias_only_model(0, 0), rng);
  for (int y : tie) EXPECT_EQ(y, 0);
  const auto malware = label_with_oracle(p, OracleKind::self_label(), bias_only_model(0, 1), rng);
  for (int y : malware) EXPECT_EQ(y, 1);
}

TEST(LabelWithOracle, NoisyRateAndDeterminism) {
  std::vector<Sample> v = fixture::labeled(2000, 0, 0);
  std::vector<const Sample*> p;
  for (auto& s : v) p.push_back(&s);
  const ModelParams m = bias_only_model(0, 0);
  Rng a(5), b(5);
  const auto la = label_with_oracle(p, OracleKind::noisy(0.3), m, a);
  EXPECT_EQ(la, label_with_oracle(p, OracleKind::noisy(0.3), m, b));
  const double rate = static_cast<double>(std::count(la.begin(), la.end(), 1)) / 2000.0;
  EXPECT_NEAR(rate, 0.3, 0.04);
  EXPECT_THROW(OracleKind::noisy(1.5), Error);
}
