#include <seed/config.hpp>
#include <seed/error.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace seed;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_config(text, "cfg");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigParse);
    return e.what();
  }
  ADD_FAILURE() << "accepted:\n" << text;
  return {};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Presets, PaperHyperparameters) {
  const ExperimentConfig b = preset_config("bodmas-like");
  EXPECT_DOUBLE_EQ(b.memory.b_m_frac, 0.5);
  EXPECT_DOUBLE_EQ(b.memory.bma, 0.8);
  EXPECT_DOUBLE_EQ(b.optimizer.learning_rate, 0.1);
  EXPECT_DOUBLE_EQ(b.optimizer.weight_decay, 1e-9);
  EXPECT_DOUBLE_EQ(b.threshold.tau_max, 0.09);
  EXPECT_DOUBLE_EQ(b.gpm.energy, 0.99);

  const ExperimentConfig a = preset_config("androzoo-like");
  EXPECT_DOUBLE_EQ(a.memory.b_m_frac, 0.3);
  EXPECT_DOUBLE_EQ(a.memory.bma, 0.4);
  EXPECT_DOUBLE_EQ(a.optimizer.learning_rate, 1e-2);
  EXPECT_DOUBLE_EQ(a.optimizer.weight_decay, 1e-1);
  EXPECT_DOUBLE_EQ(a.threshold.tau_max, 0.05);
  EXPECT_DOUBLE_EQ(a.gpm.energy, 0.10);

  const ExperimentConfig p = preset_config("apigraph-like");
  EXPECT_DOUBLE_EQ(p.memory.b_m_frac, 0.6);
  EXPECT_DOUBLE_EQ(p.memory.bma, 0.7);
  EXPECT_DOUBLE_EQ(p.optimizer.learning_rate, 0.1);
  EXPECT_DOUBLE_EQ(p.optimizer.weight_decay, 1e-4);
  EXPECT_DOUBLE_EQ(p.threshold.tau_max, 0.05);

  EXPECT_THROW(preset_config("nope"), Error);
  for (const auto& name : preset_names()) EXPECT_NO_THROW(preset_config(name).validate());
}

TEST(Defaults, SyntheticStream) {
  const ExperimentConfig c = preset_config("default");
  EXPECT_EQ(c.stream.n_tasks, 12u);
  EXPECT_EQ(c.stream.seen_tasks, 5u);
  EXPECT_EQ(c.stream.feature_dim, 200u);
  EXPECT_DOUBLE_EQ(c.stream.class_imbalance, 9.0);
  EXPECT_DOUBLE_EQ(c.stream.label_ratio, 0.2);
  EXPECT_EQ(c.monthly_budget, 100u);
  EXPECT_EQ(c.optimizer.batch_size, 64u);
  EXPECT_EQ(c.optimizer.epochs_per_task, 5u);
  EXPECT_EQ(c.optimizer.patience, 3u);
  EXPECT_DOUBLE_EQ(c.repspace_energy, 0.95);
  // r follows the label ratio unless set
  EXPECT_DOUBLE_EQ(c.effective_threshold().label_ratio, 0.2);
}

TEST(ParseConfig, SettingsApplied) {
  const ExperimentConfig c = parse_config(
      "# comment\n"
      "preset = androzoo-like\n"
      "memory.bma=0.25   # trailing comment\n"
      "active.oracle=noisy\n"
      "active.flip_prob=0.3\n"
      "active.distance=centroid\n"
      "active.ranking=farthest\n"
      "delay.delta=2\n"
      "threshold.r=0.5\n"
      "run.seeds=1,2,3\n"
      "run.checkpoints=every_task\n",
      "cfg");
  EXPECT_DOUBLE_EQ(c.memory.bma, 0.25);
  EXPECT_DOUBLE_EQ(c.memory.b_m_frac, 0.3);
  EXPECT_EQ(c.oracle.variant, OracleKind::Variant::Noisy);
  EXPECT_DOUBLE_EQ(c.oracle.flip_prob, 0.3);
  EXPECT_EQ(c.distance, DistanceStrategy::Centroid);
  EXPECT_EQ(c.ranking, RankingDirection::FarthestFirst);
  EXPECT_EQ(c.delay.delta_tasks, 2u);
  EXPECT_DOUBLE_EQ(c.effective_threshold().label_ratio, 0.5);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.checkpoints, CheckpointPolicy::EveryTask);
}

TEST(ParseConfig, ErrorsNameTheField) {
  const std::string e = parse_error("stream.label_ratio=1.5\n");
  EXPECT_TRUE(contains(e, "stream.label_ratio")) << e;
  EXPECT_TRUE(contains(e, "cfg:1")) << e;
  EXPECT_TRUE(contains(parse_error("a=1\nbogus.key=3\n"), "cfg:1")) << "first line is already unknown";
  EXPECT_TRUE(contains(parse_error("memory.bma=0.5\nbogus.key=3\n"), "cfg:2: bogus.key"));
  EXPECT_TRUE(contains(parse_error("optim.lr=fast\n"), "optim.lr"));
  EXPECT_TRUE(contains(parse_error("optim.lr=0\n"), "optim.lr"));
  EXPECT_TRUE(contains(parse_error("no equals sign\n"), "key=value"));
  EXPECT_TRUE(contains(parse_error("memory.bma=0.5\npreset=default\n"), "preset"));
  EXPECT_TRUE(contains(parse_error("preset=unknown\n"), "preset"));
  EXPECT_TRUE(contains(parse_error("active.oracle=psychic\n"), "active.oracle"));
  EXPECT_TRUE(contains(parse_error("stream.seen_tasks=20\n"), "seen_tasks"));
}

TEST(Snapshot, RoundTrips) {
  ExperimentConfig c = preset_config("apigraph-like");
  apply_setting(c, "memory.bma", "0.123456789");
  apply_setting(c, "gpm.layerwise", "false");
  apply_setting(c, "threshold.tau_init", "0.01");
  apply_setting(c, "run.seeds", "4,5");
  const std::string snap = to_snapshot(c);
  const ExperimentConfig back = parse_config(snap, "snap");
  EXPECT_EQ(to_snapshot(back), snap);
  EXPECT_DOUBLE_EQ(back.memory.bma, 0.123456789);
  EXPECT_FALSE(back.gpm.layerwise);
}

TEST(Seeds, ParseList) {
  EXPECT_EQ(parse_seed_list("1, 2,3"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_THROW(parse_seed_list(""), Error);
  EXPECT_THROW(parse_seed_list("1,x"), Error);
}
