#include <seed/checkpoint.hpp>
#include <seed/error.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace seed;
namespace fs = std::filesystem;

namespace {

std::string tmp(const std::string& name) {
  fs::create_directories(TEST_TMP_DIR);
  return std::string(TEST_TMP_DIR) + "/" + name;
}

bool bit_equal(const Vec64& a, const Vec64& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

ModelParams trained_looking_model() {
  ModelParams m = init_model(7, 42);
  Rng rng(3);
  for (std::size_t g = 0; g < m.group_count(); ++g)
    for (Eigen::Index i = 0; i < m.group(g).size(); ++i) m.group(g)[i] += 1e-3 * standard_normal(rng);
  for (auto& bn : m.norms) {
    bn.running_mean.setRandom();
    bn.running_var.setConstant(0.7);
  }
  m.mode = Mode::Eval;
  return m;
}

ErrorCode load_error(const std::string& path) {
  try {
    load_checkpoint(path);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "loaded " << path;
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Checkpoint, BitExactRoundTrip) {
  const ModelParams m = trained_looking_model();
  GpmStore g;
  g.energy_threshold = 0.5;
  g.max_rank = 9;
  Mat64 rows = Mat64::Random(3, 5);
  update_basis(g, {{"enc0", rows}});

  const std::string path = tmp("model.ckpt");
  save_checkpoint(path, m, &g);
  const Checkpoint c = load_checkpoint(path);
  EXPECT_EQ(c.model.seed, 42u);
  EXPECT_EQ(c.model.arch.input_dim, 7u);
  EXPECT_EQ(c.model.arch.hidden, m.arch.hidden);
  EXPECT_EQ(c.model.mode, Mode::Eval);
  for (std::size_t i = 0; i < m.group_count(); ++i) EXPECT_TRUE(bit_equal(m.group(i), c.model.group(i)));
  for (std::size_t i = 0; i < m.norms.size(); ++i) {
    EXPECT_TRUE(bit_equal(m.norms[i].running_mean, c.model.norms[i].running_mean));
    EXPECT_TRUE(bit_equal(m.norms[i].running_var, c.model.norms[i].running_var));
  }
  ASSERT_TRUE(c.gpm.has_value());
  EXPECT_EQ(c.gpm->max_rank, 9u);
  EXPECT_EQ(c.gpm->energy_threshold, 0.5);
  EXPECT_TRUE(c.gpm->bases.at("enc0").vectors == g.bases.at("enc0").vectors);

  // saving the loaded model reproduces the file byte for byte
  const std::string again = tmp("model2.ckpt");
  save_checkpoint(again, c.model, &*c.gpm);
  std::ifstream a(path, std::ios::binary), b(again, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(Checkpoint, WithoutGpm) {
  const std::string path = tmp("nogpm.ckpt");
  save_checkpoint(path, trained_looking_model());
  EXPECT_FALSE(load_checkpoint(path).gpm.has_value());
}

TEST(Checkpoint, Corruption) {
  const std::string path = tmp("good.ckpt");
  save_checkpoint(path, trained_looking_model());
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});

  const std::string trunc = tmp("trunc.ckpt");
  std::ofstream(trunc, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_EQ(load_error(trunc), ErrorCode::CorruptCheckpoint);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  const std::string magic = tmp("magic.ckpt");
  std::ofstream(magic, std::ios::binary) << bad_magic;
  EXPECT_EQ(load_error(magic), ErrorCode::CorruptCheckpoint);

  EXPECT_EQ(load_error(tmp("missing.ckpt")), ErrorCode::IoError);
}
