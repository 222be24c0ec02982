#include "seed/checkpoint.hpp"

#include "seed/error.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace seed {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'E', 'D', 'C', 'K', 'P', 'T'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    u64(v);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void vec(const Eigen::Ref<const Vec64>& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}
  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw Error(ErrorCode::CorruptCheckpoint, "unexpected end of file");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::uint64_t count(std::uint64_t elem_size) {
    const std::uint64_t n = u64();
    if (elem_size > 0 && n > (buf_.size() - pos_) / elem_size) {
      throw Error(ErrorCode::CorruptCheckpoint, "length field exceeds file size");
    }
    return n;
  }
  std::string str() {
    const auto n = count(1);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Vec64 vec() {
    const auto n = count(8);
    Vec64 v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }
  void expect_vec(Vec64& target, const std::string& what) {
    Vec64 v = vec();
    if (v.size() != target.size()) throw Error(ErrorCode::CorruptCheckpoint, what + ": size mismatch");
    target = std::move(v);
  }
  bool done() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& m, const GpmStore* gpm) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u64(m.seed);
  w.u64(m.arch.input_dim);
  w.u64(m.arch.hidden.size());
  for (std::size_t h : m.arch.hidden) w.u64(h);
  w.u64(m.arch.num_classes);
  w.u32(m.arch.batchnorm ? 1 : 0);
  w.f64(m.arch.dropout);
  w.u32(m.mode == Mode::Train ? 0 : 1);

  w.u64(m.group_count());
  for (std::size_t g = 0; g < m.group_count(); ++g) {
    w.str(m.group_name(g));
    w.vec(m.group(g));
  }
  for (const BatchNorm& bn : m.norms) {
    w.f64(bn.momentum);
    w.f64(bn.eps);
    w.vec(bn.running_mean);
    w.vec(bn.running_var);
  }

  w.u32(gpm ? 1 : 0);
  if (gpm) {
    w.f64(gpm->energy_threshold);
    w.u32(gpm->layerwise ? 1 : 0);
    w.u64(gpm->max_rank);
    w.u64(gpm->bases.size());
    for (const auto& [key, b] : gpm->bases) {
      w.str(key);
      w.f64(b.energy_threshold);
      w.u64(static_cast<std::uint64_t>(b.vectors.rows()));
      w.u64(static_cast<std::uint64_t>(b.vectors.cols()));
      for (Eigen::Index i = 0; i < b.vectors.size(); ++i) w.f64(b.vectors.data()[i]);
      w.vec(b.singular_values);
    }
  }
  w.bytes(kTrailer, sizeof kTrailer);

  const std::string tmp = path + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write checkpoint '" + path + "'");
    f.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!f) {
      std::remove(tmp.c_str());
      throw Error(ErrorCode::IoError, "short write to '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::IoError, "cannot rename checkpoint into '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open checkpoint '" + path + "'");
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(f), {}));

  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorCode::CorruptCheckpoint, "bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::CorruptCheckpoint, "unsupported version " + std::to_string(version));
  }
  Architecture arch;
  const auto seed = r.u64();
  arch.input_dim = r.u64();
  const auto depth = r.count(8);
  arch.hidden.clear();
  for (std::uint64_t i = 0; i < depth; ++i) arch.hidden.push_back(r.u64());
  arch.num_classes = r.u64();
  arch.batchnorm = r.u32() != 0;
  arch.dropout = r.f64();
  const auto mode = r.u32();
  if (arch.input_dim == 0 || arch.num_classes == 0 || arch.input_dim > (1u << 24)) {
    throw Error(ErrorCode::CorruptCheckpoint, "implausible layer widths");
  }
  for (std::size_t h : arch.hidden) {
    if (h == 0 || h > (1u << 24)) throw Error(ErrorCode::CorruptCheckpoint, "implausible layer widths");
  }

  Checkpoint ck;
  ck.model = init_model(arch, seed);
  ck.model.mode = mode == 0 ? Mode::Train : Mode::Eval;
  const auto groups = r.u64();
  if (groups != ck.model.group_count()) throw Error(ErrorCode::CorruptCheckpoint, "group count mismatch");
  for (std::size_t g = 0; g < groups; ++g) {
    if (r.str() != ck.model.group_name(g)) throw Error(ErrorCode::CorruptCheckpoint, "group name mismatch");
    r.expect_vec(ck.model.group(g), ck.model.group_name(g));
  }
  for (BatchNorm& bn : ck.model.norms) {
    bn.momentum = r.f64();
    bn.eps = r.f64();
    r.expect_vec(bn.running_mean, "running_mean");
    r.expect_vec(bn.running_var, "running_var");
  }

  if (r.u32() != 0) {
    GpmStore s;
    s.energy_threshold = r.f64();
    s.layerwise = r.u32() != 0;
    s.max_rank = r.u64();
    const auto n = r.count(1);
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::string key = r.str();
      Basis b;
      b.energy_threshold = r.f64();
      const auto rows = r.u64();
      const auto cols = r.u64();
      if (cols != 0 && rows > r.remaining() / 8 / cols) throw Error(ErrorCode::CorruptCheckpoint, "basis too large");
      b.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (Eigen::Index j = 0; j < b.vectors.size(); ++j) b.vectors.data()[j] = r.f64();
      b.singular_values = r.vec();
      if (b.singular_values.size() != b.vectors.rows()) {
        throw Error(ErrorCode::CorruptCheckpoint, "basis '" + key + "': singular value count mismatch");
      }
      s.bases.emplace(key, std::move(b));
    }
    ck.gpm = std::move(s);
  }
  char trailer[4];
  r.bytes(trailer, 4);
  if (std::memcmp(trailer, kTrailer, 4) != 0 || !r.done()) throw Error(ErrorCode::CorruptCheckpoint, "bad trailer");
  return ck;
}

}  // namespace seed
