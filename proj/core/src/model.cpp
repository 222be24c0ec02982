#include "seed/model.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seed {

Architecture Architecture::detector(std::size_t input_dim) {
  Architecture a;
  a.input_dim = input_dim;
  return a;
}

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : in(in_features), out(out_features), flat(Vec64::Zero(static_cast<Eigen::Index>(in_features * out_features + out_features))) {}

BatchNorm::BatchNorm(std::size_t w)
    : width(w),
      flat(Vec64::Zero(static_cast<Eigen::Index>(2 * w))),
      running_mean(Vec64::Zero(static_cast<Eigen::Index>(w))),
      running_var(Vec64::Ones(static_cast<Eigen::Index>(w))) {
  scale().setOnes();
}

std::size_t ModelParams::group_count() const { return encoder.size() + norms.size() + 1; }

namespace {

// Groups are ordered enc0, bn0, enc1, bn1, ..., cls.
struct GroupRef {
  enum Kind { Enc, Norm, Cls } kind;
  std::size_t layer;
};

GroupRef locate(const ModelParams& m, std::size_t g) {
  const std::size_t per_layer = m.norms.empty() ? 1 : 2;
  const std::size_t enc_groups = per_layer * m.encoder.size();
  if (g >= enc_groups) {
    if (g != enc_groups) throw Error(ErrorCode::ShapeMismatch, "parameter group out of range");
    return {GroupRef::Cls, 0};
  }
  const std::size_t layer = g / per_layer;
  const bool is_norm = per_layer == 2 && g % 2 == 1;
  return {is_norm ? GroupRef::Norm : GroupRef::Enc, layer};
}

}  // namespace

std::string ModelParams::group_name(std::size_t g) const {
  const GroupRef r = locate(*this, g);
  switch (r.kind) {
    case GroupRef::Enc: return "enc" + std::to_string(r.layer);
    case GroupRef::Norm: return "bn" + std::to_string(r.layer);
    case GroupRef::Cls: return "cls";
  }
  return {};
}

Vec64& ModelParams::group(std::size_t g) {
  const GroupRef r = locate(*this, g);
  if (r.kind == GroupRef::Enc) return encoder[r.layer].flat;
  if (r.kind == GroupRef::Norm) return norms[r.layer].flat;
  return classifier.flat;
}

const Vec64& ModelParams::group(std::size_t g) const {
  return const_cast<ModelParams&>(*this).group(g);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t g = 0; g < group_count(); ++g) n += static_cast<std::size_t>(group(g).size());
  return n;
}

Gradients Gradients::zeros_like(const ModelParams& m) {
  Gradients out;
  for (std::size_t g = 0; g < m.group_count(); ++g) {
    out.names.push_back(m.group_name(g));
    out.groups.push_back(Vec64::Zero(m.group(g).size()));
  }
  return out;
}

double Gradients::norm() const {
  double s = 0.0;
  for (const auto& v : groups) s += v.squaredNorm();
  return std::sqrt(s);
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.groups.size() != groups.size()) throw Error(ErrorCode::ShapeMismatch, "gradient group count");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].size() != other.groups[i].size()) throw Error(ErrorCode::ShapeMismatch, "gradient group " + names[i]);
    groups[i] += other.groups[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& v : groups) v *= s;
  return *this;
}

ModelParams init_model(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0) throw Error(ErrorCode::InvalidArgument, "init_model: input_dim must be >= 1");
  if (arch.num_classes < 2) throw Error(ErrorCode::InvalidArgument, "init_model: need at least 2 classes");
  ModelParams m;
  m.arch = arch;
  m.seed = seed;
  Rng rng(seed);

  auto kaiming = [&rng](Linear& layer) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
    auto w = layer.weight();
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng, -bound, bound);
  };

  std::size_t width = arch.input_dim;
  for (std::size_t h : arch.hidden) {
    m.encoder.emplace_back(width, h);
    kaiming(m.encoder.back());
    if (arch.batchnorm) m.norms.emplace_back(h);
    width = h;
  }
  m.classifier = Linear(width, arch.num_classes);
  kaiming(m.classifier);
  return m;
}

ModelParams init_model(std::size_t input_dim, std::uint64_t seed) {
  return init_model(Architecture::detector(input_dim), seed);
}

Mat64 softmax_rows(const Eigen::Ref<const Mat64>& logits) {
  Mat64 out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

ForwardResult forward(const ModelParams& m, const Eigen::Ref<const Mat64>& x, Rng* rng, const ForwardOptions& opts) {
  if (static_cast<std::size_t>(x.cols()) != m.arch.input_dim) {
    throw Error(ErrorCode::DimMismatch, "forward: input has " + std::to_string(x.cols()) + " features, model expects " +
                                            std::to_string(m.arch.input_dim));
  }
  if (x.rows() == 0) throw Error(ErrorCode::EmptyBatch, "forward: empty batch");
  const bool train = m.mode == Mode::Train;
  const bool batch_stats = train && m.arch.batchnorm && !opts.force_running_stats;
  if (train && x.rows() == 1 && !opts.force_running_stats) {
    throw Error(ErrorCode::TrainModeSingleSample, "forward: Train mode needs a batch of at least 2 rows");
  }
  const bool use_dropout = train && !opts.disable_dropout && m.arch.dropout > 0.0;
  if (use_dropout && rng == nullptr) throw Error(ErrorCode::InvalidArgument, "forward: dropout needs an rng");

  ForwardTrace trace;
  trace.mode = m.mode;
  Mat64 a = x;
  const auto n = static_cast<double>(x.rows());
  for (std::size_t l = 0; l < m.encoder.size(); ++l) {
    const Linear& lin = m.encoder[l];
    LayerTrace lt;
    Mat64 h = a * lin.weight().transpose();
    h.rowwise() += lin.bias().transpose();
    if (opts.keep_trace) lt.input = std::move(a);

    Mat64 y;
    if (m.arch.batchnorm) {
      const BatchNorm& bn = m.norms[l];
      Vec64 mean, var;
      if (batch_stats) {
        mean = h.colwise().mean().transpose();
        var = ((h.rowwise() - mean.transpose()).array().square().colwise().sum() / n).matrix().transpose();
      } else {
        mean = bn.running_mean;
        var = bn.running_var;
      }
      Vec64 inv = (var.array() + bn.eps).rsqrt().matrix();
      Mat64 xhat = (h.rowwise() - mean.transpose()) * inv.asDiagonal();
      y = xhat * bn.scale().asDiagonal();
      y.rowwise() += bn.shift().transpose();
      if (opts.keep_trace) {
        lt.normalized = std::move(xhat);
        lt.inv_std = std::move(inv);
        lt.batch_stats = batch_stats;
        if (batch_stats) {
          lt.batch_mean = std::move(mean);
          lt.batch_var = std::move(var);
        }
      }
    } else {
      y = std::move(h);
    }

    if (use_dropout) {
      const double keep = 1.0 - m.arch.dropout;
      Mat64 mask(y.rows(), y.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform01(*rng) < m.arch.dropout ? 0.0 : 1.0 / keep;
      y.array() *= mask.array();
      if (opts.keep_trace) lt.mask = std::move(mask);
    }

    a = y.cwiseMax(0.0);
    if (opts.keep_trace) {
      lt.pre_relu = std::move(y);
      trace.layers.push_back(std::move(lt));
    }
  }

  ForwardResult out;
  out.logits = a * m.classifier.weight().transpose();
  out.logits.rowwise() += m.classifier.bias().transpose();
  out.probs = softmax_rows(out.logits);
  out.latent = std::move(a);
  if (opts.keep_trace) {
    trace.latent = out.latent;
    out.trace = std::move(trace);
  }
  return out;
}

ForwardResult forward_one(const ModelParams& m, const Eigen::Ref<const Vec64>& x) {
  if (m.mode == Mode::Train) throw Error(ErrorCode::TrainModeSingleSample, "forward_one requires Eval mode");
  Mat64 row = x.transpose();
  ForwardOptions opts;
  opts.keep_trace = false;
  return forward(m, row, nullptr, opts);
}

void update_running_stats(ModelParams& m, const ForwardTrace& trace) {
  for (std::size_t l = 0; l < m.norms.size() && l < trace.layers.size(); ++l) {
    const LayerTrace& lt = trace.layers[l];
    if (!lt.batch_stats) continue;
    BatchNorm& bn = m.norms[l];
    const double n = static_cast<double>(lt.pre_relu.rows());
    // Running variance tracks the unbiased estimate.
    const Vec64 unbiased = n > 1.0 ? Vec64(lt.batch_var * (n / (n - 1.0))) : lt.batch_var;
    bn.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * lt.batch_mean;
    bn.running_var = (1.0 - bn.momentum) * bn.running_var + bn.momentum * unbiased;
  }
}

Mat64 encode(const ModelParams& m, const Eigen::Ref<const Mat64>& x) {
  ModelParams const* view = &m;
  ModelParams eval_copy;
  if (m.mode != Mode::Eval) {
    eval_copy = m;
    eval_copy.mode = Mode::Eval;
    view = &eval_copy;
  }
  ForwardOptions opts;
  opts.keep_trace = false;
  return forward(*view, x, nullptr, opts).latent;
}

double loss_sup(const Eigen::Ref<const Mat64>& probs, const std::vector<int>& labels) {
  if (probs.rows() == 0 || labels.empty()) throw Error(ErrorCode::EmptyBatch, "loss_sup: empty batch");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw Error(ErrorCode::ShapeMismatch, "loss_sup: labels");
  double total = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= probs.cols()) throw Error(ErrorCode::InvalidArgument, "loss_sup: label out of range");
    total -= std::log(std::clamp(probs(r, y), kProbClamp, 1.0 - kProbClamp));
  }
  return total / static_cast<double>(probs.rows());
}

double similarity_score(const Eigen::Ref<const Vec64>& probs_a, const Eigen::Ref<const Vec64>& probs_b) {
  if (probs_a.size() != probs_b.size()) throw Error(ErrorCode::DimMismatch, "similarity_score");
  return probs_a.dot(probs_b);
}

double loss_bce(const std::vector<std::pair<Vec64, Vec64>>& prob_pairs) {
  if (prob_pairs.empty()) throw Error(ErrorCode::EmptyPairSet, "loss_bce: no pairs");
  double total = 0.0;
  for (const auto& [a, b] : prob_pairs) total -= std::log(std::max(similarity_score(a, b), kProbClamp));
  return total / static_cast<double>(prob_pairs.size());
}

LossValue evaluate_loss(const Eigen::Ref<const Mat64>& probs, const LossTerms& terms) {
  LossValue out;
  out.dlogits = Mat64::Zero(probs.rows(), probs.cols());
  const auto rows = static_cast<std::size_t>(probs.rows());

  if (!terms.sup.empty()) {
    const double w = 1.0 / static_cast<double>(terms.sup.size());
    for (const SupTerm& t : terms.sup) {
      if (t.row >= rows || t.label < 0 || t.label >= probs.cols()) throw Error(ErrorCode::ShapeMismatch, "evaluate_loss: sup term");
      const auto r = static_cast<Eigen::Index>(t.row);
      const double pt = probs(r, t.label);
      out.sup -= w * std::log(std::clamp(pt, kProbClamp, 1.0 - kProbClamp));
      if (pt > kProbClamp && pt < 1.0 - kProbClamp) {
        out.dlogits.row(r) += w * probs.row(r);
        out.dlogits(r, t.label) -= w;
      }
    }
  }

  if (!terms.pairs.empty()) {
    const double w = 1.0 / static_cast<double>(terms.pairs.size());
    for (const PairTerm& p : terms.pairs) {
      if (p.anchor_row >= rows || p.exemplar_row >= rows) throw Error(ErrorCode::ShapeMismatch, "evaluate_loss: pair term");
      const auto a = static_cast<Eigen::Index>(p.anchor_row);
      const auto e = static_cast<Eigen::Index>(p.exemplar_row);
      const double ss = probs.row(a).dot(probs.row(e));
      if (ss < kProbClamp) {
        out.bce -= w * std::log(kProbClamp);
        continue;
      }
      out.bce -= w * std::log(ss);
      // d(-log <pa,pe>)/dz_a = pa - pa * pe / ss
      const Eigen::RowVectorXd pa = probs.row(a);
      const Eigen::RowVectorXd pe = probs.row(e);
      out.dlogits.row(a) += w * (pa - pa.cwiseProduct(pe) / ss);
      if (!terms.stop_exemplar_gradient) out.dlogits.row(e) += w * (pe - pe.cwiseProduct(pa) / ss);
    }
  }
  return out;
}

Gradients backward(const ModelParams& m, const ForwardTrace& trace, const Eigen::Ref<const Mat64>& dlogits) {
  if (trace.layers.size() != m.encoder.size()) throw Error(ErrorCode::ShapeMismatch, "backward: trace/model layer count");
  if (dlogits.rows() != trace.latent.rows() || static_cast<std::size_t>(dlogits.cols()) != m.arch.num_classes) {
    throw Error(ErrorCode::ShapeMismatch, "backward: dlogits shape");
  }
  Gradients g = Gradients::zeros_like(m);
  const std::size_t cls_group = g.groups.size() - 1;
  const std::size_t per_layer = m.norms.empty() ? 1 : 2;

  {
    const Linear& cls = m.classifier;
    Eigen::Map<Mat64> dw(g.groups[cls_group].data(), static_cast<Eigen::Index>(cls.out), static_cast<Eigen::Index>(cls.in));
    dw = dlogits.transpose() * trace.latent;
    g.groups[cls_group].tail(static_cast<Eigen::Index>(cls.out)) = dlogits.colwise().sum().transpose();
  }
  Mat64 dout = dlogits * m.classifier.weight();

  for (std::size_t li = m.encoder.size(); li-- > 0;) {
    const LayerTrace& lt = trace.layers[li];
    const Linear& lin = m.encoder[li];
    Mat64 dy = dout.cwiseProduct((lt.pre_relu.array() > 0.0).cast<double>().matrix());
    if (lt.mask.size() != 0) dy.array() *= lt.mask.array();

    Mat64 dh;
    if (m.arch.batchnorm) {
      const BatchNorm& bn = m.norms[li];
      Vec64& gbn = g.groups[li * per_layer + 1];
      gbn.head(static_cast<Eigen::Index>(bn.width)) = dy.cwiseProduct(lt.normalized).colwise().sum().transpose();
      gbn.tail(static_cast<Eigen::Index>(bn.width)) = dy.colwise().sum().transpose();
      const Mat64 dxhat = dy * bn.scale().asDiagonal();
      if (lt.batch_stats) {
        const double n = static_cast<double>(dy.rows());
        const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(lt.normalized).colwise().sum();
        Mat64 centred = n * dxhat;
        centred.rowwise() -= sum_d;
        centred -= lt.normalized * sum_dx.asDiagonal();
        dh = centred * (lt.inv_std / n).asDiagonal();
      } else {
        dh = dxhat * lt.inv_std.asDiagonal();
      }
    } else {
      dh = std::move(dy);
    }

    Vec64& genc = g.groups[li * per_layer];
    Eigen::Map<Mat64> dw(genc.data(), static_cast<Eigen::Index>(lin.out), static_cast<Eigen::Index>(lin.in));
    dw = dh.transpose() * lt.input;
    genc.tail(static_cast<Eigen::Index>(lin.out)) = dh.colwise().sum().transpose();
    if (li > 0) dout = dh * lin.weight();
  }
  return g;
}

void sgd_step(ModelParams& m, Gradients g, const OptimizerConfig& cfg, const GradientTransform* transform) {
  if (g.groups.size() != m.group_count()) throw Error(ErrorCode::ShapeMismatch, "sgd_step: group count");
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    if (g.groups[i].size() != m.group(i).size()) throw Error(ErrorCode::ShapeMismatch, "sgd_step: group " + m.group_name(i));
  }
  if (transform != nullptr && *transform) (*transform)(g);
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    Vec64& w = m.group(i);
    w -= cfg.learning_rate * (g.groups[i] + cfg.weight_decay * w);
  }
}

}  // namespace seed
