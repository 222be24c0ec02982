#pragma once

#include "seed/numerics.hpp"
#include "seed/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace seed {

enum class Mode { Train, Eval };

/// Layer widths and regularisation of the encoder/classifier detector.
struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{100, 250, 500, 150, 50};
  std::size_t num_classes = 2;
  bool batchnorm = true;
  double dropout = 0.2;

  /// Detector used in every experiment: d -> 100 -> 250 -> 500 -> 150 -> 50 -> 2.
  static Architecture detector(std::size_t input_dim);

  std::size_t latent_dim() const { return hidden.empty() ? input_dim : hidden.back(); }
};

/// Fully connected layer; `flat` holds the row-major (out x in) weight followed by the bias.
struct Linear {
  std::size_t in = 0;
  std::size_t out = 0;
  Vec64 flat;

  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features);

  Eigen::Map<Mat64> weight() { return {flat.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)}; }
  Eigen::Map<const Mat64> weight() const {
    return {flat.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)};
  }
  auto bias() { return flat.segment(static_cast<Eigen::Index>(in * out), static_cast<Eigen::Index>(out)); }
  auto bias() const { return flat.segment(static_cast<Eigen::Index>(in * out), static_cast<Eigen::Index>(out)); }
};

/// Batch normalisation; `flat` holds scale followed by shift. Running stats are not trained.
struct BatchNorm {
  std::size_t width = 0;
  Vec64 flat;
  Vec64 running_mean;
  Vec64 running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t w);

  auto scale() { return flat.head(static_cast<Eigen::Index>(width)); }
  auto scale() const { return flat.head(static_cast<Eigen::Index>(width)); }
  auto shift() { return flat.tail(static_cast<Eigen::Index>(width)); }
  auto shift() const { return flat.tail(static_cast<Eigen::Index>(width)); }
};

/// Encoder + classifier parameters. Trainable tensors are exposed as named
/// "parameter groups" (one per linear layer / batchnorm), which is also the
/// granularity used by the gradient projection memory.
struct ModelParams {
  Architecture arch;
  std::uint64_t seed = 0;
  std::vector<Linear> encoder;
  std::vector<BatchNorm> norms;  // empty when arch.batchnorm is false
  Linear classifier;
  Mode mode = Mode::Train;

  std::size_t group_count() const;
  std::string group_name(std::size_t g) const;
  Vec64& group(std::size_t g);
  const Vec64& group(std::size_t g) const;
  std::size_t parameter_count() const;
};

/// Same layout as ModelParams' parameter groups.
struct Gradients {
  std::vector<std::string> names;
  std::vector<Vec64> groups;

  static Gradients zeros_like(const ModelParams& m);
  double norm() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

using GradientTransform = std::function<void(Gradients&)>;

struct OptimizerConfig {
  double learning_rate = 0.1;
  double weight_decay = 1e-9;
  std::size_t batch_size = 64;
  std::size_t epochs_per_task = 5;
  std::size_t patience = 3;
};

/// Kaiming-uniform weights (bound sqrt(6/fan_in)), zero biases, identity batchnorm.
ModelParams init_model(const Architecture& arch, std::uint64_t seed);
ModelParams init_model(std::size_t input_dim, std::uint64_t seed);

struct LayerTrace {
  Mat64 input;        // activation entering the linear layer
  Mat64 normalized;   // batchnorm x-hat (empty without batchnorm)
  Vec64 inv_std;      // 1/sqrt(var + eps) used for normalisation
  Vec64 batch_mean;   // batch statistics (Train mode only)
  Vec64 batch_var;    // biased batch variance (Train mode only)
  Mat64 mask;         // dropout multipliers (empty when dropout is inactive)
  Mat64 pre_relu;     // value fed to the ReLU
  bool batch_stats = false;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Mat64 latent;
  Mode mode = Mode::Train;
};

struct ForwardResult {
  Mat64 latent;  // n x latent_dim
  Mat64 logits;  // n x num_classes
  Mat64 probs;   // softmax(logits)
  std::optional<ForwardTrace> trace;
};

struct ForwardOptions {
  bool keep_trace = true;
  /// Use running statistics even in Train mode (consistency checks).
  bool force_running_stats = false;
  bool disable_dropout = false;
};

/// Batched forward pass. Train mode uses batch statistics and dropout (needs
/// `rng` when dropout is active) and rejects single-row batches.
ForwardResult forward(const ModelParams& m, const Eigen::Ref<const Mat64>& x, Rng* rng,
                      const ForwardOptions& opts = {});

/// Single-sample Eval-mode convenience wrapper; returns (latent, logits, probs) without trace.
ForwardResult forward_one(const ModelParams& m, const Eigen::Ref<const Vec64>& x);

/// Fold the batch statistics recorded in `trace` into the running averages.
void update_running_stats(ModelParams& m, const ForwardTrace& trace);

/// Eval-mode latents for every row of `x`.
Mat64 encode(const ModelParams& m, const Eigen::Ref<const Mat64>& x);

Mat64 softmax_rows(const Eigen::Ref<const Mat64>& logits);

inline constexpr double kProbClamp = 1e-12;

/// Mean cross-entropy of the true class; probabilities clamped to [eps, 1-eps].
double loss_sup(const Eigen::Ref<const Mat64>& probs, const std::vector<int>& labels);

/// <probs_a, probs_b>
double similarity_score(const Eigen::Ref<const Vec64>& probs_a, const Eigen::Ref<const Vec64>& probs_b);

/// Mean over pairs of -log(max(ss, eps)). Throws EmptyPairSet.
double loss_bce(const std::vector<std::pair<Vec64, Vec64>>& prob_pairs);

/// One supervised row or one (anchor, exemplar) pair, addressed by row in the forwarded batch.
struct SupTerm {
  std::size_t row;
  int label;
};
struct PairTerm {
  std::size_t anchor_row;
  std::size_t exemplar_row;
};

struct LossTerms {
  std::vector<SupTerm> sup;
  std::vector<PairTerm> pairs;
  bool stop_exemplar_gradient = false;
};

struct LossValue {
  double sup = 0.0;
  double bce = 0.0;
  double total() const { return sup + bce; }
  Mat64 dlogits;  // dL/dlogits, one row per forwarded sample
};

/// L = L_sup (mean over sup terms) + L_bce (mean over pairs) and its logit gradient.
LossValue evaluate_loss(const Eigen::Ref<const Mat64>& probs, const LossTerms& terms);

/// Backpropagate a logit gradient through classifier and encoder.
Gradients backward(const ModelParams& m, const ForwardTrace& trace, const Eigen::Ref<const Mat64>& dlogits);

/// w <- w - lr * (g + wd * w); `transform` (if any) rewrites g first.
void sgd_step(ModelParams& m, Gradients g, const OptimizerConfig& cfg, const GradientTransform* transform = nullptr);

}  // namespace seed
