#pragma once

#include "seed/model.hpp"
#include "seed/numerics.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace seed {

/// Gradient projection memory: orthonormal bases over the flattened gradient
/// space of each parameter group (or of the whole model in global mode).
struct GpmStore {
  static constexpr const char* kGlobalKey = "global";

  double energy_threshold = 0.99;
  bool layerwise = true;
  std::size_t max_rank = 0;  // 0 = uncapped (bounded by the flattened dimension)
  std::map<std::string, Basis> bases;

  std::size_t total_rank() const;
  std::size_t rank(const std::string& key) const;
};

/// Per-sample gradients, one row per sample, keyed like GpmStore::bases.
using GradientRows = std::map<std::string, Mat64>;

/// g' = g - B B^T g for every group with a stored basis; other groups pass through.
Gradients project_orthogonal(const Gradients& g, const GpmStore& store);

struct GpmUpdateReport {
  bool empty_gradient_set = false;
  std::map<std::string, std::size_t> added;  // new directions per key
};

/// Remove already-stored directions from the task gradients, take the SVD of
/// the residual and append its leading directions until stored plus new
/// directions capture the energy threshold of the task gradients. Gradients
/// already covered add nothing. An empty gradient set leaves the store untouched.
GpmUpdateReport update_basis(GpmStore& store, const GradientRows& task_gradients);

/// Per-sample gradients of the supervised loss for `x` (all labelled `label`),
/// computed with Eval-mode batchnorm so samples do not couple.
GradientRows collect_sample_gradients(const ModelParams& m, const Eigen::Ref<const Mat64>& x, int label,
                                      bool layerwise);

}  // namespace seed
