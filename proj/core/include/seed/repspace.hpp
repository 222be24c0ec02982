#pragma once

#include "seed/data.hpp"
#include "seed/model.hpp"
#include "seed/numerics.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace seed {

/// Adaptive thresholding knobs for exemplar matching.
struct ThresholdConfig {
  double tau_max = 0.09;
  double beta = 1.0;          // temperature
  double label_ratio = 0.2;   // r
  std::optional<double> tau_init;  // default: 0.2 * dynamic tau_max
  std::optional<double> step;      // default: 0.2 * dynamic tau_max

  double effective_tau_init() const;
  double effective_step() const;
  void validate() const;
};

/// tau_max * exp(-r * beta)
double dynamic_tau_max(const ThresholdConfig& cfg);

/// Encoder latents of the buffered exemplars and the SVD basis spanning them.
struct RepSpace {
  std::optional<Basis> basis;  // unset when SVD is disabled: projection is the identity
  Mat64 memory_inputs;         // exemplar feature rows
  Mat64 memory_latents;        // Z^m, aligned with memory_inputs
  Vec64 latent_norms;
  std::vector<int> memory_labels;
  std::vector<SampleId> exemplar_ids;

  std::size_t size() const { return memory_labels.size(); }
  Vec64 project(const Eigen::Ref<const Vec64>& z) const;
};

/// Throws EmptyMemory when there are no exemplars and MissingClass when a class is absent.
RepSpace build_rep_space(const std::vector<const Sample*>& exemplars, const ModelParams& m, double energy,
                         bool svd_enabled = true);

struct ExemplarMatch {
  std::size_t index = 0;  // row in RepSpace
  SampleId id = 0;
  int label = 0;
  double distance = 0.0;
  double tau = 0.0;       // threshold at which the match was accepted
};

struct MatchQuery {
  std::optional<SampleId> exclude_id;    // the anchor itself, for labelled anchors
  std::optional<int> restrict_label;     // labelled anchors only pair within their class
};

/// Projects `z` into the representation space, then sweeps the threshold from
/// tau_init to the dynamic tau_max. At each step the exemplars strictly closer
/// than the threshold are grouped by label; the largest group wins (ties go to
/// label 0) and its nearest member is returned. nullopt means rejected.
std::optional<ExemplarMatch> find_suitable_exemplar(const Eigen::Ref<const Vec64>& z, const RepSpace& rs,
                                                    const ThresholdConfig& cfg, const MatchQuery& query = {});

}  // namespace seed
