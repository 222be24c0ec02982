#pragma once

#include "seed/data.hpp"
#include "seed/memory.hpp"
#include "seed/model.hpp"
#include "seed/random.hpp"

#include <string>
#include <vector>

namespace seed {

/// Mean cosine distance of one sample's latent to the benign and malware groups.
struct GroupDistances {
  SampleId sample_id = 0;
  double d0 = 0.0;
  double d1 = 0.0;
};

struct OracleKind {
  enum class Variant { GroundTruth, SelfLabel, Noisy };
  Variant variant = Variant::GroundTruth;
  double flip_prob = 0.0;  // Noisy only

  static OracleKind ground_truth() { return {}; }
  static OracleKind self_label() { return {Variant::SelfLabel, 0.0}; }
  static OracleKind noisy(double p);
  std::string name() const;
};

enum class DistanceStrategy { AllSamples, Centroid };
enum class RankingDirection { ClosestFirst, FarthestFirst };

/// Eval-mode latents of each memory group, reused across a task.
struct GroupLatents {
  Mat64 group0;
  Mat64 group1;
};

/// Throws MissingClass when either class is absent from memory.
GroupLatents memory_group_latents(const BufferMemory& mem, const ModelParams& m);

GroupDistances group_distances(const Eigen::Ref<const Vec64>& z, const GroupLatents& groups,
                               DistanceStrategy strategy, SampleId id = 0);
GroupDistances group_distances(const Eigen::Ref<const Vec64>& z, const BufferMemory& mem, const ModelParams& m,
                               DistanceStrategy strategy, SampleId id = 0);

/// ceil(budget/2) ids ranked by d0, then floor(budget/2) by d1 skipping
/// already chosen ids; any shortfall is back-filled from the d1 ranking and
/// then the d0 ranking. Ties go to the smaller id. Returned in pick order.
std::vector<SampleId> select_for_labeling(const std::vector<GroupDistances>& distances, std::size_t budget,
                                          RankingDirection direction = RankingDirection::ClosestFirst);

/// Labels for `selected`. Noisy flips each true label with probability flip_prob;
/// SelfLabel takes the model's argmax (ties -> 0).
std::vector<int> label_with_oracle(const std::vector<const Sample*>& selected, const OracleKind& oracle,
                                   const ModelParams& m, Rng& rng);

}  // namespace seed
