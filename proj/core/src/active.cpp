#include "seed/active.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace seed {

OracleKind OracleKind::noisy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "noisy oracle: flip_prob outside [0,1]");
  return {Variant::Noisy, p};
}

std::string OracleKind::name() const {
  switch (variant) {
    case Variant::GroundTruth: return "ground_truth";
    case Variant::SelfLabel: return "self_label";
    case Variant::Noisy: return "noisy";
  }
  return "unknown";
}

GroupLatents memory_group_latents(const BufferMemory& mem, const ModelParams& m) {
  const auto p0 = mem.pool(0);
  const auto p1 = mem.pool(1);
  if (p0.empty() || p1.empty()) {
    throw Error(ErrorCode::MissingClass, "group_distances: memory lacks class " + std::to_string(p0.empty() ? 0 : 1));
  }
  return {encode(m, stack_features(p0)), encode(m, stack_features(p1))};
}

namespace {

double mean_distance(const Eigen::Ref<const Vec64>& z, const Mat64& group, DistanceStrategy strategy) {
  if (strategy == DistanceStrategy::Centroid) {
    const Vec64 c = group.colwise().mean().transpose();
    return cosine_distance(z, c);
  }
  const double zn = z.norm();
  if (zn == 0.0) throw Error(ErrorCode::ZeroVector, "group_distances: zero latent");
  const Vec64 dots = group * z;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < group.rows(); ++i) {
    const double gn = group.row(i).norm();
    // An all-zero exemplar latent has no direction; treat it as orthogonal.
    const double cos = gn == 0.0 ? 0.0 : std::clamp(dots[i] / (zn * gn), -1.0, 1.0);
    sum += 1.0 - cos;
  }
  return sum / static_cast<double>(group.rows());
}

}  // namespace

GroupDistances group_distances(const Eigen::Ref<const Vec64>& z, const GroupLatents& groups,
                               DistanceStrategy strategy, SampleId id) {
  if (groups.group0.rows() == 0 || groups.group1.rows() == 0) {
    throw Error(ErrorCode::MissingClass, "group_distances: empty group");
  }
  return {id, mean_distance(z, groups.group0, strategy), mean_distance(z, groups.group1, strategy)};
}

GroupDistances group_distances(const Eigen::Ref<const Vec64>& z, const BufferMemory& mem, const ModelParams& m,
                               DistanceStrategy strategy, SampleId id) {
  return group_distances(z, memory_group_latents(mem, m), strategy, id);
}

std::vector<SampleId> select_for_labeling(const std::vector<GroupDistances>& distances, std::size_t budget,
                                          RankingDirection direction) {
  const std::size_t n = distances.size();
  if (budget >= n) {
    std::vector<SampleId> all;
    for (const auto& d : distances) all.push_back(d.sample_id);
    return all;
  }
  auto ranking = [&](double GroupDistances::*field) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const double da = distances[a].*field;
      const double db = distances[b].*field;
      if (da != db) return direction == RankingDirection::ClosestFirst ? da < db : da > db;
      return distances[a].sample_id < distances[b].sample_id;
    });
    return idx;
  };
  const auto r0 = ranking(&GroupDistances::d0);
  const auto r1 = ranking(&GroupDistances::d1);

  std::vector<SampleId> picked;
  std::unordered_set<std::size_t> taken;
  auto take_from = [&](const std::vector<std::size_t>& r, std::size_t count) {
    for (std::size_t i = 0; i < r.size() && count > 0; ++i) {
      if (taken.insert(r[i]).second) {
        picked.push_back(distances[r[i]].sample_id);
        --count;
      }
    }
  };
  take_from(r0, (budget + 1) / 2);
  take_from(r1, budget / 2);
  take_from(r1, budget - picked.size());
  take_from(r0, budget - picked.size());
  return picked;
}

std::vector<int> label_with_oracle(const std::vector<const Sample*>& selected, const OracleKind& oracle,
                                   const ModelParams& m, Rng& rng) {
  std::vector<int> labels;
  labels.reserve(selected.size());
  if (oracle.variant == OracleKind::Variant::SelfLabel) {
    if (selected.empty()) return labels;
    ModelParams frozen = m;
    frozen.mode = Mode::Eval;
    ForwardOptions opts;
    opts.keep_trace = false;
    const Mat64 probs = forward(frozen, stack_features(selected), nullptr, opts).probs;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) labels.push_back(probs(i, 1) > probs(i, 0) ? 1 : 0);
    return labels;
  }
  for (const Sample* s : selected) {
    int y = s->true_label;
    if (oracle.variant == OracleKind::Variant::Noisy && uniform01(rng) < oracle.flip_prob) y = 1 - y;
    labels.push_back(y);
  }
  return labels;
}

}  // namespace seed
