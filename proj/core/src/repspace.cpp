#include "seed/repspace.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace seed {

double ThresholdConfig::effective_tau_init() const { return tau_init.value_or(0.2 * dynamic_tau_max(*this)); }
double ThresholdConfig::effective_step() const { return step.value_or(0.2 * dynamic_tau_max(*this)); }

void ThresholdConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, "threshold: " + what); };
  if (!(tau_max > 0.0)) fail("tau_max must be positive");
  if (!(beta >= 0.0)) fail("beta must be non-negative");
  if (!(label_ratio >= 0.0 && label_ratio <= 1.0)) fail("label_ratio must lie in [0,1]");
  if (!(effective_step() > 0.0)) fail("step must be positive");
  const double ti = effective_tau_init();
  if (!(ti > 0.0 && ti <= tau_max)) fail("tau_init must lie in (0, tau_max]");
}

double dynamic_tau_max(const ThresholdConfig& cfg) { return cfg.tau_max * std::exp(-cfg.label_ratio * cfg.beta); }

Vec64 RepSpace::project(const Eigen::Ref<const Vec64>& z) const {
  if (!basis) return z;
  return project_onto_span(*basis, z);
}

RepSpace build_rep_space(const std::vector<const Sample*>& exemplars, const ModelParams& m, double energy,
                         bool svd_enabled) {
  if (exemplars.empty()) throw Error(ErrorCode::EmptyMemory, "build_rep_space: no exemplars");
  RepSpace rs;
  std::array<std::size_t, 2> per_class{0, 0};
  for (const Sample* s : exemplars) {
    const int y = s->observed_label.value_or(s->true_label);
    ++per_class[static_cast<std::size_t>(y == 1)];
    rs.memory_labels.push_back(y);
    rs.exemplar_ids.push_back(s->id);
  }
  if (per_class[0] == 0 || per_class[1] == 0) {
    throw Error(ErrorCode::MissingClass, "build_rep_space: memory lacks class " + std::to_string(per_class[0] == 0 ? 0 : 1));
  }
  rs.memory_inputs = stack_features(exemplars);
  rs.memory_latents = encode(m, rs.memory_inputs);
  rs.latent_norms = rs.memory_latents.rowwise().norm();
  if (svd_enabled) rs.basis = svd_basis(rs.memory_latents, energy);
  return rs;
}

std::optional<ExemplarMatch> find_suitable_exemplar(const Eigen::Ref<const Vec64>& z, const RepSpace& rs,
                                                    const ThresholdConfig& cfg, const MatchQuery& query) {
  if (z.size() != rs.memory_latents.cols()) {
    throw Error(ErrorCode::DimMismatch, "find_suitable_exemplar: latent dim " + std::to_string(z.size()));
  }
  const Vec64 zp = rs.project(z);
  const double zn = zp.norm();
  if (zn == 0.0) return std::nullopt;

  const std::size_t n = rs.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  const Vec64 dots = rs.memory_latents * zp;
  for (std::size_t i = 0; i < n; ++i) {
    if (query.exclude_id && rs.exemplar_ids[i] == *query.exclude_id) continue;
    if (query.restrict_label && rs.memory_labels[i] != *query.restrict_label) continue;
    const double ln = rs.latent_norms[static_cast<Eigen::Index>(i)];
    if (ln == 0.0) continue;
    const double cos = std::clamp(dots[static_cast<Eigen::Index>(i)] / (zn * ln), -1.0, 1.0);
    dist[i] = 1.0 - cos;
  }

  const double tau_max = dynamic_tau_max(cfg);
  const double tau_init = cfg.effective_tau_init();
  const double step = cfg.effective_step();
  const double limit = tau_max * (1.0 + 1e-12);
  for (std::size_t round = 0;; ++round) {
    const double tau = tau_init + static_cast<double>(round) * step;
    if (tau > limit) break;
    std::array<std::size_t, 2> count{0, 0};
    std::array<std::size_t, 2> best{n, n};
    for (std::size_t i = 0; i < n; ++i) {
      if (!(dist[i] < tau)) continue;
      const auto y = static_cast<std::size_t>(rs.memory_labels[i] == 1);
      ++count[y];
      if (best[y] == n || dist[i] < dist[best[y]]) best[y] = i;
    }
    if (count[0] + count[1] == 0) continue;
    const std::size_t group = count[1] > count[0] ? 1 : 0;
    const std::size_t i = best[group];
    return ExemplarMatch{i, rs.exemplar_ids[i], rs.memory_labels[i], dist[i], tau};
  }
  return std::nullopt;
}

}  // namespace seed
