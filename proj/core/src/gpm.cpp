#include "seed/gpm.hpp"

#include "seed/error.hpp"

#include <cmath>

namespace seed {

std::size_t GpmStore::total_rank() const {
  std::size_t n = 0;
  for (const auto& [key, b] : bases) n += b.rank();
  return n;
}

std::size_t GpmStore::rank(const std::string& key) const {
  const auto it = bases.find(key);
  return it == bases.end() ? 0 : it->second.rank();
}

namespace {

Vec64 flatten_all(const Gradients& g) {
  Eigen::Index total = 0;
  for (const auto& v : g.groups) total += v.size();
  Vec64 out(total);
  Eigen::Index off = 0;
  for (const auto& v : g.groups) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  return out;
}

void remove_span(const Basis& b, Eigen::Ref<Vec64> v) {
  if (b.empty()) return;
  if (b.dim() != static_cast<std::size_t>(v.size())) {
    throw Error(ErrorCode::ShapeMismatch, "project_orthogonal: basis dim " + std::to_string(b.dim()) +
                                              " vs gradient dim " + std::to_string(v.size()));
  }
  const Vec64 coeffs = b.vectors * v;
  v.noalias() -= b.vectors.transpose() * coeffs;
}

}  // namespace

Gradients project_orthogonal(const Gradients& g, const GpmStore& store) {
  Gradients out = g;
  if (store.bases.empty()) return out;
  if (store.layerwise) {
    for (std::size_t i = 0; i < out.groups.size(); ++i) {
      const auto it = store.bases.find(out.names[i]);
      if (it != store.bases.end()) remove_span(it->second, out.groups[i]);
    }
    return out;
  }
  const auto it = store.bases.find(GpmStore::kGlobalKey);
  if (it == store.bases.end()) return out;
  Vec64 flat = flatten_all(g);
  remove_span(it->second, flat);
  Eigen::Index off = 0;
  for (auto& v : out.groups) {
    v = flat.segment(off, v.size());
    off += v.size();
  }
  return out;
}

GpmUpdateReport update_basis(GpmStore& store, const GradientRows& task_gradients) {
  GpmUpdateReport report;
  bool any_rows = false;
  for (const auto& [key, rows] : task_gradients) any_rows = any_rows || rows.rows() > 0;
  if (!any_rows) {
    report.empty_gradient_set = true;
    return report;
  }

  for (const auto& [key, rows] : task_gradients) {
    if (rows.rows() == 0) continue;
    const auto dim = static_cast<std::size_t>(rows.cols());
    Basis& stored = store.bases[key];
    if (stored.empty()) {
      stored.vectors.resize(0, rows.cols());
      stored.singular_values.resize(0);
      stored.energy_threshold = store.energy_threshold;
    } else if (stored.dim() != dim) {
      throw Error(ErrorCode::ShapeMismatch, "update_basis: dimension changed for " + key);
    }
    const std::size_t cap = store.max_rank == 0 ? dim : std::min(store.max_rank, dim);
    if (stored.rank() >= cap) {
      report.added[key] = 0;
      continue;
    }

    Mat64 residual = rows;
    if (!stored.empty()) residual -= (residual * stored.vectors.transpose()) * stored.vectors;

    // Directions below this level are rounding noise left by the projection above.
    const double floor = std::max(1e-10, 1e-9 * rows.norm());
    if (residual.norm() <= floor) {
      report.added[key] = 0;
      continue;
    }
    // Energy already captured by the stored basis counts toward the threshold,
    // so only as many residual directions as needed to reach it are added.
    const double total = rows.squaredNorm();
    const double captured = total - residual.squaredNorm();
    const Basis fresh = svd_basis(residual, 1.0);
    double reached = captured;

    std::vector<Vec64> accepted;
    std::vector<double> accepted_sv;
    for (Eigen::Index i = 0; i < fresh.vectors.rows(); ++i) {
      if (reached >= store.energy_threshold * total) break;
      reached += fresh.singular_values[i] * fresh.singular_values[i];
      if (fresh.singular_values[i] <= floor) break;
      if (stored.rank() + accepted.size() >= cap) break;
      Vec64 v = fresh.vectors.row(i).transpose();
      // Two Gram-Schmidt passes against everything already kept.
      for (int pass = 0; pass < 2; ++pass) {
        if (!stored.empty()) v -= stored.vectors.transpose() * (stored.vectors * v);
        for (const Vec64& a : accepted) v -= a.dot(v) * a;
      }
      const double nv = v.norm();
      if (nv < 1e-8) continue;
      accepted.push_back(v / nv);
      accepted_sv.push_back(fresh.singular_values[i]);
    }

    if (!accepted.empty()) {
      const Eigen::Index k0 = stored.vectors.rows();
      const auto k1 = static_cast<Eigen::Index>(accepted.size());
      stored.vectors.conservativeResize(k0 + k1, Eigen::NoChange);
      stored.singular_values.conservativeResize(k0 + k1);
      for (Eigen::Index i = 0; i < k1; ++i) {
        stored.vectors.row(k0 + i) = accepted[static_cast<std::size_t>(i)].transpose();
        stored.singular_values[k0 + i] = accepted_sv[static_cast<std::size_t>(i)];
      }
    }
    report.added[key] = accepted.size();
  }
  return report;
}

GradientRows collect_sample_gradients(const ModelParams& m, const Eigen::Ref<const Mat64>& x, int label,
                                      bool layerwise) {
  GradientRows out;
  if (x.rows() == 0) return out;
  ModelParams frozen = m;
  frozen.mode = Mode::Eval;

  const std::size_t groups = frozen.group_count();
  std::vector<Mat64> per_group(groups);
  Mat64 global;
  const auto n = x.rows();
  for (std::size_t gi = 0; gi < groups; ++gi) per_group[gi].resize(n, frozen.group(gi).size());
  if (!layerwise) global.resize(n, static_cast<Eigen::Index>(frozen.parameter_count()));

  LossTerms terms;
  terms.sup.push_back({0, label});
  for (Eigen::Index r = 0; r < n; ++r) {
    const ForwardResult fr = forward(frozen, x.row(r), nullptr);
    const LossValue lv = evaluate_loss(fr.probs, terms);
    const Gradients g = backward(frozen, *fr.trace, lv.dlogits);
    Eigen::Index off = 0;
    for (std::size_t gi = 0; gi < groups; ++gi) {
      if (layerwise) {
        per_group[gi].row(r) = g.groups[gi].transpose();
      } else {
        global.row(r).segment(off, g.groups[gi].size()) = g.groups[gi].transpose();
        off += g.groups[gi].size();
      }
    }
  }
  if (layerwise) {
    for (std::size_t gi = 0; gi < groups; ++gi) out.emplace(frozen.group_name(gi), std::move(per_group[gi]));
  } else {
    out.emplace(GpmStore::kGlobalKey, std::move(global));
  }
  return out;
}

}  // namespace seed
