#include "seed/metrics.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace seed {

void ScoredBatch::validate() const {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "scored batch: " + std::to_string(scores.size()) + " scores vs " +
                                              std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "scored batch: label outside {0,1}");
  }
}

namespace {

/// Indices sorted by score descending.
std::vector<std::size_t> descending(const std::vector<double>& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return idx;
}

}  // namespace

double pr_auc(const ScoredBatch& batch, int pos_label) {
  batch.validate();
  if (pos_label != 0 && pos_label != 1) throw Error(ErrorCode::InvalidArgument, "pr_auc: pos_label must be 0 or 1");
  std::vector<double> s = batch.scores;
  if (pos_label == 0) {
    for (double& v : s) v = 1.0 - v;
  }
  const auto positives = static_cast<std::size_t>(std::count(batch.labels.begin(), batch.labels.end(), pos_label));
  if (positives == 0) throw Error(ErrorCode::NoPositives, "pr_auc: no samples of class " + std::to_string(pos_label));

  const auto order = descending(s);
  std::vector<std::pair<double, double>> curve;  // (recall, precision)
  curve.reserve(order.size() + 1);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (batch.labels[order[i]] == pos_label) ++tp; else ++fp;
    const bool last_of_tie = i + 1 == order.size() || s[order[i + 1]] != s[order[i]];
    if (!last_of_tie) continue;
    curve.emplace_back(static_cast<double>(tp) / static_cast<double>(positives),
                       static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  curve.emplace_back(0.0, 1.0);
  std::stable_sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second) / 2.0;
  }
  return area;
}

double aut(const std::vector<double>& series) {
  if (series.size() < 2) throw Error(ErrorCode::SeriesTooShort, "aut: need at least 2 values");
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < series.size(); ++k) sum += (series[k + 1] + series[k]) / 2.0;
  return sum / static_cast<double>(series.size() - 1);
}

TprAtFpr tpr_at_fpr(const ScoredBatch& batch, double fpr_target) {
  batch.validate();
  const auto pos = static_cast<std::size_t>(std::count(batch.labels.begin(), batch.labels.end(), 1));
  const std::size_t neg = batch.labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::DegenerateBatch, "tpr_at_fpr: batch needs both classes");

  const auto order = descending(batch.scores);
  TprAtFpr best;
  bool found = false;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (batch.labels[order[i]] == 1) ++tp; else ++fp;
    const bool last_of_tie = i + 1 == order.size() || batch.scores[order[i + 1]] != batch.scores[order[i]];
    if (!last_of_tie) continue;
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    if (fpr > fpr_target) break;
    best.tpr = static_cast<double>(tp) / static_cast<double>(pos);
    best.threshold = batch.scores[order[i]];
    found = true;
  }
  if (!found) {
    // Strictest operating point: only the top score group is flagged.
    std::size_t t = 0;
    const double top = batch.scores[order[0]];
    for (std::size_t i : order) {
      if (batch.scores[i] != top) break;
      t += batch.labels[i] == 1 ? 1 : 0;
    }
    best.tpr = static_cast<double>(t) / static_cast<double>(pos);
    best.threshold = top;
    best.target_unreachable = true;
  }
  return best;
}

}  // namespace seed
