#pragma once

#include <vector>

namespace seed {

/// Malware-class probabilities and true labels.
struct ScoredBatch {
  std::vector<double> scores;
  std::vector<int> labels;

  void validate() const;
};

/// Area under the precision-recall curve for class `pos_label`. For
/// pos_label 0 the scores are mirrored (1 - score). Thresholds are the distinct
/// scores; the curve is closed with (recall 0, precision 1) and integrated with
/// the trapezoidal rule. Throws NoPositives.
double pr_auc(const ScoredBatch& batch, int pos_label);

/// (1/(N-1)) * sum of trapezoids between consecutive values. Throws SeriesTooShort.
double aut(const std::vector<double>& series);

struct TprAtFpr {
  double tpr = 0.0;
  double threshold = 0.0;
  bool target_unreachable = false;  // even the strictest threshold exceeds the target
};

/// Smallest threshold whose FPR stays within `fpr_target` (score >= threshold
/// is predicted malware). Throws DegenerateBatch without both classes.
TprAtFpr tpr_at_fpr(const ScoredBatch& batch, double fpr_target);

}  // namespace seed
