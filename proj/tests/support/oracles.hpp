#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// They deliberately avoid the library's own code paths.

#include <seed/model.hpp>
#include <seed/random.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace oracle {

/// Brute-force PR-AUC: every distinct score is a threshold, visited from the
/// highest down; precision/recall are counted from scratch per threshold; the
/// point (0,1) is appended last; a stable sort by recall orders the curve and
/// the trapezoid rule integrates it.
inline double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels, int pos_label) {
  std::vector<double> s = scores;
  if (pos_label == 0) {
    for (double& v : s) v = 1.0 - v;
  }
  const std::set<double> thresholds(s.begin(), s.end());
  double positives = 0;
  for (int y : labels) positives += (y == pos_label);
  std::vector<std::pair<double, double>> pts;
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= *it) (labels[i] == pos_label ? tp : fp) += 1;
    }
    pts.emplace_back(tp / positives, tp / (tp + fp));
  }
  pts.emplace_back(0.0, 1.0);
  std::stable_sort(pts.begin(), pts.end(), [](auto a, auto b) { return a.first < b.first; });
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) * 0.5;
  }
  return area;
}

/// Total loss of `terms` for inputs `x` with the dropout masks frozen, computed
/// with plain loops; used for finite differences.
inline double total_loss(const seed::ModelParams& m, const seed::Mat64& x, const seed::ForwardTrace& masks,
                         const seed::LossTerms& terms) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<double>> h(n);
  for (std::size_t r = 0; r < n; ++r) h[r].assign(x.row(static_cast<Eigen::Index>(r)).data(),
                                                  x.row(static_cast<Eigen::Index>(r)).data() + x.cols());
  for (std::size_t li = 0; li < m.encoder.size(); ++li) {
    const seed::Linear& L = m.encoder[li];
    std::vector<std::vector<double>> a(n, std::vector<double>(L.out));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t o = 0; o < L.out; ++o) {
        double acc = L.flat[static_cast<Eigen::Index>(L.in * L.out + o)];
        for (std::size_t i = 0; i < L.in; ++i) acc += L.flat[static_cast<Eigen::Index>(o * L.in + i)] * h[r][i];
        a[r][o] = acc;
      }
    if (!m.norms.empty()) {
      const seed::BatchNorm& bn = m.norms[li];
      const bool batch = m.mode == seed::Mode::Train;
      for (std::size_t o = 0; o < L.out; ++o) {
        double mean = 0, var = 0;
        if (batch) {
          for (std::size_t r = 0; r < n; ++r) mean += a[r][o];
          mean /= static_cast<double>(n);
          for (std::size_t r = 0; r < n; ++r) var += (a[r][o] - mean) * (a[r][o] - mean);
          var /= static_cast<double>(n);
        } else {
          mean = bn.running_mean[static_cast<Eigen::Index>(o)];
          var = bn.running_var[static_cast<Eigen::Index>(o)];
        }
        for (std::size_t r = 0; r < n; ++r) {
          a[r][o] = (a[r][o] - mean) / std::sqrt(var + bn.eps) * bn.flat[static_cast<Eigen::Index>(o)] +
                    bn.flat[static_cast<Eigen::Index>(L.out + o)];
        }
      }
    }
    const auto& mask = masks.layers[li].mask;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t o = 0; o < L.out; ++o) {
        double v = a[r][o];
        if (mask.size() > 0) v *= mask(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(o));
        a[r][o] = std::max(0.0, v);
      }
    h = std::move(a);
  }
  const seed::Linear& C = m.classifier;
  std::vector<std::vector<double>> p(n, std::vector<double>(C.out));
  for (std::size_t r = 0; r < n; ++r) {
    double mx = -1e300;
    for (std::size_t o = 0; o < C.out; ++o) {
      double acc = C.flat[static_cast<Eigen::Index>(C.in * C.out + o)];
      for (std::size_t i = 0; i < C.in; ++i) acc += C.flat[static_cast<Eigen::Index>(o * C.in + i)] * h[r][i];
      p[r][o] = acc;
      mx = std::max(mx, acc);
    }
    double z = 0;
    for (double& v : p[r]) z += (v = std::exp(v - mx));
    for (double& v : p[r]) v /= z;
  }
  double sup = 0, bce = 0;
  for (const auto& t : terms.sup) sup -= std::log(std::clamp(p[t.row][static_cast<std::size_t>(t.label)], 1e-12, 1 - 1e-12));
  if (!terms.sup.empty()) sup /= static_cast<double>(terms.sup.size());
  for (const auto& pr : terms.pairs) {
    double ss = 0;
    for (std::size_t o = 0; o < C.out; ++o) ss += p[pr.anchor_row][o] * p[pr.exemplar_row][o];
    bce -= std::log(std::max(ss, 1e-12));
  }
  if (!terms.pairs.empty()) bce /= static_cast<double>(terms.pairs.size());
  return sup + bce;
}

/// Builds a random 4-6-4 problem (input 4, hidden 6 and 4, two classes, batch
/// of 3 with one pair) and returns the worst relative error between the
/// analytic gradient and central differences with h = 1e-5.
inline double finite_difference_error(std::uint64_t seed) {
  seed::Rng rng(seed);
  seed::Architecture arch;
  arch.input_dim = 4;
  arch.hidden = {6, 4};
  seed::ModelParams m = seed::init_model(arch, seed);
  // perturb batchnorm parameters away from identity so they receive real gradients
  for (auto& bn : m.norms)
    for (Eigen::Index i = 0; i < bn.flat.size(); ++i) bn.flat[i] += 0.3 * seed::standard_normal(rng);
  seed::Mat64 x(3, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = seed::standard_normal(rng);
  seed::LossTerms terms;
  terms.sup = {{0, static_cast<int>(rng() & 1)}, {1, static_cast<int>(rng() & 1)}};
  terms.pairs = {{2, 0}};

  const seed::ForwardResult fr = seed::forward(m, x, &rng);
  const seed::LossValue lv = seed::evaluate_loss(fr.probs, terms);
  const seed::Gradients g = seed::backward(m, *fr.trace, lv.dlogits);

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t gi = 0; gi < m.group_count(); ++gi) {
    for (Eigen::Index k = 0; k < m.group(gi).size(); ++k) {
      seed::ModelParams plus = m, minus = m;
      plus.group(gi)[k] += h;
      minus.group(gi)[k] -= h;
      const double numeric = (total_loss(plus, x, *fr.trace, terms) - total_loss(minus, x, *fr.trace, terms)) / (2 * h);
      const double analytic = g.groups[gi][k];
      // at h=1e-5 the difference quotient carries ~1e-10 of rounding noise, so exactly-zero
      // gradients (biases feeding batchnorm, dead units) are compared against a 1e-5 floor
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-5});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

}  // namespace oracle
