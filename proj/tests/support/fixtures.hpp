#pragma once

#include <seed/data.hpp>

#include <vector>

namespace fixture {

inline seed::Sample sample(seed::SampleId id, int label, std::size_t task = 0, seed::Vec64 features = seed::Vec64::Zero(2)) {
  seed::Sample s;
  s.id = id;
  s.features = std::move(features);
  s.true_label = label;
  s.observed_label = label;
  s.task_index = task;
  return s;
}

/// `benign` label-0 samples followed by `malware` label-1 samples, ids from `first_id`.
inline std::vector<seed::Sample> labeled(std::size_t benign, std::size_t malware, std::size_t task,
                                         seed::SampleId first_id = 0) {
  std::vector<seed::Sample> out;
  for (std::size_t i = 0; i < benign + malware; ++i) {
    out.push_back(sample(first_id + static_cast<seed::SampleId>(i), i < benign ? 0 : 1, task));
  }
  return out;
}

inline seed::Vec64 vec(std::initializer_list<double> v) {
  seed::Vec64 out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace fixture
