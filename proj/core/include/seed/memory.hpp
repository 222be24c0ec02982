#pragma once

#include "seed/data.hpp"
#include "seed/random.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

namespace seed {

/// Labelled exemplars of one class from one task.
struct Chunk {
  std::size_t task_id = 0;
  int label = 0;
  std::vector<Sample> samples;
};

struct DelayPolicy {
  std::size_t delta_tasks = 0;  // 0 = admit immediately
};

struct DelayEntry {
  std::size_t labeled_at_task = 0;
  std::size_t admit_at_task = 0;
  std::vector<Sample> samples;
};

struct AdmissionReport {
  std::size_t entries = 0;
  std::size_t samples = 0;
  std::size_t relabeled = 0;  // samples whose label changed on refresh
};

struct OccupancyReport {
  std::size_t chunks = 0;
  std::size_t benign = 0;
  std::size_t malware = 0;
  std::size_t queued_entries = 0;
  std::size_t queued_samples = 0;
};

/// Replay buffer made of per-task benign/malware chunks plus a queue of
/// labelled samples waiting for delayed admission. Retrieval treats all
/// chunks of a class as one pool.
class BufferMemory {
 public:
  /// Appends the task's benign chunk then its malware chunk (either may be empty).
  void store_task_chunks(std::size_t task_id, std::vector<Sample> labeled);

  /// round(bma * b_m) malware and the rest benign, uniformly without
  /// replacement; a short pool is topped up from the other class. The returned
  /// pointers stay valid until the memory is next modified.
  std::vector<const Sample*> retrieve_balanced(std::size_t b_m, double bma, Rng& rng) const;

  /// delta == 0 stores right away; otherwise the samples wait until
  /// advance_delay_queue() reaches labeled_at_task + delta.
  void enqueue_delayed(std::vector<Sample> samples, std::size_t labeled_at_task, DelayPolicy policy);

  /// Admits every due entry with labels replaced by `label_refresh`.
  AdmissionReport advance_delay_queue(std::size_t current_task, const std::function<int(const Sample&)>& label_refresh);

  const std::vector<Chunk>& chunks() const { return chunks_; }
  const std::deque<DelayEntry>& queue() const { return queue_; }
  bool has_task(std::size_t task_id) const;
  bool empty() const { return size() == 0; }
  std::size_t size() const;
  std::size_t class_count(int label) const;
  std::vector<const Sample*> pool(int label) const;
  std::vector<const Sample*> all() const;
  OccupancyReport occupancy() const;

 private:
  std::vector<Chunk> chunks_;
  std::deque<DelayEntry> queue_;
  std::optional<std::size_t> clock_;
};

}  // namespace seed
