#include "seed/memory.hpp"

#include "seed/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seed {

void BufferMemory::store_task_chunks(std::size_t task_id, std::vector<Sample> labeled) {
  if (has_task(task_id)) throw Error(ErrorCode::DuplicateTask, "task " + std::to_string(task_id) + " already stored");
  Chunk benign{task_id, 0, {}};
  Chunk malware{task_id, 1, {}};
  for (Sample& s : labeled) {
    if (!s.observed_label) throw Error(ErrorCode::InvalidArgument, "store_task_chunks: sample " + std::to_string(s.id) + " has no label");
    if (s.task_index != task_id) {
      throw Error(ErrorCode::InvalidArgument, "store_task_chunks: sample " + std::to_string(s.id) + " belongs to task " +
                                                  std::to_string(s.task_index));
    }
    (*s.observed_label == 1 ? malware : benign).samples.push_back(std::move(s));
  }
  chunks_.push_back(std::move(benign));
  chunks_.push_back(std::move(malware));
}

bool BufferMemory::has_task(std::size_t task_id) const {
  return std::any_of(chunks_.begin(), chunks_.end(), [&](const Chunk& c) { return c.task_id == task_id; });
}

std::size_t BufferMemory::size() const {
  std::size_t n = 0;
  for (const Chunk& c : chunks_) n += c.samples.size();
  return n;
}

std::size_t BufferMemory::class_count(int label) const {
  std::size_t n = 0;
  for (const Chunk& c : chunks_)
    if (c.label == label) n += c.samples.size();
  return n;
}

std::vector<const Sample*> BufferMemory::pool(int label) const {
  std::vector<const Sample*> out;
  for (const Chunk& c : chunks_)
    if (c.label == label)
      for (const Sample& s : c.samples) out.push_back(&s);
  return out;
}

std::vector<const Sample*> BufferMemory::all() const {
  std::vector<const Sample*> out;
  for (const Chunk& c : chunks_)
    for (const Sample& s : c.samples) out.push_back(&s);
  return out;
}

std::vector<const Sample*> BufferMemory::retrieve_balanced(std::size_t b_m, double bma, Rng& rng) const {
  if (!(bma >= 0.0 && bma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "retrieve_balanced: bma outside [0,1]");
  const auto benign = pool(0);
  const auto malware = pool(1);
  if (benign.empty() && malware.empty()) throw Error(ErrorCode::EmptyMemory, "retrieve_balanced: memory is empty");

  const std::size_t want = std::min(b_m, benign.size() + malware.size());
  std::size_t n_mal = static_cast<std::size_t>(std::llround(bma * static_cast<double>(b_m)));
  n_mal = std::min(n_mal, want);
  std::size_t n_ben = want - n_mal;
  if (n_mal > malware.size()) {
    n_ben += n_mal - malware.size();
    n_mal = malware.size();
  }
  if (n_ben > benign.size()) {
    n_mal += n_ben - benign.size();
    n_ben = benign.size();
  }

  std::vector<const Sample*> out;
  out.reserve(want);
  for (std::size_t i : sample_without_replacement(malware.size(), n_mal, rng)) out.push_back(malware[i]);
  for (std::size_t i : sample_without_replacement(benign.size(), n_ben, rng)) out.push_back(benign[i]);
  return out;
}

void BufferMemory::enqueue_delayed(std::vector<Sample> samples, std::size_t labeled_at_task, DelayPolicy policy) {
  if (policy.delta_tasks == 0) {
    store_task_chunks(labeled_at_task, std::move(samples));
    return;
  }
  DelayEntry entry{labeled_at_task, labeled_at_task + policy.delta_tasks, std::move(samples)};
  const auto pos = std::upper_bound(queue_.begin(), queue_.end(), entry.admit_at_task,
                                    [](std::size_t at, const DelayEntry& e) { return at < e.admit_at_task; });
  queue_.insert(pos, std::move(entry));
}

AdmissionReport BufferMemory::advance_delay_queue(std::size_t current_task,
                                                  const std::function<int(const Sample&)>& label_refresh) {
  if (clock_ && current_task < *clock_) {
    throw Error(ErrorCode::NonMonotonicClock, "advance_delay_queue: task " + std::to_string(current_task) +
                                                  " after task " + std::to_string(*clock_));
  }
  clock_ = current_task;
  AdmissionReport report;
  while (!queue_.empty() && queue_.front().admit_at_task <= current_task) {
    DelayEntry entry = std::move(queue_.front());
    queue_.pop_front();
    for (Sample& s : entry.samples) {
      if (label_refresh) {
        const int fresh = label_refresh(s);
        if (!s.observed_label || *s.observed_label != fresh) ++report.relabeled;
        s.observed_label = fresh;
      }
    }
    report.samples += entry.samples.size();
    ++report.entries;
    store_task_chunks(entry.labeled_at_task, std::move(entry.samples));
  }
  return report;
}

OccupancyReport BufferMemory::occupancy() const {
  OccupancyReport r;
  r.chunks = chunks_.size();
  r.benign = class_count(0);
  r.malware = class_count(1);
  r.queued_entries = queue_.size();
  for (const DelayEntry& e : queue_) r.queued_samples += e.samples.size();
  return r;
}

}  // namespace seed
