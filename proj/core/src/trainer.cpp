#include "seed/trainer.hpp"

#include "seed/checkpoint.hpp"
#include "seed/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace seed {

PhaseTimings& PhaseTimings::operator+=(const PhaseTimings& o) {
  buffer += o.buffer;
  svd += o.svd;
  gpm += o.gpm;
  selection += o.selection;
  train += o.train;
  eval += o.eval;
  total += o.total;
  return *this;
}

AutSummary AutSummary::from_values(const std::vector<double>& v) {
  if (v.size() != 6) throw Error(ErrorCode::InvalidArgument, "AutSummary needs 6 values");
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

double series_aut(const std::vector<double>& series) {
  std::vector<double> finite;
  for (double x : series) {
    if (std::isfinite(x)) finite.push_back(x);
  }
  if (finite.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (finite.size() == 1) return finite.front();
  return aut(finite);
}

AutSummary summarize(const std::vector<TaskRecord>& tasks) {
  std::vector<double> sb, sa, ub, ua, ob, oa;
  for (const TaskRecord& r : tasks) {
    (r.seen ? sb : ub).push_back(r.pr_auc_benign);
    (r.seen ? sa : ua).push_back(r.pr_auc_malware);
    ob.push_back(r.pr_auc_benign);
    oa.push_back(r.pr_auc_malware);
  }
  return {series_aut(sb), series_aut(sa), series_aut(ub), series_aut(ua), series_aut(ob), series_aut(oa)};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Independent streams derived from the run seed.
constexpr std::uint64_t kTrainStream = 0x747261696e000001ULL;
constexpr std::uint64_t kOracleStream = 0x6f7261636c650002ULL;
constexpr std::uint64_t kMaskStream = 0x6d61736b00000003ULL;
constexpr std::uint64_t kModelStream = 0x6d6f64656c000004ULL;

std::uint64_t fnv1a(const std::vector<SampleId>& ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (SampleId id : ids) {
    auto v = static_cast<std::uint64_t>(id);
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

struct ConsumedLog {
  std::vector<SampleId> ids;
  std::size_t max_task = 0;

  void add(const Sample& s) {
    ids.push_back(s.id);
    max_task = std::max(max_task, s.task_index);
  }
};

int label_of(const Sample& s) { return s.observed_label.value_or(s.true_label); }

ModelParams eval_copy(const ModelParams& m) {
  ModelParams e = m;
  e.mode = Mode::Eval;
  return e;
}

/// Memory admission at the start of task `t`.
void begin_task(TrainerState& state, std::size_t t, TaskRecord& rec) {
  const auto t0 = Clock::now();
  rec.admitted = state.memory.advance_delay_queue(t, [](const Sample& s) { return s.true_label; });
  rec.timings.buffer += seconds_since(t0);
}

/// Shared body of seen and adapted unseen tasks.
void train_task(TrainerState& state, const TaskData& task, const ExperimentConfig& cfg, TaskRecord& rec) {
  const std::size_t t = task.index;
  rec.task = t;
  rec.month = task.month;
  state.model.mode = Mode::Train;

  // Store D_l, possibly through the delay queue.
  const DelayPolicy policy = (rec.seen && !cfg.delay_seen_tasks) ? DelayPolicy{0} : cfg.delay;
  const bool pending = policy.delta_tasks > 0;
  {
    const auto t0 = Clock::now();
    state.memory.enqueue_delayed(task.labeled, t, policy);
    rec.timings.buffer += seconds_since(t0);
  }

  // Labels still in the queue are not trusted for supervision; those samples
  // stay in the task as unlabelled data.
  std::vector<const Sample*> sup_pool;
  std::vector<const Sample*> unl_pool;
  for (const Sample& s : task.labeled) (pending && !cfg.train_on_pending ? unl_pool : sup_pool).push_back(&s);
  for (const Sample& s : task.unlabeled) unl_pool.push_back(&s);
  rec.labeled = sup_pool.size();
  rec.unlabeled = unl_pool.size();

  std::optional<RepSpace> rs;
  if (cfg.pairing_enabled) {
    const auto t0 = Clock::now();
    try {
      rs = build_rep_space(state.memory.all(), state.model, cfg.repspace_energy, cfg.svd_enabled);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyMemory && e.code() != ErrorCode::MissingClass) throw;
    }
    rec.timings.svd += seconds_since(t0);
  }
  const ThresholdConfig thr = cfg.effective_threshold();

  const std::size_t batch = cfg.optimizer.batch_size;
  const std::size_t n_m =
      cfg.memory.replay && !state.memory.empty()
          ? std::min<std::size_t>(static_cast<std::size_t>(std::llround(cfg.memory.b_m_frac * static_cast<double>(batch))),
                                  batch - 1)
          : 0;
  const std::size_t rest = batch - n_m;
  std::size_t b_l = 0, b_u = 0;
  if (!sup_pool.empty() && !unl_pool.empty()) {
    const double share = static_cast<double>(sup_pool.size()) / static_cast<double>(sup_pool.size() + unl_pool.size());
    b_l = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(share * static_cast<double>(rest))), 1,
                                  rest > 1 ? rest - 1 : 1);
    b_u = rest - std::min(b_l, rest);
    if (b_u == 0) b_u = 1;
  } else if (!sup_pool.empty()) {
    b_l = rest;
  } else if (!unl_pool.empty()) {
    b_u = rest;
  }
  b_l = std::min(b_l, sup_pool.size());
  b_u = std::min(b_u, unl_pool.size());
  std::size_t steps = 0;
  if (b_l > 0) steps = std::max(steps, (sup_pool.size() + b_l - 1) / b_l);
  if (b_u > 0) steps = std::max(steps, (unl_pool.size() + b_u - 1) / b_u);

  const bool project = cfg.gpm.enabled && state.tasks_trained > 0 && !state.gpm.bases.empty();
  double gpm_seconds = 0.0;
  GradientTransform transform = [&](Gradients& g) {
    const auto t0 = Clock::now();
    g = project_orthogonal(g, state.gpm);
    gpm_seconds += seconds_since(t0);
  };

  ConsumedLog consumed;
  const auto d = static_cast<Eigen::Index>(state.model.arch.input_dim);
  const auto train_t0 = Clock::now();
  double best = -1.0;
  std::size_t bad_epochs = 0;
  for (std::size_t epoch = 0; epoch < cfg.optimizer.epochs_per_task && steps > 0; ++epoch) {
    std::vector<const Sample*> lorder = sup_pool;
    std::vector<const Sample*> uorder = unl_pool;
    shuffle(lorder, state.rng);
    shuffle(uorder, state.rng);

    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<const Sample*> bl, bu;
      for (std::size_t i = 0; i < b_l; ++i) bl.push_back(lorder[(step * b_l + i) % lorder.size()]);
      for (std::size_t i = 0; i < b_u; ++i) bu.push_back(uorder[(step * b_u + i) % uorder.size()]);
      std::vector<const Sample*> bm;
      if (n_m > 0) {
        const auto t0 = Clock::now();
        bm = state.memory.retrieve_balanced(n_m, cfg.memory.bma, state.rng);
        rec.timings.buffer += seconds_since(t0);
      }

      // Pair anchors with exemplars in the representation space.
      std::vector<std::pair<std::size_t, std::size_t>> l_pairs, u_pairs;  // (anchor index, exemplar row in rs)
      if (rs && !(bl.empty() && bu.empty())) {
        std::vector<const Sample*> anchors = bl;
        anchors.insert(anchors.end(), bu.begin(), bu.end());
        const Mat64 z = encode(state.model, stack_features(anchors));
        for (std::size_t i = 0; i < anchors.size(); ++i) {
          const bool labeled = i < bl.size();
          MatchQuery q;
          if (labeled) {
            q.exclude_id = anchors[i]->id;
            q.restrict_label = label_of(*anchors[i]);
          }
          const auto match = find_suitable_exemplar(z.row(static_cast<Eigen::Index>(i)).transpose(), *rs, thr, q);
          if (labeled) {
            if (match) l_pairs.emplace_back(i, match->index);
          } else if (match) {
            u_pairs.emplace_back(i - bl.size(), match->index);
            ++rec.accepted_pairs;
          } else {
            ++rec.rejected_pairs;
          }
        }
      } else {
        rec.rejected_pairs += bu.size();
      }

      // Rows: B_l | B_m | matched B_u | exemplars.
      const std::size_t n_rows = bl.size() + bm.size() + u_pairs.size() + l_pairs.size() + u_pairs.size();
      if (n_rows < 2) continue;
      Mat64 x(static_cast<Eigen::Index>(n_rows), d);
      LossTerms terms;
      terms.stop_exemplar_gradient = cfg.stop_exemplar_gradient;
      std::size_t row = 0;
      for (const Sample* s : bl) {
        x.row(static_cast<Eigen::Index>(row)) = s->features.transpose();
        terms.sup.push_back({row++, label_of(*s)});
        consumed.add(*s);
      }
      for (const Sample* s : bm) {
        x.row(static_cast<Eigen::Index>(row)) = s->features.transpose();
        terms.sup.push_back({row++, label_of(*s)});
        consumed.add(*s);
      }
      std::vector<std::size_t> u_rows;
      for (const auto& [ui, ei] : u_pairs) {
        x.row(static_cast<Eigen::Index>(row)) = bu[ui]->features.transpose();
        u_rows.push_back(row++);
        consumed.add(*bu[ui]);
      }
      auto add_exemplar = [&](std::size_t ei) {
        x.row(static_cast<Eigen::Index>(row)) = rs->memory_inputs.row(static_cast<Eigen::Index>(ei));
        consumed.ids.push_back(rs->exemplar_ids[ei]);
        return row++;
      };
      for (const auto& [li, ei] : l_pairs) terms.pairs.push_back({li, add_exemplar(ei)});
      for (std::size_t k = 0; k < u_pairs.size(); ++k) terms.pairs.push_back({u_rows[k], add_exemplar(u_pairs[k].second)});

      const ForwardResult fr = forward(state.model, x, &state.rng);
      const LossValue lv = evaluate_loss(fr.probs, terms);
      const Gradients g = backward(state.model, *fr.trace, lv.dlogits);
      sgd_step(state.model, g, cfg.optimizer, project ? &transform : nullptr);
      update_running_stats(state.model, *fr.trace);
      ++rec.steps;
    }
    ++rec.epochs_run;

    // Early stopping on validation PR-AUC(malware); the last parameters are kept.
    const double val = evaluate_split(state.model, task.validation).second;
    if (!std::isfinite(val)) continue;
    if (val > best) {
      best = val;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.optimizer.patience && cfg.optimizer.patience > 0) {
      break;
    }
  }
  rec.best_validation = best >= 0.0 ? best : std::numeric_limits<double>::quiet_NaN();
  rec.timings.train += seconds_since(train_t0);
  rec.timings.gpm += gpm_seconds;

  if (cfg.gpm.enabled) {
    const auto t0 = Clock::now();
    std::vector<const Sample*> malware;
    for (const Sample* s : sup_pool) {
      if (label_of(*s) == 1) malware.push_back(s);
    }
    if (!malware.empty()) {
      const GradientRows rows = collect_sample_gradients(state.model, stack_features(malware), 1, cfg.gpm.layerwise);
      const GpmUpdateReport report = update_basis(state.gpm, rows);
      for (const auto& [key, n] : report.added) rec.gpm_added += n;
    }
    rec.timings.gpm += seconds_since(t0);
  }
  rec.gpm_rank = state.gpm.total_rank();
  rec.occupancy = state.memory.occupancy();

  std::sort(consumed.ids.begin(), consumed.ids.end());
  consumed.ids.erase(std::unique(consumed.ids.begin(), consumed.ids.end()), consumed.ids.end());
  rec.consumed_checksum = fnv1a(consumed.ids);
  rec.consumed_count = consumed.ids.size();
  rec.consumed_max_task = consumed.max_task;
  std::unordered_set<SampleId> held_out;
  for (const Sample& s : task.test) held_out.insert(s.id);
  for (const Sample& s : task.validation) held_out.insert(s.id);
  for (SampleId id : consumed.ids) rec.test_leak = rec.test_leak || held_out.count(id) > 0;

  ++state.tasks_trained;
}

}  // namespace

TrainerState init_state(const ExperimentConfig& cfg, std::size_t input_dim, std::uint64_t seed) {
  Architecture arch = cfg.arch;
  arch.input_dim = input_dim;
  TrainerState st;
  st.model = init_model(arch, seed ^ kModelStream);
  st.rng = Rng(seed ^ kTrainStream);
  st.oracle_rng = Rng(seed ^ kOracleStream);
  st.gpm.energy_threshold = cfg.gpm.energy;
  st.gpm.layerwise = cfg.gpm.layerwise;
  st.gpm.max_rank = cfg.gpm.max_rank;
  return st;
}

std::pair<double, double> evaluate_split(const ModelParams& m, const std::vector<Sample>& split) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (split.empty()) return {nan, nan};
  const ModelParams e = eval_copy(m);
  ForwardOptions opts;
  opts.keep_trace = false;
  const Mat64 probs = forward(e, stack_features(split), nullptr, opts).probs;
  ScoredBatch b;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    b.scores.push_back(probs(i, 1));
    b.labels.push_back(split[static_cast<std::size_t>(i)].true_label);
  }
  const auto pos = std::count(b.labels.begin(), b.labels.end(), 1);
  const auto n = static_cast<std::ptrdiff_t>(b.labels.size());
  const double benign = pos < n ? pr_auc(b, 0) : nan;
  const double malware = pos > 0 ? pr_auc(b, 1) : nan;
  return {benign, malware};
}

void train_seen_task(TrainerState& state, const TaskData& task, const ExperimentConfig& cfg, TaskRecord& rec) {
  const auto t0 = Clock::now();
  begin_task(state, task.index, rec);
  train_task(state, task, cfg, rec);
  rec.timings.total += seconds_since(t0);
}

void run_unseen_task(TrainerState& state, const TaskData& task, const ExperimentConfig& cfg, TaskRecord& rec,
                     std::vector<SelectionRecord>& selections) {
  const auto t0 = Clock::now();
  rec.seen = false;
  begin_task(state, task.index, rec);

  if (cfg.evaluate_before_adaptation) {
    const auto te = Clock::now();
    const auto [b, a] = evaluate_split(state.model, task.test);
    rec.pre_pr_auc_benign = b;
    rec.pre_pr_auc_malware = a;
    rec.timings.eval += seconds_since(te);
  }

  const auto ts = Clock::now();
  std::vector<const Sample*> pool;
  for (const Sample& s : task.labeled) pool.push_back(&s);
  for (const Sample& s : task.unlabeled) pool.push_back(&s);
  const GroupLatents groups = memory_group_latents(state.memory, state.model);
  std::vector<GroupDistances> dists;
  if (!pool.empty()) {
    const Mat64 z = encode(state.model, stack_features(pool));
    for (std::size_t i = 0; i < pool.size(); ++i) {
      dists.push_back(group_distances(z.row(static_cast<Eigen::Index>(i)).transpose(), groups, cfg.distance, pool[i]->id));
    }
  }
  const std::vector<SampleId> picked = select_for_labeling(dists, cfg.monthly_budget, cfg.ranking);
  rec.oracle_calls = picked.size();
  rec.budget_shortfall = cfg.monthly_budget > pool.size() ? cfg.monthly_budget - pool.size() : 0;

  std::unordered_map<SampleId, std::size_t> index_of;
  for (std::size_t i = 0; i < pool.size(); ++i) index_of.emplace(pool[i]->id, i);
  std::vector<const Sample*> chosen;
  for (SampleId id : picked) chosen.push_back(pool[index_of.at(id)]);
  const std::vector<int> labels = label_with_oracle(chosen, cfg.oracle, state.model, state.oracle_rng);

  TaskData adapted;
  adapted.index = task.index;
  adapted.month = task.month;
  adapted.validation = task.validation;
  adapted.test = task.test;
  std::unordered_set<SampleId> chosen_ids(picked.begin(), picked.end());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    Sample s = *chosen[k];
    s.observed_label = labels[k];
    adapted.labeled.push_back(std::move(s));
    const GroupDistances& gd = dists[index_of.at(picked[k])];
    selections.push_back({task.index, picked[k], gd.d0, gd.d1, cfg.oracle.name(), labels[k]});
  }
  for (const Sample* s : pool) {
    if (chosen_ids.count(s->id)) continue;
    Sample u = *s;
    u.observed_label.reset();
    adapted.unlabeled.push_back(std::move(u));
  }
  rec.timings.selection += seconds_since(ts);

  train_task(state, adapted, cfg, rec);
  rec.timings.total += seconds_since(t0);
}

std::vector<TaskData> prepare_stream(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<TaskData> tasks;
  if (cfg.dataset_csv.empty()) {
    StreamConfig sc = cfg.stream;
    sc.seed = seed;
    tasks = gen_synthetic_stream(sc);
  } else {
    tasks = make_tasks(load_csv_dataset(cfg.dataset_csv), seed);
  }
  Rng rng(seed ^ kMaskStream);
  const std::size_t seen = std::min(cfg.stream.seen_tasks, tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i < seen) {
      tasks[i] = mask_labels(std::move(tasks[i]), cfg.stream.label_ratio, rng);
      if (cfg.stream.noise_ratio > 0.0) tasks[i] = inject_label_noise(std::move(tasks[i]), cfg.stream.noise_ratio, rng).first;
    } else {
      tasks[i] = mask_labels(std::move(tasks[i]), 0.0, rng);
    }
  }
  return tasks;
}

SeedRun run_single_seed(const ExperimentConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  cfg.validate();
  const auto t_run = Clock::now();
  const std::vector<TaskData> tasks = prepare_stream(cfg, seed);
  if (tasks.empty()) throw Error(ErrorCode::EmptyTask, "stream has no tasks");
  const std::size_t dim = static_cast<std::size_t>(tasks.front().test.empty() ? tasks.front().labeled.front().features.size()
                                                                              : tasks.front().test.front().features.size());
  TrainerState state = init_state(cfg, dim, seed);
  const std::size_t seen = std::min(cfg.stream.seen_tasks, tasks.size());

  SeedRun run;
  run.seed = seed;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TaskData& task = tasks[i];
    TaskRecord rec;
    rec.seen = i < seen;
    if (rec.seen && !task.labeled.empty()) {
      train_seen_task(state, task, cfg, rec);
    } else {
      run_unseen_task(state, task, cfg, rec, run.selections);
      rec.seen = i < seen;
    }

    const auto te = Clock::now();
    std::tie(rec.pr_auc_benign, rec.pr_auc_malware) = evaluate_split(state.model, task.test);
    if (cfg.retrospective_eval) {
      for (std::size_t j = 0; j <= i; ++j) {
        const auto [b, a] = evaluate_split(state.model, tasks[j].test);
        run.retro.push_back({i, j, b, a});
      }
    }
    rec.timings.eval += seconds_since(te);
    rec.timings.total += seconds_since(te);

    if (!opts.checkpoint_dir.empty() &&
        (cfg.checkpoints == CheckpointPolicy::EveryTask ||
         (cfg.checkpoints == CheckpointPolicy::Final && i + 1 == tasks.size()))) {
      std::filesystem::create_directories(opts.checkpoint_dir);
      const std::string name = cfg.checkpoints == CheckpointPolicy::EveryTask
                                   ? "seed" + std::to_string(seed) + "_task" + std::to_string(i) + ".ckpt"
                                   : "seed" + std::to_string(seed) + "_final.ckpt";
      save_checkpoint((std::filesystem::path(opts.checkpoint_dir) / name).string(), state.model,
                      cfg.gpm.enabled ? &state.gpm : nullptr);
    }
    if (opts.on_task_end) opts.on_task_end(seed, i, state);
    if (opts.log) {
      *opts.log << "seed " << seed << " task " << i << (rec.seen ? " seen" : " unseen") << " pr_auc(B)="
                << rec.pr_auc_benign << " pr_auc(A)=" << rec.pr_auc_malware << " rejected=" << rec.rejected_pairs
                << " gpm_rank=" << rec.gpm_rank << " " << rec.timings.total << "s\n";
    }
    run.timings += rec.timings;
    run.tasks.push_back(std::move(rec));
  }
  run.aut = summarize(run.tasks);
  run.timings.total = seconds_since(t_run);
  return run;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  RunArtifacts art;
  art.config = cfg;
  for (std::uint64_t s : cfg.seeds) art.runs.push_back(run_single_seed(cfg, s, opts));
  std::vector<double> mean(6, 0.0), var(6, 0.0);
  const auto n = static_cast<double>(art.runs.size());
  for (const SeedRun& r : art.runs) {
    const auto v = r.aut.values();
    for (std::size_t k = 0; k < 6; ++k) mean[k] += v[k] / n;
  }
  for (const SeedRun& r : art.runs) {
    const auto v = r.aut.values();
    for (std::size_t k = 0; k < 6; ++k) var[k] += (v[k] - mean[k]) * (v[k] - mean[k]) / n;
  }
  for (double& x : var) x = std::sqrt(x);
  art.mean = AutSummary::from_values(mean);
  art.stddev = AutSummary::from_values(var);
  return art;
}

}  // namespace seed
