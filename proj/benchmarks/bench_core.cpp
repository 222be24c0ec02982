#include <seed/gpm.hpp>
#include <seed/model.hpp>
#include <seed/numerics.hpp>
#include <seed/repspace.hpp>

#include <benchmark/benchmark.h>

using namespace seed;

namespace {

Mat64 gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat64 m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(1);
  ModelParams m = init_model(200, 1);
  const Mat64 x = gaussian(rng, state.range(0), 200);
  LossTerms terms;
  for (Eigen::Index r = 0; r < x.rows(); ++r) terms.sup.push_back({static_cast<std::size_t>(r), static_cast<int>(r % 2)});
  for (auto _ : state) {
    const ForwardResult fr = forward(m, x, &rng);
    const LossValue lv = evaluate_loss(fr.probs, terms);
    benchmark::DoNotOptimize(backward(m, *fr.trace, lv.dlogits));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(128);

void BM_EvalForward(benchmark::State& state) {
  Rng rng(2);
  ModelParams m = init_model(200, 2);
  m.mode = Mode::Eval;
  const Mat64 x = gaussian(rng, state.range(0), 200);
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x, nullptr, {false}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvalForward)->Arg(256)->Arg(1024);

void BM_SvdBasis(benchmark::State& state) {
  Rng rng(3);
  const Mat64 z = gaussian(rng, state.range(0), 50);
  for (auto _ : state) benchmark::DoNotOptimize(svd_basis(z, 0.95));
}
BENCHMARK(BM_SvdBasis)->Arg(100)->Arg(1000)->Arg(4000);

void BM_ProjectOrthogonal(benchmark::State& state) {
  Rng rng(4);
  const ModelParams m = init_model(200, 4);
  GpmStore store;
  store.energy_threshold = 0.99;
  const GradientRows rows = collect_sample_gradients(m, gaussian(rng, state.range(0), 200), 1, true);
  update_basis(store, rows);
  Gradients g = Gradients::zeros_like(m);
  for (auto& v : g.groups)
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = standard_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_orthogonal(g, store));
  state.counters["rank"] = static_cast<double>(store.total_rank());
}
BENCHMARK(BM_ProjectOrthogonal)->Arg(10)->Arg(40);

void BM_FindExemplar(benchmark::State& state) {
  Rng rng(5);
  RepSpace rs;
  const auto n = state.range(0);
  rs.memory_latents = gaussian(rng, n, 50).cwiseAbs();
  rs.memory_inputs = rs.memory_latents;
  rs.latent_norms = rs.memory_latents.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    rs.memory_labels.push_back(static_cast<int>(i % 2));
    rs.exemplar_ids.push_back(i);
  }
  rs.basis = svd_basis(rs.memory_latents, 0.95);
  const Vec64 z = gaussian(rng, 1, 50).cwiseAbs().row(0).transpose();
  ThresholdConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(find_suitable_exemplar(z, rs, cfg));
}
BENCHMARK(BM_FindExemplar)->Arg(100)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
