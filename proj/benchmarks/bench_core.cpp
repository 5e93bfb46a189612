#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "vapt/provider.hpp"
#include "vapt/pvq.hpp"
#include "vapt/rng.hpp"
#include "vapt/stats.hpp"
#include "vapt/topic_graph.hpp"

using namespace vapt;

namespace {

std::vector<int> ratings(std::uint64_t seed, std::size_t n) {
  SeededRng rng(seed);
  std::vector<int> v(n);
  for (auto& x : v) x = rng.between(1, 6);
  return v;
}

void BM_quadratic_weighted_kappa(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  auto a = ratings(1, n), b = ratings(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(stats::quadratic_weighted_kappa(a, b, 6));
}
BENCHMARK(BM_quadratic_weighted_kappa)->Arg(63)->Arg(1000);

void BM_cronbach_alpha(benchmark::State& state) {
  SeededRng rng(3);
  stats::Matrix m(static_cast<std::size_t>(state.range(0)), std::vector<double>(3));
  for (auto& row : m)
    for (auto& v : row) v = rng.between(1, 6);
  for (auto _ : state) benchmark::DoNotOptimize(stats::cronbach_alpha(m));
}
BENCHMARK(BM_cronbach_alpha)->Arg(20)->Arg(500);

void BM_score_profile(benchmark::State& state) {
  auto r = random_responses(4);
  for (auto _ : state) benchmark::DoNotOptimize(score_profile(r, ProfileSource::manual));
}
BENCHMARK(BM_score_profile);

void BM_pseudo_embed(benchmark::State& state) {
  std::string label = "weekend hiking with friends";
  for (auto _ : state) benchmark::DoNotOptimize(pseudo_embed(label, 256));
}
BENCHMARK(BM_pseudo_embed);

void BM_registry_commit(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::pair<std::string, EmbeddingVector>> labels;
  for (std::size_t i = 0; i < n; ++i) {
    auto l = "topic " + std::to_string(i % (n / 2 + 1));
    labels.emplace_back(l, pseudo_embed(l, 256));
  }
  for (auto _ : state) {
    TopicRegistry reg(0.7);
    for (std::size_t i = 0; i < labels.size(); ++i) reg.commit(labels[i].first, labels[i].second, i);
    benchmark::DoNotOptimize(reg.topics().size());
  }
}
BENCHMARK(BM_registry_commit)->Arg(50)->Arg(400);

}  // namespace

BENCHMARK_MAIN();
