// Microbenchmarks for the hot paths: certification math, confidence bounds,
// grouping, and group-model training.

#include <fedcert/cert_core.hpp>
#include <fedcert/dataset.hpp>
#include <fedcert/fl_sim.hpp>
#include <fedcert/grouping.hpp>
#include <fedcert/oracle.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace fedcert;

void BM_certify_d(benchmark::State& state) {
  const LabelHistogram hist({static_cast<int>(state.range(0)), 3, 2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify_d(hist, 0));
  }
}
BENCHMARK(BM_certify_d)->Arg(10)->Arg(100)->Arg(1000);

void BM_certify_p_bounds(benchmark::State& state) {
  const unsigned long n = static_cast<unsigned long>(state.range(0));
  ProbabilityBounds b;
  b.lower_y = 0.93;
  b.upper_z = 0.07;
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify_p_bounds(b, n, 4));
  }
}
BENCHMARK(BM_certify_p_bounds)->Arg(60)->Arg(500)->Arg(1000);

void BM_clopper_pearson_lower(benchmark::State& state) {
  const long trials = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(clopper_pearson_lower(trials - 2, trials, 1e-5));
  }
}
BENCHMARK(BM_clopper_pearson_lower)->Arg(30)->Arg(500);

void BM_assign_groups_d(benchmark::State& state) {
  std::vector<ClientRecord> clients(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].user_id = "client-" + std::to_string(i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(assign_groups_d(clients, 15));
  }
}
BENCHMARK(BM_assign_groups_d)->Arg(60)->Arg(1000);

void BM_sample_groups_p(benchmark::State& state) {
  std::vector<ClientRecord> clients(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].user_id = "client-" + std::to_string(i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_groups_p(clients, 4, 30, 7));
  }
}
BENCHMARK(BM_sample_groups_p)->Arg(60)->Arg(1000);

void BM_train_global(benchmark::State& state) {
  const Dataset data = gen_synthetic(3, 10, 200, 0.5, 11);
  const auto client_data = partition_noniid(data, 12, 0.5, 12);
  std::vector<std::size_t> group;
  for (std::size_t i = 0; i < client_data.size(); ++i) group.push_back(i);
  TrainConfig cfg;
  cfg.global_iters = static_cast<int>(state.range(0));
  cfg.seed = 13;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_global(group, client_data, cfg, 0));
  }
}
BENCHMARK(BM_train_global)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_oracle_max_m_d(benchmark::State& state) {
  const LabelHistogram hist({4, 2, 1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle_max_m_d(hist, 0));
  }
}
BENCHMARK(BM_oracle_max_m_d);

}  // namespace

BENCHMARK_MAIN();
