#include <benchmark/benchmark.h>

#include <memory>
#include <string>

#include "matchq/config_io.hpp"
#include "matchq/dram_policy.hpp"
#include "matchq/dual.hpp"
#include "matchq/oracle.hpp"
#include "matchq/ram_policy.hpp"
#include "matchq/simulator.hpp"

using namespace matchq;

namespace {

const SystemConfig& two_task() {
  static const SystemConfig cfg = load_config(std::string(MATCHQ_CONFIG_DIR) + "/two_task.json");
  return cfg;
}

void BM_RamSlot(benchmark::State& st) {
  const auto& cfg = two_task();
  const auto dc = derive_constants(cfg, 100, compute_beta_r_hat(cfg.reward_mean(), cfg));
  const auto p = make_policy_params(cfg, dc, std::make_shared<RewardTable>(cfg.reward_mean()));
  CounterRng states(1, Stream::control_state), rewards(1, Stream::control_reward);
  QueueState qs = QueueState::zeros(2, 1);
  SlotRecord rec;
  for (auto _ : st) {
    ram_slot(cfg, sample_from_cdf(states, cfg.state_cdf()), qs, p, rewards, rec);
    benchmark::DoNotOptimize(qs.Q.data());
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_RamSlot);

void BM_DramSlot(benchmark::State& st) {
  const auto& cfg = two_task();
  LearnerSpec exact;
  exact.reward_source = LearnerSpec::RewardSource::exact;
  exact.state_source = LearnerSpec::StateSource::exact;
  const auto c = assemble_dram(cfg, 100, exact, {}, 1);
  CounterRng states(1, Stream::control_state), rewards(1, Stream::control_reward);
  QueueState qs = QueueState::zeros(2, 1);
  SlotRecord rec;
  for (auto _ : st) {
    dram_slot(cfg, sample_from_cdf(states, cfg.state_cdf()), qs, c.shift, c.params, rewards, rec);
    benchmark::DoNotOptimize(qs.Q.data());
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_DramSlot);

// Whole run including trace storage, per slot.
void BM_RunSim(benchmark::State& st) {
  const auto& cfg = two_task();
  const auto policy = parse_policy(st.range(0) ? "dram" : "ram");
  for (auto _ : st) {
    auto tr = run_sim(cfg, policy, 100, 100000, 1);
    benchmark::DoNotOptimize(tr.size());
  }
  st.SetItemsProcessed(st.iterations() * 100000);
}
BENCHMARK(BM_RunSim)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EvalDual(benchmark::State& st) {
  const auto& cfg = two_task();
  const Vec pi = cfg.probabilities();
  Multipliers a{{100, 120}, {400, 380}, {420}};
  for (auto _ : st) {
    auto e = eval_dual(cfg, pi, cfg.reward_mean(), a, 500, 500, 100, cfg.gamma_domain());
    benchmark::DoNotOptimize(e.value);
  }
}
BENCHMARK(BM_EvalDual);

void BM_SolveDual(benchmark::State& st) {
  const auto& cfg = two_task();
  const auto dc = derive_constants(cfg, 100, 1.0);
  for (auto _ : st) {
    auto s = solve_empirical_dual(cfg, cfg.probabilities(), cfg.reward_mean(), dc.theta1, dc.theta2, 100);
    benchmark::DoNotOptimize(s.g_value);
  }
}
BENCHMARK(BM_SolveDual)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& st) {
  const auto& cfg = two_task();
  for (auto _ : st) {
    auto s = solve_offline_optimal(cfg);
    benchmark::DoNotOptimize(s.f_star);
  }
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
