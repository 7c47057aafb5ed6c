#include "navsim/abstraction.hpp"
#include "navsim/oracle.hpp"

#include <benchmark/benchmark.h>

#ifndef NAVSIM_SCENARIO_DIR
#define NAVSIM_SCENARIO_DIR "scenarios"
#endif

namespace {

using namespace navsim;

struct Fixture {
    Scenario s = load_scenario(NAVSIM_SCENARIO_DIR "/paper_sec5.json");
    PotentialSetup setup = prepare_potential(s);
    WorldState w0 = initial_state(s);
    GoalSpec goals = select_goal_configs(s, setup, {1, 0, 2}, w0.q, w0.region);
    PotentialContext ctx{&s, &setup, goals};
};

const Fixture &fixture() {
    static Fixture f;
    return f;
}

void BM_PairMargin(benchmark::State &state) {
    const auto &f = fixture();
    const auto a = link_ellipsoids(f.s.agents[0], f.w0.q[0]);
    const auto b = link_ellipsoids(f.s.agents[1], f.w0.q[1]);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pair_margin(a[0], b[0]));
        benchmark::DoNotOptimize(pair_margin(a[1], b[1]));
    }
}
BENCHMARK(BM_PairMargin);

void BM_PhiEvaluation(benchmark::State &state) {
    const auto &f = fixture();
    for (auto _ : state) {
        PhiEvaluator ev(f.ctx, f.w0.q);
        benchmark::DoNotOptimize(ev.beta(0));
    }
}
BENCHMARK(BM_PhiEvaluation);

void BM_TorqueGradients(benchmark::State &state) {
    const auto &f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(torque_gradients(f.ctx, f.w0.q));
    }
}
BENCHMARK(BM_TorqueGradients);

void BM_Rk4Step(benchmark::State &state) {
    const auto &f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(step(f.ctx, f.w0, 1e-3));
    }
}
BENCHMARK(BM_Rk4Step);

void BM_SeparationSurvey(benchmark::State &state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(survey_random_pairs(16, 5));
    }
}
BENCHMARK(BM_SeparationSurvey);

}  // namespace

BENCHMARK_MAIN();
