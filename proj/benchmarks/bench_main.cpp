#include <benchmark/benchmark.h>

#include <random>

#include "rcmdp/rcmdp.hpp"

namespace {

using namespace rcmdp;

ProblemSpec chain_spec(int states, int horizon, RiskMeasure measure) {
    // A birth-death chain with a cheap risky control and a dear safe one.
    ProblemSpec spec;
    spec.num_states = states;
    spec.num_controls = 2;
    std::mt19937_64 rng(42);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int x = 0; x < states; ++x) {
        spec.admissible.push_back({0, 1});
        int up = std::min(x + 1, states - 1);
        int down = std::max(x - 1, 0);
        std::vector<double> risky(states, 0.0), safe(states, 0.0);
        risky[up] = 0.7;
        risky[down] += 0.3;
        safe[down] += 0.9;
        safe[up] += 0.1;
        spec.kernel.push_back({risky, safe});
        spec.stage_cost.push_back({0.2 * unit(), 1.0});
        spec.constraint_cost.push_back({0.5 + 0.5 * unit(), 0.1 * unit()});
    }
    spec.horizon = horizon;
    spec.initial_state = 0;
    spec.risk = measure;
    spec.sentinel = spec.default_sentinel();
    spec.initial_threshold = spec.horizon * 1.0;
    return spec;
}

void BM_EvaluateMeanSemideviation(benchmark::State& state) {
    std::mt19937_64 rng(1);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    int n = static_cast<int>(state.range(0));
    std::vector<double> values(n), probs(n);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        values[i] = unit();
        probs[i] = 0.01 + unit();
        mass += probs[i];
    }
    for (double& p : probs) p /= mass;
    RiskMeasure measure = RiskMeasure::mean_semideviation(0.5, 2.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            evaluate(measure, std::span<const double>(values), std::span<const double>(probs)));
}
BENCHMARK(BM_EvaluateMeanSemideviation)->Arg(2)->Arg(8)->Arg(32);

void BM_SolveChain(benchmark::State& state) {
    int grid_nodes = static_cast<int>(state.range(0));
    bool prune = state.range(1) != 0;
    ProblemSpec spec = chain_spec(4, 4, RiskMeasure::mean_semideviation(0.5, 2.0));
    auto tables = build_feasibility(spec);
    auto grid = build_grid(spec, tables, grid_nodes);
    SolverOptions options;
    options.grid_nodes = grid_nodes;
    options.prune = prune;
    for (auto _ : state) {
        Solution sol = solve(spec, grid, options);
        benchmark::DoNotOptimize(sol.value);
    }
}
BENCHMARK(BM_SolveChain)
    ->Args({11, 0})
    ->Args({31, 0})
    ->Args({31, 1})
    ->Args({101, 1});

void BM_BruteForce(benchmark::State& state) {
    ProblemSpec spec = chain_spec(3, static_cast<int>(state.range(0)),
                                  RiskMeasure::mean_semideviation(0.5, 2.0));
    auto tables = build_feasibility(spec);
    double r0 = 0.5 * (tables.min_risk[0][0] + tables.upper_bound[0]);
    for (auto _ : state)
        benchmark::DoNotOptimize(brute_force_solve(spec, 0, r0).value);
}
BENCHMARK(BM_BruteForce)->Arg(2)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
