#include <causalbandit/envgen.hpp>
#include <causalbandit/graph_learn.hpp>
#include <causalbandit/policies.hpp>
#include <causalbandit/sem_core.hpp>

#include <benchmark/benchmark.h>

using namespace causalbandit;

namespace {

Environment make_env(std::size_t n) {
    EnvSpec spec;
    spec.n_arms = n;
    spec.edge_density = 0.15;
    spec.seed = 7;
    return generate_environment(spec);
}

void BM_Propagate(benchmark::State& state) {
    const Environment env = make_env(static_cast<std::size_t>(state.range(0)));
    const Vector z = Vector::Constant(static_cast<Eigen::Index>(env.model.size()), 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(propagate(env.model, z));
}
BENCHMARK(BM_Propagate)->Arg(10)->Arg(20)->Arg(50);

void BM_EstimateAdjacency(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Environment env = make_env(n);
    SemEnvironment sim(env.model, 3);
    Rng rng(3);
    SemUcbOptions opts;
    opts.solve_every_k = 1000000;
    SemUcbPolicy policy(n, 6, opts, rng);
    for (std::size_t t = 1; t <= 4 * n; ++t) play_round(policy, t, sim);
    const Matrix z(policy.state().log.exo_history());
    const Matrix y(policy.state().log.endo_history());
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_adjacency(z, y, {RegularizerKind::L1, 1e-4}, SolverSettings{}));
}
BENCHMARK(BM_EstimateAdjacency)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_SemUcbEpisode(benchmark::State& state) {
    const Environment env = make_env(20);
    for (auto _ : state) {
        SemEnvironment sim(env.model, 5);
        Rng rng(5);
        SemUcbOptions opts;
        opts.solve_every_k = 10;
        SemUcbPolicy policy(20, 6, opts, rng);
        for (std::size_t t = 1; t <= static_cast<std::size_t>(state.range(0)); ++t) play_round(policy, t, sim);
    }
}
BENCHMARK(BM_SemUcbEpisode)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
