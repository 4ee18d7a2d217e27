#pragma once

// Synthetic environments: random weighted DAGs, truncated-normal instantaneous
// rewards, and structural statistics of the causal graph.

#include <causalbandit/sem_core.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace causalbandit {

using Rng = std::mt19937_64;

struct EnvSpec {
    std::size_t n_arms = 20;
    // Probability that each above-diagonal slot carries an edge.
    double edge_density = 0.15;
    double weight_low = 0.4;
    double weight_high = 0.7;
    double reward_std = 0.1;
    // Means are drawn once per environment from U[mean_low, mean_high].
    double mean_low = 0.2;
    double mean_high = 0.8;
    std::uint64_t seed = 0;

    void validate() const;
};

// A generated (or loaded) environment together with the seed that produced it.
struct Environment {
    SemModel model;
    std::uint64_t seed = 0;

    std::size_t size() const { return model.size(); }
};

// Strictly upper-triangular A: each of the N(N-1)/2 slots is nonzero with
// probability edge_density, weights U[weight_low, weight_high].
AdjacencyMatrix random_dag(const EnvSpec& spec, Rng& rng);

// Independent per-arm N(beta[i], std^2) draws truncated to [0, 1] by rejection.
Vector sample_rewards(const SemModel& model, Rng& rng);

// Maximum number of edges on a directed path. Throws UnsupportedStructureError
// for a general-mode matrix whose support contains a cycle.
std::size_t longest_path_length(const AdjacencyMatrix& adjacency);

// random_dag plus means, all driven by a generator seeded with spec.seed.
Environment generate_environment(const EnvSpec& spec);

// JSON document {n_arms, adjacency (row-major), beta, reward_std, seed}.
std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);
void save_environment(const Environment& env, const std::filesystem::path& path);
Environment load_environment(const std::filesystem::path& path);

}  // namespace causalbandit
