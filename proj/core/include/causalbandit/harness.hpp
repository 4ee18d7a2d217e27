#pragma once

// Experiment orchestration: episodes, regret-bound evaluation, lambda search
// and report emission.

#include <causalbandit/envgen.hpp>
#include <causalbandit/policies.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace causalbandit {

// Eight log-spaced points 1e-4, 1e-3, ..., 1e3.
std::vector<double> default_lambda_grid();

struct ExperimentConfig {
    // Exactly one of env_spec / env_file is used; env_file wins when both are set.
    std::optional<EnvSpec> env_spec = EnvSpec{};
    std::optional<std::filesystem::path> env_file;
    // Draw a fresh environment per seed (spec seed mixed with the run seed).
    bool resample_env_per_seed = false;

    std::vector<std::string> policies{"semucb", "cucb", "epsgreedy", "random", "oracle"};
    std::size_t budget = 6;
    std::size_t horizon = 4000;
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> lambda_grid = default_lambda_grid();
    PolicyOptions policy_options{};
    std::filesystem::path output_dir = "out";
    // 0 = one worker per hardware thread.
    std::size_t workers = 0;

    // Checks everything that does not depend on the environment size.
    void validate() const;
    void validate_for(std::size_t n_arms) const;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

// Environment for a given run seed.
Environment resolve_environment(const ExperimentConfig& config, std::uint64_t seed);

// Deterministic seed derivation (splitmix64 finalizer over a ^ mix(b)).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct EpisodeResult {
    std::string policy;
    std::uint64_t seed = 0;
    RegretReport report;
    // Only meaningful for SEM-UCB runs.
    double w_max = 0.0;
    Environment environment;
};

// Simulates config.horizon rounds of `policy` against `env`, scoring every
// round with the true expected payoff. Reward noise comes from `noise_seed`.
// Records the graph-recovery MSE whenever the policy estimates a graph.
RegretReport run_episode(const ExperimentConfig& config, const Environment& env, Policy& policy,
                         std::uint64_t noise_seed);

EpisodeResult run_policy_episode(const ExperimentConfig& config, const std::string& policy_name,
                                 std::uint64_t seed);

struct BoundInputs {
    double w_max = 1.0;
    std::size_t budget = 1;
    std::size_t longest_path = 0;
    std::size_t n_arms = 1;
    double delta_min = 0.0;
    double delta_max = 0.0;
    // Real-valued so that ln T can be any positive number.
    double horizon = 1.0;
};

// [4 w^2 s^2 (s+1) N ln T / dmin^2 + N + (pi^2 / 3) s^p N] * dmax
double theorem1_bound(const BoundInputs& inputs);

struct GapStatistics {
    double delta_min = 0.0;
    double delta_max = 0.0;
    // No feasible decision is strictly worse than the optimum.
    bool degenerate = false;
};

inline constexpr std::size_t kGapEnumerationMaxArms = 16;
inline constexpr std::size_t kGapEnumerationMaxBudget = 6;

// Gaps over all selections of exactly `budget` arms.
GapStatistics compute_gap_statistics(const AdjacencyMatrix& adjacency, const Vector& means, std::size_t budget);

struct GridRow {
    double lambda = 0.0;
    double score = 0.0;
};

struct GridResult {
    double best_lambda = 0.0;
    std::vector<GridRow> table;
};

// Scores every grid point; the first minimum wins.
GridResult grid_search(std::span<const double> grid, const std::function<double(double)>& score);

// Synthetic mode: score = mean final SEM-UCB adjacency MSE over seeds.
GridResult grid_search_lambda(const ExperimentConfig& config);

struct PolicySummary {
    std::string policy;
    double mean_final_regret = 0.0;
    double std_final_regret = 0.0;
};

struct ExperimentResult {
    std::vector<EpisodeResult> episodes;

    std::vector<PolicySummary> summaries() const;
};

// Runs every (policy, seed) pair on a bounded worker pool. Results are ordered
// by policy, then seed, independent of scheduling.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes regret.csv, mse.csv, selections.csv and summary.json into `dir`.
void emit_reports(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace causalbandit
