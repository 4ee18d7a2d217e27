#pragma once

// Selection policies for the causal semi-bandit: SEM-UCB (warm-up on an
// initialization matrix, then UCB indices pushed through the estimated mixing
// matrix) and structure-blind comparators.

#include <causalbandit/envgen.hpp>
#include <causalbandit/graph_learn.hpp>
#include <causalbandit/sem_core.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace causalbandit {

// Warm-up schedule: unit diagonal; column i (1-based) has all entries above the
// diagonal set when i <= s, otherwise s - 1 of them chosen uniformly at random.
class InitializationMatrix {
public:
    InitializationMatrix() = default;
    explicit InitializationMatrix(std::vector<DecisionVector> columns);

    std::size_t size() const { return columns_.size(); }
    // 0-based column index.
    const DecisionVector& column(std::size_t index) const { return columns_.at(index); }
    Matrix dense() const;

private:
    std::vector<DecisionVector> columns_;
};

InitializationMatrix build_initialization_matrix(std::size_t n_arms, std::size_t budget, Rng& rng);

// beta_hat + sqrt((s + 1) ln t / m). Throws UnobservedArmError when m = 0.
double ucb_index(double empirical_mean, std::size_t pulls, std::size_t t, std::size_t budget);

// Top-s entries of c = 1^T (I - A_hat)^{-1} diag(E); ties to the lowest index.
DecisionVector select_decision(const AdjacencyMatrix& estimate, const Vector& indices, std::size_t budget);

// Uniformly random subset of exactly `budget` arms.
DecisionVector random_subset(std::size_t n_arms, std::size_t budget, Rng& rng);

// With probability epsilon a random subset, otherwise the top-s arms by
// `means`; unobserved arms (pulls = 0) rank first.
DecisionVector epsilon_greedy_choice(const Vector& means, const std::vector<std::size_t>& pulls, double epsilon,
                                     std::size_t budget, Rng& rng);

struct Observation {
    Vector z;
    Vector y;
};

// Something a policy can play against.
class BanditEnvironment {
public:
    virtual ~BanditEnvironment() = default;
    virtual std::size_t size() const = 0;
    virtual Observation play(const DecisionVector& x) = 0;
};

// Draws b ~ truncated normal, then z = diag(b) x and y = (I - A)^{-1} F z.
class SemEnvironment final : public BanditEnvironment {
public:
    SemEnvironment(SemModel model, std::uint64_t seed) : model_(std::move(model)), rng_(seed) {}

    std::size_t size() const override { return model_.size(); }
    Observation play(const DecisionVector& x) override;
    const SemModel& model() const { return model_; }

private:
    SemModel model_;
    Rng rng_;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string_view name() const = 0;
    // t is the 1-based round number.
    virtual DecisionVector select(std::size_t t) = 0;
    virtual void observe(const DecisionVector& x, const Observation& obs) = 0;
    virtual bool learns_graph() const { return false; }
    // Current graph estimate; null before the first solve.
    virtual const AdjacencyMatrix* estimated_adjacency() const { return nullptr; }
};

// Plays one round: select, observe the environment, update.
DecisionVector play_round(Policy& policy, std::size_t t, BanditEnvironment& env);

struct SemUcbOptions {
    RegularizerSpec regularizer{RegularizerKind::L1, 1e-4};
    SolverSettings solver{};
    // Re-solve the graph every k rounds after the warm-up.
    std::size_t solve_every_k = 1;
};

// Learning state exposed for inspection and tests.
struct UcbState {
    FeedbackLog log;
    Vector indices;
    Vector confidence;
    AdjacencyMatrix estimated_adjacency;
    std::size_t round = 0;
};

class SemUcbPolicy final : public Policy {
public:
    SemUcbPolicy(std::size_t n_arms, std::size_t budget, SemUcbOptions options, Rng& rng);
    SemUcbPolicy(InitializationMatrix init, std::size_t budget, SemUcbOptions options);

    std::string_view name() const override { return "semucb"; }
    DecisionVector select(std::size_t t) override;
    void observe(const DecisionVector& x, const Observation& obs) override;
    bool learns_graph() const override { return true; }
    const AdjacencyMatrix* estimated_adjacency() const override;

    const UcbState& state() const { return state_; }
    const InitializationMatrix& initialization() const { return init_; }
    // max over rounds and arms of 1^T (I - A_hat)^{-1} diag(x), with A_hat = 0
    // during warm-up.
    double w_max() const { return w_max_; }
    std::size_t solves() const { return solves_; }
    bool last_solve_converged() const { return last_converged_; }

private:
    void refresh_indices(std::size_t t);

    InitializationMatrix init_;
    std::size_t budget_;
    SemUcbOptions options_;
    UcbState state_;
    RegressionData data_;
    bool has_estimate_ = false;
    double w_max_ = 0.0;
    std::size_t solves_ = 0;
    bool last_converged_ = true;
};

// Structure-blind UCB on overall rewards normalized by the running maximum
// observed overall reward (no scaling while that maximum is below one).
class CucbPolicy final : public Policy {
public:
    CucbPolicy(std::size_t n_arms, std::size_t budget);

    std::string_view name() const override { return "cucb"; }
    DecisionVector select(std::size_t t) override;
    void observe(const DecisionVector& x, const Observation& obs) override;

    Vector indices(std::size_t t) const;

private:
    std::size_t budget_;
    std::vector<std::size_t> pulls_;
    Vector sums_;
    double running_max_ = 0.0;
};

class EpsilonGreedyPolicy final : public Policy {
public:
    EpsilonGreedyPolicy(std::size_t n_arms, std::size_t budget, double epsilon, std::uint64_t seed);

    std::string_view name() const override { return "epsgreedy"; }
    DecisionVector select(std::size_t t) override;
    void observe(const DecisionVector& x, const Observation& obs) override;

private:
    std::size_t budget_;
    double epsilon_;
    Rng rng_;
    std::vector<std::size_t> pulls_;
    Vector sums_;
};

class RandomPolicy final : public Policy {
public:
    RandomPolicy(std::size_t n_arms, std::size_t budget, std::uint64_t seed);

    std::string_view name() const override { return "random"; }
    DecisionVector select(std::size_t t) override;
    void observe(const DecisionVector&, const Observation&) override {}

private:
    std::size_t n_;
    std::size_t budget_;
    Rng rng_;
};

// Clairvoyant: always plays x* of the true environment.
class OraclePolicy final : public Policy {
public:
    OraclePolicy(const SemModel& model, std::size_t budget);

    std::string_view name() const override { return "oracle"; }
    DecisionVector select(std::size_t) override { return best_; }
    void observe(const DecisionVector&, const Observation&) override {}

private:
    DecisionVector best_;
};

struct PolicyOptions {
    SemUcbOptions semucb{};
    double epsilon = 0.1;
};

inline const std::vector<std::string>& policy_names() {
    static const std::vector<std::string> names{"semucb", "cucb", "epsgreedy", "random", "oracle"};
    return names;
}

// Throws ConfigError for an unknown name.
std::unique_ptr<Policy> make_policy(std::string_view name, const SemModel& model, std::size_t budget,
                                    const PolicyOptions& options, std::uint64_t seed);

}  // namespace causalbandit
