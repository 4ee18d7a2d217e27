#pragma once

// Domain types and the noise-free structural equation model (SEM) that couples
// base-arm rewards:
//
//   z = diag(b) x            exogenous input: rewards of the selected arms
//   y = A y + F z            endogenous output: overall rewards
//   r(x) = 1^T y             payoff
//
// A[i, j] is the influence of arm j's overall reward on arm i's. Arms are
// 0-indexed in storage; in DAG mode the index order is a topological order and
// A is strictly upper triangular.

#include <causalbandit/errors.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace causalbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Feasible super arm: binary selection of at most `budget` base arms.
class DecisionVector {
public:
    DecisionVector() = default;
    DecisionVector(std::size_t n_arms, std::size_t budget);

    static DecisionVector from_indices(std::size_t n_arms, std::size_t budget,
                                       std::span<const std::size_t> arms);
    // Entries must be 0/1 and at most `budget` of them nonzero.
    static DecisionVector from_entries(std::span<const int> entries, std::size_t budget);

    std::size_t size() const { return entries_.size(); }
    std::size_t budget() const { return budget_; }
    std::size_t count() const { return count_; }
    bool selected(std::size_t arm) const { return entries_.at(arm) != 0; }

    void select(std::size_t arm);
    void deselect(std::size_t arm);

    std::vector<std::size_t> indices() const;
    Vector as_vector() const;

    friend bool operator==(const DecisionVector&, const DecisionVector&) = default;

private:
    std::vector<std::uint8_t> entries_;
    std::size_t budget_ = 0;
    std::size_t count_ = 0;
};

enum class StructureMode { StrictUpperDag, GeneralDirected };

// Nonnegative causal mixing matrix with zero diagonal and invertible (I - A).
class AdjacencyMatrix {
public:
    AdjacencyMatrix() = default;
    AdjacencyMatrix(Matrix weights, StructureMode mode);

    static AdjacencyMatrix zeros(std::size_t n, StructureMode mode = StructureMode::StrictUpperDag);

    const Matrix& weights() const { return weights_; }
    StructureMode mode() const { return mode_; }
    std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

private:
    Matrix weights_;
    StructureMode mode_ = StructureMode::StrictUpperDag;
};

// Reward-generating environment. Instantaneous rewards are truncated normals on
// [0, 1] with means `mean_rewards` and common standard deviation `reward_std`.
class SemModel {
public:
    SemModel() = default;
    // An empty `input_gain` means F = I.
    SemModel(AdjacencyMatrix adjacency, Vector mean_rewards, double reward_std, Vector input_gain = {});

    const AdjacencyMatrix& adjacency() const { return adjacency_; }
    const Vector& mean_rewards() const { return mean_rewards_; }
    const Vector& input_gain() const { return input_gain_; }
    double reward_std() const { return reward_std_; }
    std::size_t size() const { return adjacency_.size(); }

private:
    AdjacencyMatrix adjacency_;
    Vector mean_rewards_;
    Vector input_gain_;
    double reward_std_ = 0.0;
};

// Accumulated semi-bandit feedback (Z_t, Y_t), pull counters and empirical means.
class FeedbackLog {
public:
    FeedbackLog() = default;
    explicit FeedbackLog(std::size_t n_arms);

    // Appends one round. `z` holds the instantaneous rewards of the selected
    // arms (zero elsewhere), `y` the overall rewards of every arm.
    void record(const DecisionVector& x, const Vector& z, const Vector& y);

    std::size_t size() const { return n_; }
    std::size_t round() const { return round_; }
    Eigen::Map<const Matrix> exo_history() const;
    Eigen::Map<const Matrix> endo_history() const;
    const std::vector<std::size_t>& pull_counts() const { return pull_counts_; }
    const Vector& empirical_means() const { return empirical_means_; }
    const Vector& reward_sums() const { return reward_sums_; }

private:
    std::size_t n_ = 0;
    std::size_t round_ = 0;
    std::vector<double> exo_;
    std::vector<double> endo_;
    std::vector<std::size_t> pull_counts_;
    Vector reward_sums_;
    Vector empirical_means_;
};

// Per-round expected payoffs and cumulative regret against the optimum.
struct RegretReport {
    double optimal_expected_payoff = 0.0;
    std::vector<double> per_round_expected_payoff;
    std::vector<double> cumulative_regret;
    std::vector<double> recovery_mse;
    std::vector<DecisionVector> selections;

    explicit RegretReport(double optimal = 0.0) : optimal_expected_payoff(optimal) {}

    // Appends mu_t; throws ConsistencyError if mu_t beats the optimum by more
    // than kOptimalityTolerance.
    void accumulate(double expected_payoff);
    std::size_t rounds() const { return cumulative_regret.size(); }
    double final_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
};

inline constexpr double kOptimalityTolerance = 1e-9;

RegretReport accumulate_regret(RegretReport report, double expected_payoff);

Vector compute_exogenous(const Vector& rewards, const DecisionVector& x);

// Solves (I - A) y = rhs. DAG mode uses back-substitution; general mode a
// pivoted LU solve that throws SingularSystemError on a singular system.
Vector solve_sem(const AdjacencyMatrix& adjacency, const Vector& rhs);

Vector propagate(const SemModel& model, const Vector& z);

double payoff(const Vector& y);

// Row vector 1^T (I - A)^{-1}: the total payoff generated per unit of
// exogenous input at each arm.
Vector payoff_weights(const AdjacencyMatrix& adjacency);

double expected_payoff(const AdjacencyMatrix& adjacency, const Vector& means, const DecisionVector& x);

// Indicator of the `budget` largest entries; ties go to the lowest index.
DecisionVector top_s(const Vector& scores, std::size_t budget);

DecisionVector optimal_decision(const AdjacencyMatrix& adjacency, const Vector& means, std::size_t budget);

// Exhaustive search over all selections of at most `budget` arms. Test oracle;
// cost grows combinatorially.
DecisionVector brute_force_optimal(const AdjacencyMatrix& adjacency, const Vector& means, std::size_t budget);

// Shortest round-trip decimal form of a double, used by every CSV writer.
std::string format_number(double value);

// Calls `visit` once per feasible selection of at most `budget` arms, in
// lexicographic order of the sorted index sets, starting with the empty one.
template <typename Visitor>
void for_each_feasible(std::size_t n_arms, std::size_t budget, Visitor&& visit) {
    std::vector<std::size_t> chosen;
    chosen.reserve(budget);
    auto recurse = [&](auto&& self, std::size_t next) -> void {
        visit(std::span<const std::size_t>(chosen));
        if (chosen.size() == budget) return;
        for (std::size_t i = next; i < n_arms; ++i) {
            chosen.push_back(i);
            self(self, i + 1);
            chosen.pop_back();
        }
    };
    recurse(recurse, 0);
}

}  // namespace causalbandit
