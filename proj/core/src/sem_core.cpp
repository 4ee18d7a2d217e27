#include <causalbandit/sem_core.hpp>

#include <algorithm>
#include <charconv>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

namespace causalbandit {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                             std::to_string(b) + ")");
    }
}

Matrix identity_minus(const Matrix& a) {
    return Matrix::Identity(a.rows(), a.cols()) - a;
}

}  // namespace

// ---------------------------------------------------------------------------
// DecisionVector

DecisionVector::DecisionVector(std::size_t n_arms, std::size_t budget)
    : entries_(n_arms, 0), budget_(budget) {}

DecisionVector DecisionVector::from_indices(std::size_t n_arms, std::size_t budget,
                                            std::span<const std::size_t> arms) {
    DecisionVector x(n_arms, budget);
    for (std::size_t arm : arms) x.select(arm);
    return x;
}

DecisionVector DecisionVector::from_entries(std::span<const int> entries, std::size_t budget) {
    DecisionVector x(entries.size(), budget);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i] != 0 && entries[i] != 1) {
            throw ParameterError("decision entries must be 0 or 1");
        }
        if (entries[i] == 1) x.select(i);
    }
    return x;
}

void DecisionVector::select(std::size_t arm) {
    if (arm >= entries_.size()) throw DimensionError("arm index out of range");
    if (entries_[arm]) return;
    if (count_ == budget_) {
        throw ParameterError("selection exceeds budget s=" + std::to_string(budget_));
    }
    entries_[arm] = 1;
    ++count_;
}

void DecisionVector::deselect(std::size_t arm) {
    if (arm >= entries_.size()) throw DimensionError("arm index out of range");
    if (!entries_[arm]) return;
    entries_[arm] = 0;
    --count_;
}

std::vector<std::size_t> DecisionVector::indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i]) out.push_back(i);
    }
    return out;
}

Vector DecisionVector::as_vector() const {
    Vector v(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i) v[static_cast<Eigen::Index>(i)] = entries_[i];
    return v;
}

// ---------------------------------------------------------------------------
// AdjacencyMatrix

AdjacencyMatrix::AdjacencyMatrix(Matrix weights, StructureMode mode) : weights_(std::move(weights)), mode_(mode) {
    if (weights_.rows() != weights_.cols()) throw DimensionError("adjacency matrix must be square");
    const Eigen::Index n = weights_.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = weights_(i, j);
            if (!std::isfinite(w)) throw DataError("adjacency weights must be finite");
            if (w < 0.0) throw ParameterError("adjacency weights must be nonnegative");
            if (i == j && w != 0.0) throw ParameterError("adjacency diagonal must be zero");
            if (mode_ == StructureMode::StrictUpperDag && i >= j && w != 0.0) {
                throw ParameterError("DAG-mode adjacency must be strictly upper triangular");
            }
        }
    }
    if (mode_ == StructureMode::GeneralDirected && n > 0) {
        Eigen::FullPivLU<Matrix> lu(identity_minus(weights_));
        if (!lu.isInvertible()) throw SingularSystemError("(I - A) is singular");
    }
}

AdjacencyMatrix AdjacencyMatrix::zeros(std::size_t n, StructureMode mode) {
    const auto size = static_cast<Eigen::Index>(n);
    return AdjacencyMatrix(Matrix::Zero(size, size), mode);
}

// ---------------------------------------------------------------------------
// SemModel

SemModel::SemModel(AdjacencyMatrix adjacency, Vector mean_rewards, double reward_std, Vector input_gain)
    : adjacency_(std::move(adjacency)),
      mean_rewards_(std::move(mean_rewards)),
      input_gain_(std::move(input_gain)),
      reward_std_(reward_std) {
    if (input_gain_.size() == 0) input_gain_ = Vector::Ones(static_cast<Eigen::Index>(adjacency_.size()));
    require_same_size(adjacency_.size(), static_cast<std::size_t>(mean_rewards_.size()), "SemModel means");
    require_same_size(adjacency_.size(), static_cast<std::size_t>(input_gain_.size()), "SemModel input gain");
    for (double m : mean_rewards_) {
        if (!(m >= 0.0 && m <= 1.0)) throw ParameterError("mean rewards must lie in [0, 1]");
    }
    for (double g : input_gain_) {
        if (!std::isfinite(g)) throw ParameterError("input gain must be finite");
    }
    if (!(reward_std_ >= 0.0) || !std::isfinite(reward_std_)) {
        throw ParameterError("reward standard deviation must be finite and nonnegative");
    }
}

// ---------------------------------------------------------------------------
// FeedbackLog

FeedbackLog::FeedbackLog(std::size_t n_arms)
    : n_(n_arms),
      pull_counts_(n_arms, 0),
      reward_sums_(Vector::Zero(static_cast<Eigen::Index>(n_arms))),
      empirical_means_(Vector::Zero(static_cast<Eigen::Index>(n_arms))) {}

void FeedbackLog::record(const DecisionVector& x, const Vector& z, const Vector& y) {
    require_same_size(n_, x.size(), "FeedbackLog decision");
    require_same_size(n_, static_cast<std::size_t>(z.size()), "FeedbackLog exogenous");
    require_same_size(n_, static_cast<std::size_t>(y.size()), "FeedbackLog endogenous");
    exo_.insert(exo_.end(), z.data(), z.data() + z.size());
    endo_.insert(endo_.end(), y.data(), y.data() + y.size());
    for (std::size_t i = 0; i < n_; ++i) {
        if (!x.selected(i)) continue;
        const auto k = static_cast<Eigen::Index>(i);
        ++pull_counts_[i];
        reward_sums_[k] += z[k];
        empirical_means_[k] = reward_sums_[k] / static_cast<double>(pull_counts_[i]);
    }
    ++round_;
}

Eigen::Map<const Matrix> FeedbackLog::exo_history() const {
    return {exo_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(round_)};
}

Eigen::Map<const Matrix> FeedbackLog::endo_history() const {
    return {endo_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(round_)};
}

// ---------------------------------------------------------------------------
// RegretReport

void RegretReport::accumulate(double expected_payoff) {
    const double gap = optimal_expected_payoff - expected_payoff;
    if (gap < -kOptimalityTolerance) {
        throw ConsistencyError("played decision exceeds the optimal expected payoff by " + std::to_string(-gap));
    }
    const double previous = cumulative_regret.empty() ? 0.0 : cumulative_regret.back();
    per_round_expected_payoff.push_back(expected_payoff);
    cumulative_regret.push_back(previous + std::max(gap, 0.0));
}

RegretReport accumulate_regret(RegretReport report, double expected_payoff) {
    report.accumulate(expected_payoff);
    return report;
}

// ---------------------------------------------------------------------------
// Forward model

Vector compute_exogenous(const Vector& rewards, const DecisionVector& x) {
    require_same_size(static_cast<std::size_t>(rewards.size()), x.size(), "compute_exogenous");
    return rewards.cwiseProduct(x.as_vector());
}

Vector solve_sem(const AdjacencyMatrix& adjacency, const Vector& rhs) {
    require_same_size(adjacency.size(), static_cast<std::size_t>(rhs.size()), "solve_sem");
    const Matrix& a = adjacency.weights();
    const Eigen::Index n = a.rows();
    Vector y(n);
    if (adjacency.mode() == StructureMode::StrictUpperDag) {
        // y[i] depends only on y[j] for j > i.
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            double acc = rhs[i];
            for (Eigen::Index j = i + 1; j < n; ++j) acc += a(i, j) * y[j];
            y[i] = acc;
        }
    } else {
        Eigen::FullPivLU<Matrix> lu(identity_minus(a));
        if (!lu.isInvertible()) throw SingularSystemError("(I - A) is singular");
        y = lu.solve(rhs);
    }
#ifndef NDEBUG
    const double residual = (identity_minus(a) * y - rhs).lpNorm<Eigen::Infinity>();
    const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    assert(residual <= 1e-10 * scale);
#endif
    return y;
}

Vector propagate(const SemModel& model, const Vector& z) {
    require_same_size(model.size(), static_cast<std::size_t>(z.size()), "propagate");
    return solve_sem(model.adjacency(), model.input_gain().cwiseProduct(z));
}

double payoff(const Vector& y) { return y.sum(); }

Vector payoff_weights(const AdjacencyMatrix& adjacency) {
    // c solves (I - A)^T c = 1.
    const Matrix& a = adjacency.weights();
    const Eigen::Index n = a.rows();
    Vector c(n);
    if (adjacency.mode() == StructureMode::StrictUpperDag) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double acc = 1.0;
            for (Eigen::Index i = 0; i < j; ++i) acc += a(i, j) * c[i];
            c[j] = acc;
        }
        return c;
    }
    Eigen::FullPivLU<Matrix> lu(identity_minus(a).transpose());
    if (!lu.isInvertible()) throw SingularSystemError("(I - A) is singular");
    return lu.solve(Vector::Ones(n));
}

double expected_payoff(const AdjacencyMatrix& adjacency, const Vector& means, const DecisionVector& x) {
    require_same_size(adjacency.size(), static_cast<std::size_t>(means.size()), "expected_payoff means");
    require_same_size(adjacency.size(), x.size(), "expected_payoff decision");
    const Vector c = payoff_weights(adjacency);
    double total = 0.0;
    for (std::size_t i : x.indices()) {
        const auto k = static_cast<Eigen::Index>(i);
        total += c[k] * means[k];
    }
    return total;
}

DecisionVector top_s(const Vector& scores, std::size_t budget) {
    const auto n = static_cast<std::size_t>(scores.size());
    if (budget < 1 || budget > n) {
        throw ParameterError("budget s=" + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return scores[static_cast<Eigen::Index>(l)] > scores[static_cast<Eigen::Index>(r)];
    });
    return DecisionVector::from_indices(n, budget, std::span<const std::size_t>(order.data(), budget));
}

DecisionVector optimal_decision(const AdjacencyMatrix& adjacency, const Vector& means, std::size_t budget) {
    require_same_size(adjacency.size(), static_cast<std::size_t>(means.size()), "optimal_decision");
    return top_s(payoff_weights(adjacency).cwiseProduct(means), budget);
}

DecisionVector brute_force_optimal(const AdjacencyMatrix& adjacency, const Vector& means, std::size_t budget) {
    const std::size_t n = adjacency.size();
    require_same_size(n, static_cast<std::size_t>(means.size()), "brute_force_optimal");
    DecisionVector best(n, budget);
    double best_value = -1.0;
    for_each_feasible(n, budget, [&](std::span<const std::size_t> arms) {
        const DecisionVector x = DecisionVector::from_indices(n, budget, arms);
        const double value = expected_payoff(adjacency, means, x);
        // Strict improvement keeps the earliest maximizer. Among equal-valued
        // sets prefer larger ones, then lexicographically smaller indices.
        if (value > best_value + 1e-15 ||
            (std::abs(value - best_value) <= 1e-15 && x.count() > best.count())) {
            best_value = value;
            best = x;
        }
    });
    return best;
}

std::string format_number(double value) {
    char buffer[64];
    const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, res.ptr);
}

}  // namespace causalbandit
