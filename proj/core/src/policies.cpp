#include <causalbandit/policies.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace causalbandit {

namespace {

constexpr double kUnobserved = std::numeric_limits<double>::infinity();

void check_budget(std::size_t n_arms, std::size_t budget) {
    if (budget < 1 || budget > n_arms) {
        throw ParameterError("budget s=" + std::to_string(budget) + " outside [1, " + std::to_string(n_arms) + "]");
    }
}

double exploration_bonus(std::size_t pulls, std::size_t t, std::size_t budget) {
    return std::sqrt(static_cast<double>(budget + 1) * std::log(static_cast<double>(t)) / static_cast<double>(pulls));
}

}  // namespace

// ---------------------------------------------------------------------------
// Initialization matrix

InitializationMatrix::InitializationMatrix(std::vector<DecisionVector> columns) : columns_(std::move(columns)) {
    for (const auto& c : columns_) {
        if (c.size() != columns_.size()) throw DimensionError("initialization matrix must be square");
    }
}

Matrix InitializationMatrix::dense() const {
    const auto n = static_cast<Eigen::Index>(columns_.size());
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) m.col(j) = columns_[static_cast<std::size_t>(j)].as_vector();
    return m;
}

InitializationMatrix build_initialization_matrix(std::size_t n_arms, std::size_t budget, Rng& rng) {
    check_budget(n_arms, budget);
    std::vector<DecisionVector> columns;
    columns.reserve(n_arms);
    std::vector<std::size_t> above;
    for (std::size_t col = 0; col < n_arms; ++col) {
        DecisionVector x(n_arms, budget);
        x.select(col);
        above.resize(col);
        std::iota(above.begin(), above.end(), std::size_t{0});
        if (col + 1 <= budget) {
            for (std::size_t row : above) x.select(row);
        } else {
            std::vector<std::size_t> picked;
            std::sample(above.begin(), above.end(), std::back_inserter(picked), budget - 1, rng);
            for (std::size_t row : picked) x.select(row);
        }
        columns.push_back(std::move(x));
    }
    return InitializationMatrix(std::move(columns));
}

// ---------------------------------------------------------------------------
// Index and selection rules

double ucb_index(double empirical_mean, std::size_t pulls, std::size_t t, std::size_t budget) {
    if (pulls == 0) throw UnobservedArmError("UCB index requested for an arm that was never observed");
    if (t < 1) throw ParameterError("UCB index needs t >= 1");
    return empirical_mean + exploration_bonus(pulls, t, budget);
}

DecisionVector select_decision(const AdjacencyMatrix& estimate, const Vector& indices, std::size_t budget) {
    if (estimate.size() != static_cast<std::size_t>(indices.size())) {
        throw DimensionError("select_decision: index vector length mismatch");
    }
    if ((indices.array() < 0.0).any()) throw ParameterError("UCB indices must be nonnegative");
    return top_s(payoff_weights(estimate).cwiseProduct(indices), budget);
}

DecisionVector random_subset(std::size_t n_arms, std::size_t budget, Rng& rng) {
    check_budget(n_arms, budget);
    std::vector<std::size_t> arms(n_arms);
    std::iota(arms.begin(), arms.end(), std::size_t{0});
    std::vector<std::size_t> picked;
    picked.reserve(budget);
    std::sample(arms.begin(), arms.end(), std::back_inserter(picked), budget, rng);
    return DecisionVector::from_indices(n_arms, budget, picked);
}

DecisionVector epsilon_greedy_choice(const Vector& means, const std::vector<std::size_t>& pulls, double epsilon,
                                     std::size_t budget, Rng& rng) {
    const auto n = static_cast<std::size_t>(means.size());
    if (pulls.size() != n) throw DimensionError("epsilon_greedy_choice: pull counts length mismatch");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ParameterError("epsilon must lie in [0, 1]");
    std::bernoulli_distribution explore(epsilon);
    if (explore(rng)) return random_subset(n, budget, rng);
    Vector scores = means;
    for (std::size_t i = 0; i < n; ++i) {
        if (pulls[i] == 0) scores[static_cast<Eigen::Index>(i)] = kUnobserved;
    }
    return top_s(scores, budget);
}

// ---------------------------------------------------------------------------
// Environment

Observation SemEnvironment::play(const DecisionVector& x) {
    if (x.size() != model_.size()) throw DimensionError("decision length does not match the environment");
    const Vector b = sample_rewards(model_, rng_);
    Observation obs;
    obs.z = compute_exogenous(b, x);
    obs.y = propagate(model_, obs.z);
    return obs;
}

DecisionVector play_round(Policy& policy, std::size_t t, BanditEnvironment& env) {
    DecisionVector x = policy.select(t);
    if (x.size() != env.size()) throw DimensionError("policy and environment disagree on the number of arms");
    const Observation obs = env.play(x);
    policy.observe(x, obs);
    return x;
}

// ---------------------------------------------------------------------------
// SEM-UCB

SemUcbPolicy::SemUcbPolicy(std::size_t n_arms, std::size_t budget, SemUcbOptions options, Rng& rng)
    : SemUcbPolicy(build_initialization_matrix(n_arms, budget, rng), budget, std::move(options)) {}

SemUcbPolicy::SemUcbPolicy(InitializationMatrix init, std::size_t budget, SemUcbOptions options)
    : init_(std::move(init)), budget_(budget), options_(std::move(options)) {
    const std::size_t n = init_.size();
    check_budget(n, budget_);
    if (options_.solve_every_k < 1) throw ParameterError("solve_every_k must be at least 1");
    options_.regularizer.validate();
    options_.solver.validate();
    state_.log = FeedbackLog(n);
    state_.indices = Vector::Zero(static_cast<Eigen::Index>(n));
    state_.confidence = Vector::Zero(static_cast<Eigen::Index>(n));
    const StructureMode mode = options_.solver.feasible_set == FeasibleSet::NonnegStrictUpper
                                   ? StructureMode::StrictUpperDag
                                   : StructureMode::GeneralDirected;
    state_.estimated_adjacency = AdjacencyMatrix::zeros(n, mode);
    data_ = RegressionData(n);
}

void SemUcbPolicy::refresh_indices(std::size_t t) {
    const auto& pulls = state_.log.pull_counts();
    const Vector& means = state_.log.empirical_means();
    for (std::size_t i = 0; i < pulls.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        state_.indices[k] = ucb_index(means[k], pulls[i], t, budget_);
        state_.confidence[k] = state_.indices[k] - means[k];
    }
    state_.round = t;
}

DecisionVector SemUcbPolicy::select(std::size_t t) {
    const std::size_t n = init_.size();
    if (t < 1) throw ParameterError("rounds are numbered from 1");
    if (t <= n) {
        w_max_ = std::max(w_max_, 1.0);
        return init_.column(t - 1);
    }
    const bool due = !has_estimate_ || (t - n - 1) % options_.solve_every_k == 0;
    if (due) {
        const Matrix warm = state_.estimated_adjacency.weights();
        SolveResult solved = estimate_adjacency(data_, options_.regularizer, options_.solver, &warm);
        state_.estimated_adjacency = std::move(solved.adjacency);
        last_converged_ = solved.converged;
        has_estimate_ = true;
        ++solves_;
    }
    refresh_indices(t - 1);
    DecisionVector x = select_decision(state_.estimated_adjacency, state_.indices, budget_);
    const Vector c = payoff_weights(state_.estimated_adjacency);
    for (std::size_t i : x.indices()) w_max_ = std::max(w_max_, c[static_cast<Eigen::Index>(i)]);
    return x;
}

void SemUcbPolicy::observe(const DecisionVector& x, const Observation& obs) {
    state_.log.record(x, obs.z, obs.y);
    data_.append(obs.z, obs.y);
}

const AdjacencyMatrix* SemUcbPolicy::estimated_adjacency() const {
    return has_estimate_ ? &state_.estimated_adjacency : nullptr;
}

// ---------------------------------------------------------------------------
// Baselines

CucbPolicy::CucbPolicy(std::size_t n_arms, std::size_t budget)
    : budget_(budget), pulls_(n_arms, 0), sums_(Vector::Zero(static_cast<Eigen::Index>(n_arms))) {
    check_budget(n_arms, budget);
}

Vector CucbPolicy::indices(std::size_t t) const {
    const double normalizer = std::max(1.0, running_max_);
    const std::size_t history = std::max<std::size_t>(t, 2) - 1;
    Vector out(sums_.size());
    for (std::size_t i = 0; i < pulls_.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        out[k] = pulls_[i] == 0
                     ? kUnobserved
                     : ucb_index(sums_[k] / static_cast<double>(pulls_[i]) / normalizer, pulls_[i], history, budget_);
    }
    return out;
}

DecisionVector CucbPolicy::select(std::size_t t) { return top_s(indices(t), budget_); }

void CucbPolicy::observe(const DecisionVector& x, const Observation& obs) {
    for (std::size_t i : x.indices()) {
        const auto k = static_cast<Eigen::Index>(i);
        ++pulls_[i];
        sums_[k] += obs.y[k];
        running_max_ = std::max(running_max_, obs.y[k]);
    }
}

EpsilonGreedyPolicy::EpsilonGreedyPolicy(std::size_t n_arms, std::size_t budget, double epsilon, std::uint64_t seed)
    : budget_(budget),
      epsilon_(epsilon),
      rng_(seed),
      pulls_(n_arms, 0),
      sums_(Vector::Zero(static_cast<Eigen::Index>(n_arms))) {
    check_budget(n_arms, budget);
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ParameterError("epsilon must lie in [0, 1]");
}

DecisionVector EpsilonGreedyPolicy::select(std::size_t) {
    Vector means = Vector::Zero(sums_.size());
    for (std::size_t i = 0; i < pulls_.size(); ++i) {
        if (pulls_[i] > 0) means[static_cast<Eigen::Index>(i)] = sums_[static_cast<Eigen::Index>(i)] / static_cast<double>(pulls_[i]);
    }
    return epsilon_greedy_choice(means, pulls_, epsilon_, budget_, rng_);
}

void EpsilonGreedyPolicy::observe(const DecisionVector& x, const Observation& obs) {
    for (std::size_t i : x.indices()) {
        ++pulls_[i];
        sums_[static_cast<Eigen::Index>(i)] += obs.y[static_cast<Eigen::Index>(i)];
    }
}

RandomPolicy::RandomPolicy(std::size_t n_arms, std::size_t budget, std::uint64_t seed)
    : n_(n_arms), budget_(budget), rng_(seed) {
    check_budget(n_arms, budget);
}

DecisionVector RandomPolicy::select(std::size_t) { return random_subset(n_, budget_, rng_); }

OraclePolicy::OraclePolicy(const SemModel& model, std::size_t budget)
    : best_(optimal_decision(model.adjacency(), model.mean_rewards(), budget)) {}

std::unique_ptr<Policy> make_policy(std::string_view name, const SemModel& model, std::size_t budget,
                                    const PolicyOptions& options, std::uint64_t seed) {
    const std::size_t n = model.size();
    if (name == "semucb") {
        Rng rng(seed);
        return std::make_unique<SemUcbPolicy>(n, budget, options.semucb, rng);
    }
    if (name == "cucb") return std::make_unique<CucbPolicy>(n, budget);
    if (name == "epsgreedy") return std::make_unique<EpsilonGreedyPolicy>(n, budget, options.epsilon, seed);
    if (name == "random") return std::make_unique<RandomPolicy>(n, budget, seed);
    if (name == "oracle") return std::make_unique<OraclePolicy>(model, budget);
    throw ConfigError("unknown policy '" + std::string(name) + "'");
}

}  // namespace causalbandit
