#include <causalbandit/harness.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace causalbandit {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t kNoiseStream = 0x6E6F697365ULL;  // "noise"
constexpr std::uint64_t kEnvStream = 0x656E76ULL;        // "env"

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception (by index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

RegularizerKind parse_regularizer(const std::string& name) {
    if (name == "l1") return RegularizerKind::L1;
    if (name == "dtv") return RegularizerKind::Dtv;
    throw ConfigError("unknown regularizer '" + name + "' (expected l1 or dtv)");
}

FeasibleSet parse_feasible_set(const std::string& name) {
    if (name == "nonneg-strict-upper") return FeasibleSet::NonnegStrictUpper;
    if (name == "nonneg-zero-diagonal") return FeasibleSet::NonnegZeroDiagonal;
    throw ConfigError("unknown feasible set '" + name + "'");
}

std::string to_string(RegularizerKind kind) { return kind == RegularizerKind::L1 ? "l1" : "dtv"; }

std::string to_string(FeasibleSet set) {
    return set == FeasibleSet::NonnegStrictUpper ? "nonneg-strict-upper" : "nonneg-zero-diagonal";
}

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> known, const char* where) {
    for (const auto& [key, value] : object.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError(std::string("unknown key '") + key + "' in " + where);
        }
    }
}

}  // namespace

std::vector<double> default_lambda_grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3}; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream));
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
    if (!env_spec && !env_file) throw ConfigError("config needs an environment spec or file");
    if (env_spec && !env_file) {
        try {
            env_spec->validate();
        } catch (const ParameterError& e) {
            throw ConfigError(e.what());
        }
    }
    if (policies.empty()) throw ConfigError("config lists no policies");
    for (const auto& p : policies) {
        if (std::find(policy_names().begin(), policy_names().end(), p) == policy_names().end()) {
            throw ConfigError("unknown policy '" + p + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("config needs at least one seed");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    if (budget < 1) throw ConfigError("budget must be positive");
    for (double l : lambda_grid) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda grid values must be finite and >= 0");
    }
    if (policy_options.semucb.solve_every_k < 1) throw ConfigError("solve_every_k must be at least 1");
    if (!(policy_options.epsilon >= 0.0 && policy_options.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    try {
        policy_options.semucb.regularizer.validate();
        policy_options.semucb.solver.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
}

void ExperimentConfig::validate_for(std::size_t n_arms) const {
    validate();
    if (horizon < n_arms) throw ConfigError("horizon must be at least the number of arms");
    if (budget > n_arms) throw ConfigError("budget exceeds the number of arms");
}

ExperimentConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config JSON must be an object");
    ExperimentConfig config;
    try {
        reject_unknown_keys(doc,
                            {"env", "env_file", "resample_env_per_seed", "policies", "budget", "horizon", "seeds",
                             "lambda_grid", "regularizer", "solver", "solve_every_k", "epsilon", "output_dir",
                             "workers"},
                            "config");
        if (doc.contains("env")) {
            const json& e = doc.at("env");
            reject_unknown_keys(e,
                                {"n_arms", "edge_density", "weight_low", "weight_high", "reward_std", "mean_low",
                                 "mean_high", "seed"},
                                "env");
            EnvSpec spec;
            spec.n_arms = e.value("n_arms", spec.n_arms);
            spec.edge_density = e.value("edge_density", spec.edge_density);
            spec.weight_low = e.value("weight_low", spec.weight_low);
            spec.weight_high = e.value("weight_high", spec.weight_high);
            spec.reward_std = e.value("reward_std", spec.reward_std);
            spec.mean_low = e.value("mean_low", spec.mean_low);
            spec.mean_high = e.value("mean_high", spec.mean_high);
            spec.seed = e.value("seed", spec.seed);
            config.env_spec = spec;
        }
        if (doc.contains("env_file")) config.env_file = doc.at("env_file").get<std::string>();
        config.resample_env_per_seed = doc.value("resample_env_per_seed", config.resample_env_per_seed);
        if (doc.contains("policies")) config.policies = doc.at("policies").get<std::vector<std::string>>();
        config.budget = doc.value("budget", config.budget);
        config.horizon = doc.value("horizon", config.horizon);
        if (doc.contains("seeds")) config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        if (doc.contains("lambda_grid")) config.lambda_grid = doc.at("lambda_grid").get<std::vector<double>>();
        auto& semucb = config.policy_options.semucb;
        if (doc.contains("regularizer")) {
            const json& r = doc.at("regularizer");
            reject_unknown_keys(r, {"kind", "lambda"}, "regularizer");
            if (r.contains("kind")) semucb.regularizer.kind = parse_regularizer(r.at("kind").get<std::string>());
            semucb.regularizer.lambda = r.value("lambda", semucb.regularizer.lambda);
        }
        if (doc.contains("solver")) {
            const json& s = doc.at("solver");
            reject_unknown_keys(s, {"max_iterations", "tolerance", "feasible_set", "accelerated"}, "solver");
            semucb.solver.max_iterations = s.value("max_iterations", semucb.solver.max_iterations);
            semucb.solver.tolerance = s.value("tolerance", semucb.solver.tolerance);
            semucb.solver.accelerated = s.value("accelerated", semucb.solver.accelerated);
            if (s.contains("feasible_set")) {
                semucb.solver.feasible_set = parse_feasible_set(s.at("feasible_set").get<std::string>());
            }
        }
        semucb.solve_every_k = doc.value("solve_every_k", semucb.solve_every_k);
        config.policy_options.epsilon = doc.value("epsilon", config.policy_options.epsilon);
        if (doc.contains("output_dir")) config.output_dir = doc.at("output_dir").get<std::string>();
        config.workers = doc.value("workers", config.workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentConfig config = config_from_json(buffer.str());
    // Relative environment paths are resolved against the config's directory.
    if (config.env_file && config.env_file->is_relative()) {
        config.env_file = path.parent_path() / *config.env_file;
    }
    return config;
}

std::string config_to_json(const ExperimentConfig& config) {
    json doc;
    if (config.env_file) {
        doc["env_file"] = config.env_file->string();
    } else if (config.env_spec) {
        const EnvSpec& e = *config.env_spec;
        doc["env"] = {{"n_arms", e.n_arms},         {"edge_density", e.edge_density}, {"weight_low", e.weight_low},
                      {"weight_high", e.weight_high}, {"reward_std", e.reward_std},     {"mean_low", e.mean_low},
                      {"mean_high", e.mean_high},     {"seed", e.seed}};
    }
    const auto& semucb = config.policy_options.semucb;
    doc["resample_env_per_seed"] = config.resample_env_per_seed;
    doc["policies"] = config.policies;
    doc["budget"] = config.budget;
    doc["horizon"] = config.horizon;
    doc["seeds"] = config.seeds;
    doc["lambda_grid"] = config.lambda_grid;
    doc["regularizer"] = {{"kind", to_string(semucb.regularizer.kind)}, {"lambda", semucb.regularizer.lambda}};
    doc["solver"] = {{"max_iterations", semucb.solver.max_iterations},
                     {"tolerance", semucb.solver.tolerance},
                     {"feasible_set", to_string(semucb.solver.feasible_set)},
                     {"accelerated", semucb.solver.accelerated}};
    doc["solve_every_k"] = semucb.solve_every_k;
    doc["epsilon"] = config.policy_options.epsilon;
    return doc.dump(2);
}

Environment resolve_environment(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.env_file) return load_environment(*config.env_file);
    if (!config.env_spec) throw ConfigError("config needs an environment spec or file");
    EnvSpec spec = *config.env_spec;
    if (config.resample_env_per_seed) spec.seed = derive_seed(spec.seed ^ kEnvStream, seed);
    return generate_environment(spec);
}

// ---------------------------------------------------------------------------
// Episodes

RegretReport run_episode(const ExperimentConfig& config, const Environment& env, Policy& policy,
                         std::uint64_t noise_seed) {
    config.validate_for(env.size());
    const SemModel& model = env.model;
    const AdjacencyMatrix& truth = model.adjacency();
    const Vector& means = model.mean_rewards();
    const DecisionVector best = optimal_decision(truth, means, config.budget);

    RegretReport report(expected_payoff(truth, means, best));
    report.per_round_expected_payoff.reserve(config.horizon);
    report.cumulative_regret.reserve(config.horizon);
    report.selections.reserve(config.horizon);

    const Vector weighted = payoff_weights(truth).cwiseProduct(means);
    const auto n = static_cast<Eigen::Index>(env.size());
    const Matrix zero = Matrix::Zero(n, n);

    SemEnvironment sem_env(model, noise_seed);
    for (std::size_t t = 1; t <= config.horizon; ++t) {
        DecisionVector x = play_round(policy, t, sem_env);
        double mu = 0.0;
        for (std::size_t i : x.indices()) mu += weighted[static_cast<Eigen::Index>(i)];
        report.accumulate(mu);
        report.selections.push_back(std::move(x));
        if (policy.learns_graph()) {
            const AdjacencyMatrix* estimate = policy.estimated_adjacency();
            report.recovery_mse.push_back(adjacency_mse(truth.weights(), estimate ? estimate->weights() : zero));
        }
    }
    return report;
}

EpisodeResult run_policy_episode(const ExperimentConfig& config, const std::string& policy_name,
                                 std::uint64_t seed) {
    EpisodeResult result;
    result.policy = policy_name;
    result.seed = seed;
    result.environment = resolve_environment(config, seed);
    auto policy = make_policy(policy_name, result.environment.model, config.budget, config.policy_options,
                              derive_seed(seed, fnv1a(policy_name)));
    result.report = run_episode(config, result.environment, *policy, derive_seed(seed, kNoiseStream));
    if (const auto* semucb = dynamic_cast<const SemUcbPolicy*>(policy.get())) result.w_max = semucb->w_max();
    return result;
}

// ---------------------------------------------------------------------------
// Bound

double theorem1_bound(const BoundInputs& in) {
    if (!(in.delta_min > 0.0)) throw DegenerateInstanceError("regret bound needs a positive minimum gap");
    if (in.delta_min > in.delta_max) throw ParameterError("delta_min exceeds delta_max");
    if (!(in.horizon > 0.0)) throw ParameterError("horizon must be positive");
    const double s = static_cast<double>(in.budget);
    const double n = static_cast<double>(in.n_arms);
    const double log_term =
        4.0 * in.w_max * in.w_max * s * s * (s + 1.0) * n * std::log(in.horizon) / (in.delta_min * in.delta_min);
    const double tail = std::numbers::pi * std::numbers::pi / 3.0 * std::pow(s, static_cast<double>(in.longest_path)) * n;
    return (log_term + n + tail) * in.delta_max;
}

GapStatistics compute_gap_statistics(const AdjacencyMatrix& adjacency, const Vector& means, std::size_t budget) {
    const std::size_t n = adjacency.size();
    if (n > kGapEnumerationMaxArms || budget > kGapEnumerationMaxBudget) {
        throw SizeError("gap enumeration limited to N <= " + std::to_string(kGapEnumerationMaxArms) +
                        " and s <= " + std::to_string(kGapEnumerationMaxBudget));
    }
    if (static_cast<std::size_t>(means.size()) != n) throw DimensionError("gap statistics: means length mismatch");
    const Vector weighted = payoff_weights(adjacency).cwiseProduct(means);
    std::vector<double> values;
    // Only full-budget selections compete: with nonnegative weights a smaller
    // set is never better, and no policy here plays one.
    for_each_feasible(n, budget, [&](std::span<const std::size_t> arms) {
        if (arms.size() != budget) return;
        double mu = 0.0;
        for (std::size_t i : arms) mu += weighted[static_cast<Eigen::Index>(i)];
        values.push_back(mu);
    });
    const double best = *std::max_element(values.begin(), values.end());
    const double tie = 1e-12 * std::max(1.0, std::abs(best));
    GapStatistics gaps;
    gaps.degenerate = true;
    for (double mu : values) {
        const double gap = best - mu;
        if (gap <= tie) continue;
        if (gaps.degenerate) {
            gaps.delta_min = gaps.delta_max = gap;
            gaps.degenerate = false;
        } else {
            gaps.delta_min = std::min(gaps.delta_min, gap);
            gaps.delta_max = std::max(gaps.delta_max, gap);
        }
    }
    return gaps;
}

// ---------------------------------------------------------------------------
// Lambda search

GridResult grid_search(std::span<const double> grid, const std::function<double(double)>& score) {
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    GridResult result;
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const double value = score(lambda);
        result.table.push_back({lambda, value});
        if (value < best) {
            best = value;
            result.best_lambda = lambda;
        }
    }
    if (!std::isfinite(best)) result.best_lambda = grid.front();
    return result;
}

GridResult grid_search_lambda(const ExperimentConfig& config) {
    config.validate();
    const std::vector<double>& grid = config.lambda_grid;
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    // Every (lambda, seed) episode is independent.
    const std::size_t per_lambda = config.seeds.size();
    std::vector<double> final_mse(grid.size() * per_lambda, 0.0);
    parallel_for(final_mse.size(), config.workers, [&](std::size_t job) {
        ExperimentConfig local = config;
        local.policy_options.semucb.regularizer.lambda = grid[job / per_lambda];
        const EpisodeResult episode = run_policy_episode(local, "semucb", config.seeds[job % per_lambda]);
        final_mse[job] = episode.report.recovery_mse.back();
    });
    std::size_t index = 0;
    return grid_search(grid, [&](double) {
        double total = 0.0;
        for (std::size_t k = 0; k < per_lambda; ++k) total += final_mse[index * per_lambda + k];
        ++index;
        return total / static_cast<double>(per_lambda);
    });
}

// ---------------------------------------------------------------------------
// Experiments and reports

std::vector<PolicySummary> ExperimentResult::summaries() const {
    std::vector<PolicySummary> out;
    std::map<std::string, std::vector<double>> finals;
    for (const auto& e : episodes) {
        if (!finals.contains(e.policy)) out.push_back({e.policy, 0.0, 0.0});
        finals[e.policy].push_back(e.report.final_regret());
    }
    for (auto& s : out) {
        const auto& v = finals[s.policy];
        double mean = 0.0;
        for (double r : v) mean += r;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double r : v) var += (r - mean) * (r - mean);
        s.mean_final_regret = mean;
        s.std_final_regret = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    const std::size_t per_policy = config.seeds.size();
    result.episodes.resize(config.policies.size() * per_policy);
    parallel_for(result.episodes.size(), config.workers, [&](std::size_t job) {
        result.episodes[job] =
            run_policy_episode(config, config.policies[job / per_policy], config.seeds[job % per_policy]);
    });
    return result;
}

void emit_reports(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    {
        auto out = open_output(dir / "regret.csv");
        out << "policy,seed,t,expected_payoff,cumulative_regret,time_averaged_regret\n";
        for (const auto& e : result.episodes) {
            const auto& r = e.report;
            for (std::size_t k = 0; k < r.rounds(); ++k) {
                const double cumulative = r.cumulative_regret[k];
                out << e.policy << ',' << e.seed << ',' << (k + 1) << ',' << format_number(r.per_round_expected_payoff[k])
                    << ',' << format_number(cumulative) << ',' << format_number(cumulative / static_cast<double>(k + 1))
                    << '\n';
            }
        }
    }
    {
        auto out = open_output(dir / "mse.csv");
        out << "seed,t,mse\n";
        for (const auto& e : result.episodes) {
            for (std::size_t k = 0; k < e.report.recovery_mse.size(); ++k) {
                out << e.seed << ',' << (k + 1) << ',' << format_number(e.report.recovery_mse[k]) << '\n';
            }
        }
    }
    {
        // Heatmap of one run: the first SEM-UCB episode, else the first episode.
        auto out = open_output(dir / "selections.csv");
        out << "t,arm,selected\n";
        const EpisodeResult* shown = nullptr;
        for (const auto& e : result.episodes) {
            if (e.policy == "semucb") {
                shown = &e;
                break;
            }
        }
        if (shown == nullptr && !result.episodes.empty()) shown = &result.episodes.front();
        if (shown != nullptr) {
            for (std::size_t k = 0; k < shown->report.selections.size(); ++k) {
                const DecisionVector& x = shown->report.selections[k];
                for (std::size_t arm = 0; arm < x.size(); ++arm) {
                    out << (k + 1) << ',' << (arm + 1) << ',' << (x.selected(arm) ? 1 : 0) << '\n';
                }
            }
        }
    }

    json summary;
    summary["config"] = json::parse(config_to_json(config));
    json policies = json::array();
    for (const auto& s : result.summaries()) {
        policies.push_back({{"policy", s.policy},
                            {"mean_final_regret", s.mean_final_regret},
                            {"std_final_regret", s.std_final_regret}});
    }
    summary["policies"] = std::move(policies);

    json bounds = json::array();
    double bound_total = 0.0;
    double w_max = 0.0;
    std::size_t bound_count = 0;
    std::string bound_note;
    for (const auto& e : result.episodes) {
        if (e.policy != "semucb") continue;
        w_max = std::max(w_max, e.w_max);
        const auto& model = e.environment.model;
        try {
            const GapStatistics gaps = compute_gap_statistics(model.adjacency(), model.mean_rewards(), config.budget);
            BoundInputs in;
            in.w_max = e.w_max;
            in.budget = config.budget;
            in.longest_path = longest_path_length(model.adjacency());
            in.n_arms = model.size();
            in.delta_min = gaps.delta_min;
            in.delta_max = gaps.delta_max;
            in.horizon = static_cast<double>(config.horizon);
            const double value = theorem1_bound(in);
            bounds.push_back({{"seed", e.seed}, {"bound", value}, {"w_max", e.w_max}, {"delta_min", gaps.delta_min},
                              {"delta_max", gaps.delta_max}, {"longest_path", in.longest_path}});
            bound_total += value;
            ++bound_count;
        } catch (const Error& err) {
            bound_note = err.what();
        }
    }
    summary["w_max"] = w_max;
    summary["bound_per_seed"] = std::move(bounds);
    if (bound_count > 0) {
        summary["bound"] = bound_total / static_cast<double>(bound_count);
    } else {
        summary["bound"] = nullptr;
        if (!bound_note.empty()) summary["bound_note"] = bound_note;
    }
    auto out = open_output(dir / "summary.json");
    out << summary.dump(2) << '\n';
}

}  // namespace causalbandit
