#include <causalbandit/envgen.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace causalbandit {

using nlohmann::json;

void EnvSpec::validate() const {
    if (n_arms < 1) throw ParameterError("n_arms must be positive");
    if (!(edge_density >= 0.0 && edge_density <= 1.0)) throw ParameterError("edge_density must lie in [0, 1]");
    if (!(weight_low <= weight_high)) throw ParameterError("weight_low must not exceed weight_high");
    if (weight_low < 0.0) throw ParameterError("edge weights must be nonnegative");
    if (!(reward_std >= 0.0)) throw ParameterError("reward_std must be nonnegative");
    if (!(mean_low >= 0.0 && mean_low <= mean_high && mean_high <= 1.0)) {
        throw ParameterError("mean range must satisfy 0 <= mean_low <= mean_high <= 1");
    }
}

AdjacencyMatrix random_dag(const EnvSpec& spec, Rng& rng) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n_arms);
    Matrix a = Matrix::Zero(n, n);
    std::bernoulli_distribution edge(spec.edge_density);
    std::uniform_real_distribution<double> weight(spec.weight_low, spec.weight_high);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (edge(rng)) a(i, j) = weight(rng);
        }
    }
    return AdjacencyMatrix(std::move(a), StructureMode::StrictUpperDag);
}

Vector sample_rewards(const SemModel& model, Rng& rng) {
    const Vector& mean = model.mean_rewards();
    const double sd = model.reward_std();
    if (sd == 0.0) return mean;
    Vector b(mean.size());
    std::normal_distribution<double> standard(0.0, 1.0);
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        double draw;
        do {
            draw = mean[i] + sd * standard(rng);
        } while (draw < 0.0 || draw > 1.0);
        b[i] = draw;
    }
    return b;
}

std::size_t longest_path_length(const AdjacencyMatrix& adjacency) {
    const Matrix& a = adjacency.weights();
    const Eigen::Index n = a.rows();
    // Edge j -> i whenever A[i, j] != 0.
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(n));
    if (adjacency.mode() == StructureMode::StrictUpperDag) {
        for (Eigen::Index v = n - 1; v >= 0; --v) order.push_back(v);
    } else {
        std::vector<int> indegree(static_cast<std::size_t>(n), 0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (a(i, j) != 0.0) ++indegree[static_cast<std::size_t>(i)];
        std::vector<Eigen::Index> ready;
        for (Eigen::Index v = 0; v < n; ++v)
            if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
        while (!ready.empty()) {
            const Eigen::Index j = ready.back();
            ready.pop_back();
            order.push_back(j);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (a(i, j) != 0.0 && --indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
            }
        }
        if (static_cast<Eigen::Index>(order.size()) != n) {
            throw UnsupportedStructureError("longest path is undefined on a graph with cycles");
        }
    }
    std::vector<std::size_t> depth(static_cast<std::size_t>(n), 0);
    std::size_t longest = 0;
    for (Eigen::Index j : order) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (a(i, j) == 0.0) continue;
            auto& d = depth[static_cast<std::size_t>(i)];
            d = std::max(d, depth[static_cast<std::size_t>(j)] + 1);
            longest = std::max(longest, d);
        }
    }
    return longest;
}

Environment generate_environment(const EnvSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    AdjacencyMatrix a = random_dag(spec, rng);
    std::uniform_real_distribution<double> mean(spec.mean_low, spec.mean_high);
    Vector beta(static_cast<Eigen::Index>(spec.n_arms));
    for (auto& m : beta) m = mean(rng);
    return Environment{SemModel(std::move(a), std::move(beta), spec.reward_std), spec.seed};
}

std::string environment_to_json(const Environment& env) {
    const Matrix& a = env.model.adjacency().weights();
    json adjacency = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        adjacency.push_back(std::move(row));
    }
    const Vector& beta = env.model.mean_rewards();
    json doc = {
        {"n_arms", env.size()},
        {"adjacency", std::move(adjacency)},
        {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())},
        {"reward_std", env.model.reward_std()},
        {"seed", env.seed},
    };
    return doc.dump(2);
}

Environment environment_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("environment JSON: ") + e.what());
    }
    try {
        const auto n = doc.at("n_arms").get<std::size_t>();
        const auto& rows = doc.at("adjacency");
        const auto beta_values = doc.at("beta").get<std::vector<double>>();
        if (rows.size() != n || beta_values.size() != n) {
            throw ConfigError("environment JSON: adjacency/beta sizes disagree with n_arms");
        }
        const auto size = static_cast<Eigen::Index>(n);
        Matrix a(size, size);
        for (Eigen::Index i = 0; i < size; ++i) {
            const auto row = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
            if (row.size() != n) throw ConfigError("environment JSON: adjacency row has wrong length");
            for (Eigen::Index j = 0; j < size; ++j) a(i, j) = row[static_cast<std::size_t>(j)];
        }
        Vector beta = Eigen::Map<const Vector>(beta_values.data(), size);
        // Files may carry cyclic matrices; anything not strictly upper
        // triangular is loaded in general mode.
        const bool upper = a.triangularView<Eigen::Lower>().toDenseMatrix().isZero(0.0);
        const StructureMode mode = upper ? StructureMode::StrictUpperDag : StructureMode::GeneralDirected;
        return Environment{SemModel(AdjacencyMatrix(std::move(a), mode), std::move(beta),
                                    doc.at("reward_std").get<double>()),
                           doc.value("seed", std::uint64_t{0})};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("environment JSON: ") + e.what());
    }
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << environment_to_json(env) << '\n';
}

Environment load_environment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read environment file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return environment_from_json(buffer.str());
}

}  // namespace causalbandit
