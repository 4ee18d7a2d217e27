#pragma once

#include <causalbandit/envgen.hpp>
#include <causalbandit/policies.hpp>
#include <causalbandit/sem_core.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace cbtest {

using namespace causalbandit;

// Random DAG instance with N arms; every above-diagonal slot is an edge with
// probability 0.4 and weight in [0.1, 0.9].
inline AdjacencyMatrix random_upper(std::size_t n, Rng& rng, double density = 0.4) {
    std::bernoulli_distribution edge(density);
    std::uniform_real_distribution<double> weight(0.1, 0.9);
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
            if (edge(rng)) a(i, j) = weight(rng);
        }
    }
    return AdjacencyMatrix(a, StructureMode::StrictUpperDag);
}

inline Vector random_means(std::size_t n, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = u(rng);
    return v;
}

inline DecisionVector pick(std::size_t n, std::size_t budget, std::initializer_list<std::size_t> arms) {
    std::vector<std::size_t> v(arms);
    return DecisionVector::from_indices(n, budget, v);
}

// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::current_path() / ("scratch_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace cbtest
