#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace cbtest;

namespace {

std::size_t nonzeros(const Matrix& a) { return static_cast<std::size_t>((a.array() != 0.0).count()); }

AdjacencyMatrix from_edges(std::size_t n, std::initializer_list<std::pair<int, int>> edges) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (auto [i, j] : edges) a(i, j) = 0.5;
    return AdjacencyMatrix(a, StructureMode::StrictUpperDag);
}

}  // namespace

TEST_SUITE("random_dag") {
    TEST_CASE("zero density gives the zero matrix") {
        EnvSpec spec;
        spec.edge_density = 0.0;
        Rng rng(1);
        CHECK(random_dag(spec, rng).weights().isZero(0.0));
    }

    TEST_CASE("full density fills every upper slot within the weight range") {
        EnvSpec spec;
        spec.n_arms = 3;
        spec.edge_density = 1.0;
        Rng rng(2);
        const Matrix a = random_dag(spec, rng).weights();
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                if (j > i) {
                    CHECK(a(i, j) >= 0.4);
                    CHECK(a(i, j) <= 0.7);
                } else {
                    CHECK(a(i, j) == 0.0);
                }
            }
        }
    }

    TEST_CASE("mean edge count matches the binomial expectation") {
        EnvSpec spec;
        Rng rng(3);
        double total = 0.0;
        for (int k = 0; k < 1000; ++k) total += static_cast<double>(nonzeros(random_dag(spec, rng).weights()));
        CHECK(std::abs(total / 1000.0 - 28.5) <= 1.5);
    }

    TEST_CASE("output satisfies the DAG invariants") {
        EnvSpec spec;
        spec.edge_density = 0.5;
        Rng rng(4);
        for (int k = 0; k < 100; ++k) {
            const Matrix a = random_dag(spec, rng).weights();
            CHECK(a.minCoeff() >= 0.0);
            CHECK(a.diagonal().isZero(0.0));
            CHECK(Matrix(a.triangularView<Eigen::Lower>()).isZero(0.0));
        }
    }

    TEST_CASE("invalid specs are rejected") {
        EnvSpec spec;
        spec.edge_density = 1.5;
        CHECK_THROWS_AS(spec.validate(), ParameterError);
        spec = EnvSpec{};
        spec.weight_low = 0.8;
        CHECK_THROWS_AS(spec.validate(), ParameterError);
        spec = EnvSpec{};
        spec.n_arms = 0;
        CHECK_THROWS_AS(spec.validate(), ParameterError);
    }
}

TEST_SUITE("sample_rewards") {
    TEST_CASE("zero spread returns the means exactly") {
        const Vector beta = (Vector(3) << 0.1, 0.5, 0.9).finished();
        const SemModel m(AdjacencyMatrix::zeros(3), beta, 0.0);
        Rng rng(5);
        CHECK(sample_rewards(m, rng) == beta);
    }

    TEST_CASE("samples stay inside the unit cube") {
        const Vector beta = (Vector(4) << 0.01, 0.5, 0.99, 0.3).finished();
        const SemModel m(AdjacencyMatrix::zeros(4), beta, 0.3);
        Rng rng(6);
        for (int k = 0; k < 10000; ++k) {
            const Vector b = sample_rewards(m, rng);
            CHECK(b.minCoeff() >= 0.0);
            CHECK(b.maxCoeff() <= 1.0);
        }
    }

    TEST_CASE("symmetric truncation preserves the mean") {
        const SemModel m(AdjacencyMatrix::zeros(1), Vector::Constant(1, 0.5), 0.1);
        Rng rng(7);
        double sum = 0.0;
        for (int k = 0; k < 100000; ++k) sum += sample_rewards(m, rng)[0];
        CHECK(std::abs(sum / 100000.0 - 0.5) < 0.003);
    }
}

TEST_SUITE("longest_path_length") {
    TEST_CASE("zero matrix") { CHECK(longest_path_length(AdjacencyMatrix::zeros(4)) == 0); }

    TEST_CASE("three-node chain") { CHECK(longest_path_length(from_edges(3, {{0, 1}, {1, 2}})) == 2); }

    TEST_CASE("four nodes with a branch") {
        CHECK(longest_path_length(from_edges(4, {{0, 1}, {0, 2}, {2, 3}})) == 2);
    }

    TEST_CASE("nilpotency index matches the path length") {
        EnvSpec spec;
        spec.n_arms = 9;
        spec.edge_density = 0.3;
        Rng rng(8);
        for (int k = 0; k < 50; ++k) {
            const AdjacencyMatrix a = random_dag(spec, rng);
            const std::size_t p = longest_path_length(a);
            Matrix power = Matrix::Identity(9, 9);
            for (std::size_t e = 0; e < p; ++e) power = power * a.weights();
            CHECK_FALSE(power.isZero(0.0));
            CHECK((power * a.weights()).isZero(0.0));
        }
    }

    TEST_CASE("general mode: acyclic accepted, cycle rejected") {
        Matrix acyclic = Matrix::Zero(3, 3);
        acyclic(2, 0) = 0.3;
        acyclic(1, 2) = 0.3;
        CHECK(longest_path_length(AdjacencyMatrix(acyclic, StructureMode::GeneralDirected)) == 2);
        Matrix cyc = acyclic;
        cyc(0, 1) = 0.3;
        CHECK_THROWS_AS(longest_path_length(AdjacencyMatrix(cyc, StructureMode::GeneralDirected)),
                        UnsupportedStructureError);
    }
}

TEST_SUITE("generate_environment") {
    TEST_CASE("identical seeds give identical environments") {
        EnvSpec spec;
        spec.seed = 99;
        const Environment a = generate_environment(spec);
        const Environment b = generate_environment(spec);
        CHECK(a.model.adjacency().weights() == b.model.adjacency().weights());
        CHECK(a.model.mean_rewards() == b.model.mean_rewards());
        spec.seed = 100;
        CHECK_FALSE(generate_environment(spec).model.adjacency().weights() == a.model.adjacency().weights());
    }

    TEST_CASE("means lie in the configured range") {
        EnvSpec spec;
        spec.seed = 3;
        const Vector beta = generate_environment(spec).model.mean_rewards();
        CHECK(beta.minCoeff() >= 0.2);
        CHECK(beta.maxCoeff() <= 0.8);
    }

    TEST_CASE("JSON round trip is exact") {
        EnvSpec spec;
        spec.seed = 42;
        spec.n_arms = 7;
        const Environment env = generate_environment(spec);
        const Environment back = environment_from_json(environment_to_json(env));
        CHECK(back.model.adjacency().weights() == env.model.adjacency().weights());
        CHECK(back.model.mean_rewards() == env.model.mean_rewards());
        CHECK(back.model.reward_std() == env.model.reward_std());
        CHECK(back.seed == env.seed);

        const auto dir = scratch_dir("envgen");
        save_environment(env, dir / "env.json");
        CHECK(load_environment(dir / "env.json").model.adjacency().weights() == env.model.adjacency().weights());
    }

    TEST_CASE("malformed documents are config errors") {
        CHECK_THROWS_AS(environment_from_json("{"), ConfigError);
        CHECK_THROWS_AS(environment_from_json(R"({"n_arms": 2, "adjacency": [[0, 1]], "beta": [0.5, 0.5],
                                                  "reward_std": 0.1, "seed": 0})"),
                        ConfigError);
        CHECK_THROWS(load_environment("definitely/not/here.json"));
    }
}
