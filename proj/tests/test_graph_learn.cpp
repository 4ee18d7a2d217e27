#include "support.hpp"

#include <causalbandit/graph_learn.hpp>

#include <doctest.h>

#include <fstream>

using namespace cbtest;

namespace {

SolverSettings strict() {
    SolverSettings s;
    s.max_iterations = 20000;
    s.tolerance = 1e-12;
    return s;
}

// Noise-free data played from an initialization schedule on a random DAG.
struct Noiseless {
    Matrix a;
    Matrix z;
    Matrix y;
};

Noiseless noiseless_init_data(std::size_t n, std::size_t s, Rng& rng) {
    EnvSpec spec;
    spec.n_arms = n;
    spec.edge_density = 0.5;
    const AdjacencyMatrix a = random_dag(spec, rng);
    const Vector beta = random_means(n, rng).array() * 0.8 + 0.2;
    const InitializationMatrix m = build_initialization_matrix(n, s, rng);
    Noiseless out{a.weights(), Matrix(n, n), Matrix(n, n)};
    for (std::size_t t = 0; t < n; ++t) {
        const Vector z = compute_exogenous(beta, m.column(t));
        out.z.col(static_cast<Eigen::Index>(t)) = z;
        out.y.col(static_cast<Eigen::Index>(t)) = solve_sem(a, z);
    }
    return out;
}

}  // namespace

TEST_SUITE("adjacency_mse") {
    TEST_CASE("identical matrices") {
        Rng rng(1);
        const auto a = random_upper(5, rng);
        CHECK(adjacency_mse(a, a) == 0.0);
    }

    TEST_CASE("single entry") {
        Matrix est = Matrix::Zero(2, 2);
        est(0, 1) = 0.5;
        CHECK(adjacency_mse(Matrix::Zero(2, 2), est) == doctest::Approx(0.0625));
    }

    TEST_CASE("uniform off-diagonal offset") {
        Matrix est = Matrix::Constant(20, 20, 0.01);
        est.diagonal().setZero();
        CHECK(adjacency_mse(Matrix::Zero(20, 20), est) == doctest::Approx(9.5e-5).epsilon(1e-12));
    }

    TEST_CASE("shape mismatch") { CHECK_THROWS_AS(adjacency_mse(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), DimensionError); }
}

TEST_SUITE("dtv_coefficients") {
    TEST_CASE("constant rows give zero") { CHECK(dtv_coefficients(Matrix::Constant(3, 4, 2.5)).isZero(0.0)); }

    TEST_CASE("one-sided positive part") {
        const Matrix y = (Matrix(2, 1) << 3.0, 1.0).finished();
        const Matrix d = dtv_coefficients(y);
        CHECK(d(0, 1) == 2.0);
        CHECK(d(1, 0) == 0.0);
    }

    TEST_CASE("positive homogeneity") {
        Rng rng(2);
        Matrix y(4, 6);
        std::normal_distribution<double> g;
        for (auto& v : y.reshaped()) v = g(rng);
        CHECK((dtv_coefficients(2.0 * y) - 2.0 * dtv_coefficients(y)).norm() < 1e-12);
    }
}

TEST_SUITE("objective_value") {
    TEST_CASE("ground truth on noise-free data") {
        Rng rng(3);
        const Noiseless d = noiseless_init_data(5, 2, rng);
        CHECK(objective_value(d.a, d.z, d.y, {RegularizerKind::L1, 0.0}) < 1e-24);
    }

    TEST_CASE("zero matrix gives the raw residual") {
        Rng rng(4);
        const Noiseless d = noiseless_init_data(4, 2, rng);
        CHECK(objective_value(Matrix::Zero(4, 4), d.z, d.y, {RegularizerKind::Dtv, 0.0}) ==
              doctest::Approx((d.y - d.z).squaredNorm()));
    }

    TEST_CASE("never negative for feasible inputs") {
        Rng rng(5);
        for (int k = 0; k < 20; ++k) {
            const Noiseless d = noiseless_init_data(5, 3, rng);
            const auto a = random_upper(5, rng);
            CHECK(objective_value(a.weights(), d.z, d.y, {RegularizerKind::L1, 0.3}) >= 0.0);
            CHECK(objective_value(a.weights(), d.z, d.y, {RegularizerKind::Dtv, 0.3}) >= 0.0);
        }
    }
}

TEST_SUITE("estimate_adjacency") {
    TEST_CASE("uncoupled data gives the zero graph") {
        Rng rng(6);
        const Matrix z = Matrix::Identity(4, 4) * 0.7;
        const SolveResult r = estimate_adjacency(z, z, {RegularizerKind::L1, 1e-3}, strict());
        CHECK(r.adjacency.weights().isZero(0.0));
    }

    TEST_CASE("an overwhelming penalty gives the zero graph") {
        Rng rng(7);
        const Noiseless d = noiseless_init_data(6, 3, rng);
        CHECK(estimate_adjacency(d.z, d.y, {RegularizerKind::L1, 1e9}, strict()).adjacency.weights().isZero(0.0));
        CHECK(estimate_adjacency(d.z, d.y, {RegularizerKind::Dtv, 1e9}, strict()).adjacency.weights().isZero(0.0));
    }

    TEST_CASE("exact recovery from the initialization schedule") {
        Rng rng(8);
        for (std::size_t n : {5u, 10u}) {
            for (int k = 0; k < 5; ++k) {
                const Noiseless d = noiseless_init_data(n, 3, rng);
                const SolveResult r = estimate_adjacency(d.z, d.y, {RegularizerKind::L1, 1e-8}, SolverSettings{});
                CHECK(adjacency_mse(d.a, r.adjacency.weights()) < 1e-10);
            }
        }
    }

    TEST_CASE("single free variable matches a grid search") {
        Rng rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t t = 6;
            Matrix z(2, t);
            for (auto& v : z.reshaped()) v = u(rng);
            Matrix a = Matrix::Zero(2, 2);
            a(0, 1) = u(rng);
            std::normal_distribution<double> noise(0.0, 0.05);
            Matrix y = (Matrix::Identity(2, 2) - a).inverse() * z;
            for (auto& v : y.reshaped()) v += noise(rng);
            const RegularizerSpec reg{trial % 2 ? RegularizerKind::Dtv : RegularizerKind::L1, 0.2 * u(rng)};

            const double weight = reg.kind == RegularizerKind::L1 ? 1.0 : dtv_coefficients(y)(0, 1);
            const Eigen::RowVectorXd r0 = y.row(0) - z.row(0);
            const double syy = y.row(1).squaredNorm();
            const double sry = r0.dot(y.row(1));
            double best = 0.0;
            double best_f = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 200000; ++k) {
                const double v = k * 1e-5;
                const double f = v * v * syy - 2.0 * v * sry + reg.lambda * weight * v;
                if (f < best_f) {
                    best_f = f;
                    best = v;
                }
            }
            const SolveResult r = estimate_adjacency(z, y, reg, strict());
            CHECK(std::abs(r.adjacency(0, 1) - best) < 1e-4);
            CHECK(r.adjacency(1, 0) == 0.0);
        }
    }

    TEST_CASE("objective trace never increases") {
        Rng rng(10);
        for (bool accelerated : {true, false}) {
            for (int k = 0; k < 10; ++k) {
                const Noiseless d = noiseless_init_data(8, 3, rng);
                Matrix y = d.y;
                std::normal_distribution<double> noise(0.0, 0.05);
                for (auto& v : y.reshaped()) v += noise(rng);
                SolverSettings s = strict();
                s.accelerated = accelerated;
                s.record_trace = true;
                const SolveResult r = estimate_adjacency(d.z, y, {RegularizerKind::L1, 0.01}, s);
                REQUIRE(r.trace.size() >= 2);
                for (std::size_t i = 1; i < r.trace.size(); ++i) {
                    CHECK(r.trace[i].objective <= r.trace[i - 1].objective * (1.0 + 1e-12) + 1e-12);
                }
            }
        }
    }

    TEST_CASE("returned estimates are exactly feasible") {
        Rng rng(11);
        const Noiseless d = noiseless_init_data(6, 2, rng);
        Matrix y = d.y;
        std::normal_distribution<double> noise(0.0, 0.2);
        for (auto& v : y.reshaped()) v += noise(rng);
        const Matrix upper = estimate_adjacency(d.z, y, {RegularizerKind::L1, 1e-3}, strict()).adjacency.weights();
        CHECK(upper.minCoeff() >= 0.0);
        CHECK(Matrix(upper.triangularView<Eigen::Lower>()).isZero(0.0));
        SolverSettings cyclic = strict();
        cyclic.feasible_set = FeasibleSet::NonnegZeroDiagonal;
        const Matrix general = estimate_adjacency(d.z, y, {RegularizerKind::Dtv, 1e-3}, cyclic).adjacency.weights();
        CHECK(general.minCoeff() >= 0.0);
        CHECK(general.diagonal().isZero(0.0));
    }

    TEST_CASE("zero-diagonal mode recovers a cyclic graph") {
        Matrix a = Matrix::Zero(3, 3);
        a(0, 1) = 0.3;
        a(1, 2) = 0.4;
        a(2, 0) = 0.2;
        const AdjacencyMatrix truth(a, StructureMode::GeneralDirected);
        Rng rng(12);
        Matrix z(3, 8);
        for (auto& v : z.reshaped()) v = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
        Matrix y(3, 8);
        for (Eigen::Index t = 0; t < 8; ++t) y.col(t) = solve_sem(truth, z.col(t));
        SolverSettings s = strict();
        s.feasible_set = FeasibleSet::NonnegZeroDiagonal;
        const SolveResult r = estimate_adjacency(z, y, {RegularizerKind::Dtv, 1e-9}, s);
        CHECK(r.adjacency.mode() == StructureMode::GeneralDirected);
        CHECK(adjacency_mse(a, r.adjacency.weights()) < 1e-10);
        CHECK_FALSE(r.rescaled);
    }

    TEST_CASE("spectral radius at or above one is rescaled") {
        Matrix a = Matrix::Zero(2, 2);
        a(0, 1) = 2.0;
        a(1, 0) = 2.0;
        const Matrix z = (Matrix(2, 3) << 1.0, 0.0, 0.5, 0.0, 1.0, 0.2).finished();
        const Matrix y = (Matrix::Identity(2, 2) - a).inverse() * z;
        SolverSettings s = strict();
        s.feasible_set = FeasibleSet::NonnegZeroDiagonal;
        const SolveResult r = estimate_adjacency(z, y, {RegularizerKind::L1, 0.0}, s);
        CHECK(r.rescaled);
        CHECK(spectral_radius(r.adjacency.weights()) <= 1.0 - 1e-6 + 1e-12);
    }

    TEST_CASE("streaming and batch data agree") {
        Rng rng(13);
        const Noiseless d = noiseless_init_data(5, 2, rng);
        RegressionData streamed(5);
        for (Eigen::Index t = 0; t < d.z.cols(); ++t) streamed.append(d.z.col(t), d.y.col(t));
        const RegressionData batch = RegressionData::from_history(d.z, d.y);
        CHECK(streamed.columns() == 5);
        CHECK((streamed.dtv() - dtv_coefficients(d.y)).norm() < 1e-12);
        const Matrix gram_streamed = streamed.factor().transpose() * streamed.factor();
        const Matrix gram_batch = batch.factor().transpose() * batch.factor();
        CHECK((gram_streamed - gram_batch).norm() < 1e-10);
    }

    TEST_CASE("warm start reaches the same minimizer") {
        Rng rng(14);
        const Noiseless d = noiseless_init_data(6, 3, rng);
        Matrix y = d.y;
        std::normal_distribution<double> noise(0.0, 0.05);
        for (auto& v : y.reshaped()) v += noise(rng);
        const RegularizerSpec reg{RegularizerKind::L1, 0.01};
        const SolveResult cold = estimate_adjacency(d.z, y, reg, strict());
        const Matrix start = d.a;
        const SolveResult warm = estimate_adjacency(d.z, y, reg, strict(), &start);
        CHECK(std::abs(cold.objective - warm.objective) <= 1e-8 * std::max(1.0, cold.objective));
    }

    TEST_CASE("invalid inputs") {
        Matrix z = Matrix::Identity(2, 2);
        Matrix y = z;
        y(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(estimate_adjacency(z, y, {RegularizerKind::L1, 0.1}, SolverSettings{}), DataError);
        CHECK_THROWS_AS(estimate_adjacency(z, Matrix::Identity(3, 3), {RegularizerKind::L1, 0.1}, SolverSettings{}),
                        DimensionError);
        CHECK_THROWS_AS(estimate_adjacency(z, z, {RegularizerKind::L1, -1.0}, SolverSettings{}), ParameterError);
    }

    TEST_CASE("iteration cap reports non-convergence") {
        Rng rng(15);
        const Noiseless d = noiseless_init_data(8, 3, rng);
        SolverSettings s;
        s.max_iterations = 2;
        s.accelerated = false;
        const SolveResult r = estimate_adjacency(d.z, d.y, {RegularizerKind::L1, 1e-8}, s);
        CHECK_FALSE(r.converged);
        CHECK(r.iterations == 2);
    }
}

TEST_SUITE("trace output") {
    TEST_CASE("trace CSV has a header and one row per point") {
        const std::vector<TracePoint> trace{{1, 2.5, 0.1}, {2, 2.0, 0.1}};
        const auto dir = scratch_dir("trace");
        write_trace_csv(trace, dir / "trace.csv");
        std::ifstream in(dir / "trace.csv");
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(in, line)) lines.push_back(line);
        REQUIRE(lines.size() == 3);
        CHECK(lines[0] == "iteration,objective,step");
        CHECK(lines[1] == "1,2.5,0.1");
    }
}
