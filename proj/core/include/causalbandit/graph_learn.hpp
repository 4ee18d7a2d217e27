#pragma once

// Online estimation of the adjacency matrix from SEM feedback:
//
//   minimize  ||Y - A Y - Z||_F^2 + g(A)   subject to A >= 0 and a support mask
//
// with g either lambda * ||A||_1 or the directed total variation
// lambda * sum_ij A[i,j] * sum_k [Y[i,k] - Y[j,k]]^+. Both penalties are linear
// on the nonnegative orthant, so the solver is projected (accelerated)
// proximal gradient with a closed-form prox.

#include <causalbandit/sem_core.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace causalbandit {

enum class RegularizerKind { L1, Dtv };

struct RegularizerSpec {
    RegularizerKind kind = RegularizerKind::L1;
    double lambda = 0.0;

    void validate() const;
};

enum class FeasibleSet {
    // A[i, j] >= 0 and A[i, j] = 0 for i >= j (DAG in index order).
    NonnegStrictUpper,
    // A[i, j] >= 0 and zero diagonal; admits cyclic graphs.
    NonnegZeroDiagonal,
};

struct SolverSettings {
    int max_iterations = 5000;
    // Relative objective change that ends the iteration.
    double tolerance = 1e-9;
    FeasibleSet feasible_set = FeasibleSet::NonnegStrictUpper;
    // Nesterov momentum with objective-based restart. The iterate sequence
    // stays monotone either way; plain mode is kept for diagnostics.
    bool accelerated = true;
    bool record_trace = false;

    void validate() const;
};

struct TracePoint {
    int iteration = 0;
    double objective = 0.0;
    double step = 0.0;
};

struct SolveResult {
    AdjacencyMatrix adjacency;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
    // Spectral radius was pushed below one to keep (I - A) invertible.
    bool rescaled = false;
    std::vector<TracePoint> trace;
};

// Streaming summary of (Z, Y) sufficient for the solver: the upper-triangular
// factor R of the stacked data [Y; Z]^T (so [Y; Z][Y; Z]^T = R^T R), kept up to
// date with Givens rotations, plus the accumulated DTV coefficients. The
// residual is evaluated as ||[(I - A), -I] R^T||_F, which avoids the
// cancellation of expanding the Gram matrices.
class RegressionData {
public:
    RegressionData() = default;
    explicit RegressionData(std::size_t n_arms);

    static RegressionData from_history(const Matrix& z, const Matrix& y);

    void append(const Vector& z, const Vector& y);

    std::size_t size() const { return n_; }
    std::size_t columns() const { return columns_; }
    const Matrix& factor() const { return factor_; }
    const Matrix& dtv() const { return dtv_; }

private:
    std::size_t n_ = 0;
    std::size_t columns_ = 0;
    Matrix factor_;
    Matrix dtv_;
};

SolveResult estimate_adjacency(const RegressionData& data, const RegularizerSpec& reg,
                               const SolverSettings& settings, const Matrix* warm_start = nullptr);

SolveResult estimate_adjacency(const Matrix& z, const Matrix& y, const RegularizerSpec& reg,
                               const SolverSettings& settings, const Matrix* warm_start = nullptr);

// (1 / N^2) * ||A - A_hat||_F^2
double adjacency_mse(const Matrix& truth, const Matrix& estimate);
double adjacency_mse(const AdjacencyMatrix& truth, const AdjacencyMatrix& estimate);

// d[i, j] = sum_k max(Y[i, k] - Y[j, k], 0)
Matrix dtv_coefficients(const Matrix& y);

// Residual energy plus penalty, evaluated directly on (Z, Y).
double objective_value(const Matrix& a, const Matrix& z, const Matrix& y, const RegularizerSpec& reg);

// Columns: iteration, objective, step.
void write_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& path);

double spectral_radius(const Matrix& a);

}  // namespace causalbandit
