#include <causalbandit/graph_learn.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace causalbandit {

namespace {

// Consecutive accepted iterations below tolerance needed to stop; a single
// small decrease right after a momentum restart is not convergence.
constexpr int kStallIterations = 3;
constexpr double kRescaleMargin = 1e-6;

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix support_mask(std::size_t n, FeasibleSet set) {
    const auto size = static_cast<Eigen::Index>(n);
    Matrix mask = Matrix::Zero(size, size);
    for (Eigen::Index i = 0; i < size; ++i) {
        for (Eigen::Index j = 0; j < size; ++j) {
            const bool allowed = set == FeasibleSet::NonnegStrictUpper ? j > i : j != i;
            if (allowed) mask(i, j) = 1.0;
        }
    }
    return mask;
}

// Residual and gradient of ||Y - A Y - Z||^2 expressed through the factor R.
class SmoothTerm {
public:
    explicit SmoothTerm(const Matrix& factor)
        : n_(factor.cols() / 2),
          ry_t_(factor.leftCols(n_).transpose()),
          rz_t_(factor.rightCols(n_).transpose()) {}

    // E = (I - A) Ry^T - Rz^T, an N x 2N matrix with ||E||_F = residual norm.
    Matrix residual(const Matrix& a) const { return ry_t_ - a * ry_t_ - rz_t_; }

    double value(const Matrix& a) const { return residual(a).squaredNorm(); }

    Matrix gradient(const Matrix& residual_at_a) const {
        return -2.0 * residual_at_a * ry_t_.transpose();
    }

    double lipschitz() const {
        if (ry_t_.cols() == 0) return 0.0;
        const Matrix gram = ry_t_ * ry_t_.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        return 2.0 * eig.eigenvalues().maxCoeff();
    }

private:
    Eigen::Index n_;
    Matrix ry_t_;
    Matrix rz_t_;
};

}  // namespace

void RegularizerSpec::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be finite and nonnegative");
}

void SolverSettings::validate() const {
    if (max_iterations < 1) throw ParameterError("max_iterations must be at least 1");
    if (!(tolerance > 0.0)) throw ParameterError("solver tolerance must be positive");
}

// ---------------------------------------------------------------------------
// RegressionData

RegressionData::RegressionData(std::size_t n_arms)
    : n_(n_arms),
      factor_(Matrix::Zero(static_cast<Eigen::Index>(2 * n_arms), static_cast<Eigen::Index>(2 * n_arms))),
      dtv_(Matrix::Zero(static_cast<Eigen::Index>(n_arms), static_cast<Eigen::Index>(n_arms))) {}

RegressionData RegressionData::from_history(const Matrix& z, const Matrix& y) {
    if (z.rows() != y.rows() || z.cols() != y.cols()) throw DimensionError("Z and Y must have equal shapes");
    RegressionData data(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index k = 0; k < y.cols(); ++k) data.append(z.col(k), y.col(k));
    return data;
}

void RegressionData::append(const Vector& z, const Vector& y) {
    const auto n = static_cast<Eigen::Index>(n_);
    if (z.size() != n || y.size() != n) throw DimensionError("feedback column has wrong length");
    if (!z.allFinite() || !y.allFinite()) throw DataError("feedback contains non-finite values");

    Vector row(2 * n);
    row << y, z;
    const Eigen::Index width = 2 * n;
    for (Eigen::Index k = 0; k < width; ++k) {
        if (row[k] == 0.0) continue;
        const double diag = factor_(k, k);
        const double h = std::hypot(diag, row[k]);
        const double c = diag / h;
        const double s = row[k] / h;
        for (Eigen::Index j = k; j < width; ++j) {
            const double rkj = factor_(k, j);
            const double wj = row[j];
            factor_(k, j) = c * rkj + s * wj;
            row[j] = -s * rkj + c * wj;
        }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) dtv_(i, j) += std::max(y[i] - y[j], 0.0);
    }
    ++columns_;
}

// ---------------------------------------------------------------------------
// Solver

SolveResult estimate_adjacency(const RegressionData& data, const RegularizerSpec& reg,
                               const SolverSettings& settings, const Matrix* warm_start) {
    reg.validate();
    settings.validate();
    if (data.columns() < 1) throw DataError("graph estimation needs at least one feedback column");
    if (!all_finite(data.factor())) throw DataError("feedback contains non-finite values");

    const std::size_t n = data.size();
    const Matrix mask = support_mask(n, settings.feasible_set);
    const Matrix weights =
        reg.kind == RegularizerKind::L1 ? Matrix(reg.lambda * mask) : Matrix(reg.lambda * data.dtv().cwiseProduct(mask));
    const SmoothTerm smooth(data.factor());

    auto project = [&](const Matrix& a) -> Matrix { return a.cwiseMax(0.0).cwiseProduct(mask); };
    auto penalty = [&](const Matrix& a) { return weights.cwiseProduct(a).sum(); };

    const auto size = static_cast<Eigen::Index>(n);
    Matrix x = Matrix::Zero(size, size);
    if (warm_start != nullptr) {
        if (warm_start->rows() != size || warm_start->cols() != size) throw DimensionError("warm start has wrong shape");
        if (warm_start->allFinite()) x = project(*warm_start);
    }

    double lipschitz = smooth.lipschitz();
    if (!(lipschitz > 0.0)) lipschitz = 1.0;

    SolveResult result;
    double fx = smooth.value(x) + penalty(x);
    Matrix x_prev = x;
    Matrix v = x;
    double theta = 1.0;
    int stalled = 0;
    int iteration = 0;
    for (iteration = 1; iteration <= settings.max_iterations; ++iteration) {
        const Matrix residual_v = smooth.residual(v);
        const double fs_v = residual_v.squaredNorm();
        const Matrix grad = smooth.gradient(residual_v) + weights;

        Matrix candidate;
        double fs_candidate = 0.0;
        for (;;) {
            candidate = project(v - grad / lipschitz);
            const Matrix step = candidate - v;
            fs_candidate = smooth.value(candidate);
            const double model = fs_v + (grad - weights).cwiseProduct(step).sum() + 0.5 * lipschitz * step.squaredNorm();
            if (fs_candidate <= model + 1e-12 * std::max(1.0, fs_v)) break;
            lipschitz *= 2.0;
            if (!std::isfinite(lipschitz)) throw NumericalError("step size collapsed during backtracking");
        }
        const double f_candidate = fs_candidate + penalty(candidate);

        bool accepted = false;
        if (f_candidate <= fx) {
            const double f_before = fx;
            x_prev = x;
            x = candidate;
            fx = f_candidate;
            accepted = true;
            const double change = f_before - fx;
            if (change <= settings.tolerance * std::max(f_before, std::numeric_limits<double>::min())) {
                ++stalled;
            } else {
                stalled = 0;
            }
            if (settings.accelerated) {
                const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
                v = x + ((theta - 1.0) / theta_next) * (x - x_prev);
                theta = theta_next;
            } else {
                v = x;
            }
        } else {
            // Momentum overshot; restart from the best iterate. A rejected
            // plain step means no further descent is representable.
            if (v == x) ++stalled;
            v = x;
            theta = 1.0;
        }

        if (settings.record_trace) result.trace.push_back({iteration, fx, 1.0 / lipschitz});
        if (stalled >= kStallIterations || (accepted && x == x_prev)) {
            result.converged = true;
            break;
        }
    }
    result.iterations = std::min(iteration, settings.max_iterations);
    result.objective = fx;

    StructureMode mode = StructureMode::StrictUpperDag;
    if (settings.feasible_set == FeasibleSet::NonnegZeroDiagonal) {
        mode = StructureMode::GeneralDirected;
        const double radius = spectral_radius(x);
        if (radius >= 1.0 - kRescaleMargin) {
            x *= (1.0 - kRescaleMargin) / radius;
            result.rescaled = true;
            result.objective = smooth.value(x) + penalty(x);
        }
    }
    result.adjacency = AdjacencyMatrix(std::move(x), mode);
    return result;
}

SolveResult estimate_adjacency(const Matrix& z, const Matrix& y, const RegularizerSpec& reg,
                               const SolverSettings& settings, const Matrix* warm_start) {
    if (!z.allFinite() || !y.allFinite()) throw DataError("feedback contains non-finite values");
    return estimate_adjacency(RegressionData::from_history(z, y), reg, settings, warm_start);
}

// ---------------------------------------------------------------------------
// Metrics

double adjacency_mse(const Matrix& truth, const Matrix& estimate) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
        throw DimensionError("adjacency_mse: shape mismatch");
    }
    if (truth.size() == 0) return 0.0;
    const auto n = static_cast<double>(truth.rows());
    return (truth - estimate).squaredNorm() / (n * n);
}

double adjacency_mse(const AdjacencyMatrix& truth, const AdjacencyMatrix& estimate) {
    return adjacency_mse(truth.weights(), estimate.weights());
}

Matrix dtv_coefficients(const Matrix& y) {
    const Eigen::Index n = y.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) d(i, j) += std::max(y(i, k) - y(j, k), 0.0);
        }
    }
    return d;
}

double objective_value(const Matrix& a, const Matrix& z, const Matrix& y, const RegularizerSpec& reg) {
    if (z.rows() != y.rows() || z.cols() != y.cols() || a.rows() != y.rows() || a.cols() != y.rows()) {
        throw DimensionError("objective_value: shape mismatch");
    }
    const double residual = (y - a * y - z).squaredNorm();
    if (reg.kind == RegularizerKind::L1) return residual + reg.lambda * a.cwiseAbs().sum();
    return residual + reg.lambda * a.cwiseProduct(dtv_coefficients(y)).sum();
}

void write_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "iteration,objective,step\n";
    for (const auto& p : trace) out << p.iteration << ',' << format_number(p.objective) << ',' << format_number(p.step) << '\n';
}

double spectral_radius(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> eig(a, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace causalbandit
