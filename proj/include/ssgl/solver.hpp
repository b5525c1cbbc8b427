#pragma once

#include "ssgl/dataset.hpp"
#include "ssgl/graph.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace ssgl {

/// n x K, one row per sample, one column per class.
using Matrix = Eigen::MatrixXd;

enum class LinearSolver {
    automatic,  // dense Cholesky up to dense_limit nodes, conjugate gradient above
    dense,
    cg,
};

struct SolverConfig {
    double lambda = 1.0;  // Laplacian smoothness weight
    double gamma = 1.0;   // pull of Y back towards the initial labels; must be > 0
    double alpha = 0.0;   // severity-loss weight
    /// Per-class severity weights. Empty means "class index" (0, 1, 2, ...).
    std::vector<double> severity_weights;
    double threshold = 0.5;  // binary decision threshold on the normalized positive score
    double tol = 1e-6;
    std::size_t max_iter = 1000;
    bool clamp_labeled = false;
    LaplacianKind laplacian_kind = LaplacianKind::unnormalized;
    LinearSolver linear_solver = LinearSolver::automatic;
    std::size_t dense_limit = 512;
    unsigned threads = 1;  // class columns solved concurrently; 0 = hardware concurrency

    void validate() const;
};

/// Y0 holds one-hot rows for labeled samples and zero rows otherwise; Y is the
/// iterate that the alternation moves.
struct LabelMatrix {
    Matrix initial;
    Matrix current;
};

struct SolveReport {
    std::size_t iterations = 0;
    double final_residual = 0;            // max |Y_t - Y_{t-1}| of the last iteration
    std::vector<double> objective_trace;  // J after each full F/Y sweep
    std::vector<double> residual_trace;
    bool converged = false;
};

struct FitResult {
    Matrix scores;  // F
    LabelMatrix labels;
    SolveReport report;
};

struct PredictResult {
    std::vector<Prediction> classes;
    /// Binary problems only: F1 / (F0 + F1), empty for indeterminate rows.
    std::vector<std::optional<double>> positive_score;
};

LabelMatrix init_label_matrix(std::size_t n, std::size_t num_classes,
                              std::span<const std::pair<std::size_t, std::size_t>> labeled);

/// w_i for every row: the severity weight of the row's labeled class, 0 for unlabeled rows.
/// A row counts as labeled when any entry of Y0 is nonzero; its class is the row argmax.
std::vector<double> row_weights(const Matrix& initial, const SolverConfig& config);

/// sum_i w_i * ||Y_i - F_i||^2
double dr_loss(const Matrix& scores, const Matrix& labels, std::span<const double> weights);

/// Joint objective
///   ||Y - F||^2 + lambda tr(F' L F) + alpha sum_i w_i ||Y_i - F_i||^2 + gamma ||Y - Y0||^2
/// whose exact block minimizers are f_step and y_step.
double objective(const Matrix& scores, const Matrix& labels, const Matrix& initial,
                 const Laplacian& lap, std::span<const double> weights, const SolverConfig& config);

/// Solves (I + alpha D_w + lambda L) F = (I + alpha D_w) Y.
/// The factorization (dense) or preconditioner (cg) is built once and reused.
class FStepSolver {
public:
    FStepSolver(const Laplacian& lap, std::span<const double> weights, const SolverConfig& config);

    /// `warm` seeds the conjugate-gradient iterate; ignored by the dense path.
    Matrix solve(const Matrix& labels, const Matrix* warm = nullptr) const;

    bool uses_dense() const noexcept { return dense_; }

private:
    void apply(std::span<const double> x, std::span<double> y) const;
    Eigen::VectorXd solve_cg(const Eigen::VectorXd& rhs, const Eigen::VectorXd& start) const;

    SparseMatrix lap_;
    std::vector<double> diag_shift_;  // 1 + alpha w_i
    double lambda_;
    double tol_;
    unsigned threads_;
    bool dense_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd jacobi_;
};

Matrix f_step(const Matrix& labels, const Laplacian& lap, std::span<const double> weights,
              const SolverConfig& config);

/// Row-wise closed form Y_i = ((1 + alpha w_i) F_i + gamma Y0_i) / (1 + alpha w_i + gamma).
/// With clamp_labeled, labeled rows are reset to Y0 instead.
Matrix y_step(const Matrix& scores, const Matrix& initial, std::span<const double> weights,
              const SolverConfig& config);

/// Alternates f_step and y_step from Y = Y0 until max |Y_t - Y_{t-1}| < tol.
FitResult fit(const SimilarityGraph& graph, const Matrix& initial, const SolverConfig& config);

/// Dense direct solve of the joint stationarity system in (F, Y) at once.
/// Test oracle for fit(); limited to 1000 nodes.
Matrix fixed_point_oracle(const SimilarityGraph& graph, const Matrix& initial, const SolverConfig& config);

/// K > 2: row argmax (lowest index on ties). K = 2: class 1 iff F1/(F0+F1) >= threshold.
/// Rows without evidence are indeterminate.
PredictResult predict(const Matrix& scores, const SolverConfig& config);

std::string to_string(LinearSolver s);
LinearSolver parse_linear_solver(std::string_view s);

}  // namespace ssgl
