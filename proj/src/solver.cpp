#include "ssgl/solver.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssgl {

void SolverConfig::validate() const {
    if (!(lambda >= 0) || !std::isfinite(lambda)) throw Error("lambda must be >= 0");
    if (!(gamma > 0) || !std::isfinite(gamma)) throw Error("gamma must be > 0");
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw Error("alpha must be >= 0");
    for (double w : severity_weights) {
        if (!(w >= 0) || !std::isfinite(w)) throw Error("severity weights must be >= 0");
    }
    if (!(threshold > 0 && threshold < 1)) throw Error("threshold must be in (0, 1)");
    if (!(tol > 0) || !std::isfinite(tol)) throw Error("tol must be > 0");
    if (max_iter == 0) throw Error("max_iter must be >= 1");
}

LabelMatrix init_label_matrix(std::size_t n, std::size_t num_classes,
                              std::span<const std::pair<std::size_t, std::size_t>> labeled) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(num_classes));
    std::vector<char> taken(n, 0);
    for (const auto& [row, cls] : labeled) {
        if (row >= n) throw Error("label matrix: row " + std::to_string(row) + " out of range");
        if (cls >= num_classes) throw Error("label matrix: class " + std::to_string(cls) + " out of range");
        if (taken[row]) throw Error("label matrix: duplicate assignment for row " + std::to_string(row));
        taken[row] = 1;
        y(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(cls)) = 1.0;
    }
    return {y, y};
}

std::vector<double> row_weights(const Matrix& initial, const SolverConfig& config) {
    const auto k = static_cast<std::size_t>(initial.cols());
    if (!config.severity_weights.empty() && config.severity_weights.size() != k) {
        throw Error("severity weights: expected " + std::to_string(k) + " values, got " +
                    std::to_string(config.severity_weights.size()));
    }
    std::vector<double> w(static_cast<std::size_t>(initial.rows()), 0.0);
    for (Eigen::Index i = 0; i < initial.rows(); ++i) {
        if ((initial.row(i).array() == 0.0).all()) continue;
        Eigen::Index cls = 0;
        initial.row(i).maxCoeff(&cls);
        const auto c = static_cast<std::size_t>(cls);
        w[static_cast<std::size_t>(i)] =
            config.severity_weights.empty() ? static_cast<double>(c) : config.severity_weights[c];
    }
    return w;
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(std::string(what) + ": shape mismatch");
}

void check_rows(const Matrix& a, std::size_t n, const char* what) {
    if (static_cast<std::size_t>(a.rows()) != n) throw Error(std::string(what) + ": row count mismatch");
}

double quadratic_form(const SparseMatrix& lap, const Matrix& f) {
    double total = 0;
    std::vector<double> x(lap.n), y(lap.n);
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
        for (std::size_t i = 0; i < lap.n; ++i) x[i] = f(static_cast<Eigen::Index>(i), c);
        lap.multiply(x, y);
        for (std::size_t i = 0; i < lap.n; ++i) total += x[i] * y[i];
    }
    return total;
}

Eigen::MatrixXd dense_laplacian(const SparseMatrix& lap) {
    const auto n = static_cast<Eigen::Index>(lap.n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < lap.n; ++r) {
        for (auto p = lap.row_ptr[r]; p < lap.row_ptr[r + 1]; ++p) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(lap.cols[p])) = lap.values[p];
        }
    }
    return m;
}

}  // namespace

double dr_loss(const Matrix& scores, const Matrix& labels, std::span<const double> weights) {
    check_same_shape(scores, labels, "dr_loss");
    check_rows(scores, weights.size(), "dr_loss");
    double total = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        if (w < 0) throw Error("dr_loss: negative weight");
        if (w == 0) continue;
        total += w * (labels.row(i) - scores.row(i)).squaredNorm();
    }
    return total;
}

double objective(const Matrix& scores, const Matrix& labels, const Matrix& initial,
                 const Laplacian& lap, std::span<const double> weights, const SolverConfig& config) {
    check_same_shape(scores, labels, "objective");
    check_same_shape(labels, initial, "objective");
    check_rows(scores, lap.matrix.n, "objective");
    return (labels - scores).squaredNorm() + config.lambda * quadratic_form(lap.matrix, scores) +
           config.alpha * dr_loss(scores, labels, weights) +
           config.gamma * (labels - initial).squaredNorm();
}

FStepSolver::FStepSolver(const Laplacian& lap, std::span<const double> weights, const SolverConfig& config)
    : lap_(lap.matrix),
      diag_shift_(weights.size()),
      lambda_(config.lambda),
      tol_(config.tol),
      threads_(config.threads) {
    if (weights.size() != lap.matrix.n) throw Error("f_step: weight count does not match node count");
    for (std::size_t i = 0; i < weights.size(); ++i) diag_shift_[i] = 1.0 + config.alpha * weights[i];

    dense_ = config.linear_solver == LinearSolver::dense ||
             (config.linear_solver == LinearSolver::automatic && lap_.n <= config.dense_limit);
    const auto n = static_cast<Eigen::Index>(lap_.n);
    if (dense_) {
        Eigen::MatrixXd a = lambda_ * dense_laplacian(lap_);
        for (Eigen::Index i = 0; i < n; ++i) a(i, i) += diag_shift_[static_cast<std::size_t>(i)];
        llt_.compute(a);
        if (llt_.info() != Eigen::Success) throw Error("f_step: system matrix is not positive definite");
    } else {
        const auto d = lap_.diagonal();
        jacobi_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            jacobi_(i) = 1.0 / (diag_shift_[static_cast<std::size_t>(i)] + lambda_ * d[static_cast<std::size_t>(i)]);
        }
    }
}

void FStepSolver::apply(std::span<const double> x, std::span<double> y) const {
    lap_.multiply(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = diag_shift_[i] * x[i] + lambda_ * y[i];
}

Eigen::VectorXd FStepSolver::solve_cg(const Eigen::VectorXd& rhs, const Eigen::VectorXd& start) const {
    const auto n = rhs.size();
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0) return Eigen::VectorXd::Zero(n);
    auto as_span = [](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), static_cast<std::size_t>(v.size())); };

    Eigen::VectorXd x = start;
    Eigen::VectorXd ap(n);
    apply(as_span(x), {ap.data(), static_cast<std::size_t>(n)});
    Eigen::VectorXd r = rhs - ap;
    Eigen::VectorXd z = jacobi_.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const std::size_t cap = std::max<std::size_t>(1000, 10 * static_cast<std::size_t>(n));
    for (std::size_t it = 0; it < cap; ++it) {
        if (r.norm() <= tol_ * rhs_norm) return x;
        apply(as_span(p), {ap.data(), static_cast<std::size_t>(n)});
        const double step = rz / p.dot(ap);
        x += step * p;
        r -= step * ap;
        z = jacobi_.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    if (r.norm() <= tol_ * rhs_norm) return x;
    throw Error("f_step: conjugate gradient did not converge (relative residual " +
                format_real(r.norm() / rhs_norm) + ")");
}

Matrix FStepSolver::solve(const Matrix& labels, const Matrix* warm) const {
    check_rows(labels, lap_.n, "f_step");
    const auto n = labels.rows();
    Matrix rhs = labels;
    for (Eigen::Index i = 0; i < n; ++i) rhs.row(i) *= diag_shift_[static_cast<std::size_t>(i)];
    if (dense_) return llt_.solve(rhs);

    Matrix out(n, labels.cols());
    detail::parallel_for(static_cast<std::size_t>(labels.cols()), threads_, [&](std::size_t c) {
        const auto col = static_cast<Eigen::Index>(c);
        const Eigen::VectorXd start =
            warm != nullptr ? Eigen::VectorXd(warm->col(col)) : Eigen::VectorXd::Zero(n);
        out.col(col) = solve_cg(rhs.col(col), start);
    });
    return out;
}

Matrix f_step(const Matrix& labels, const Laplacian& lap, std::span<const double> weights,
              const SolverConfig& config) {
    config.validate();
    return FStepSolver(lap, weights, config).solve(labels);
}

Matrix y_step(const Matrix& scores, const Matrix& initial, std::span<const double> weights,
              const SolverConfig& config) {
    if (!(config.gamma > 0)) throw Error("gamma must be > 0");
    check_same_shape(scores, initial, "y_step");
    check_rows(scores, weights.size(), "y_step");
    Matrix y(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const bool labeled = !(initial.row(i).array() == 0.0).all();
        if (config.clamp_labeled && labeled) {
            y.row(i) = initial.row(i);
            continue;
        }
        const double fit_weight = 1.0 + config.alpha * weights[static_cast<std::size_t>(i)];
        y.row(i) = (fit_weight * scores.row(i) + config.gamma * initial.row(i)) / (fit_weight + config.gamma);
    }
    return y;
}

FitResult fit(const SimilarityGraph& graph, const Matrix& initial, const SolverConfig& config) {
    config.validate();
    check_rows(initial, graph.size(), "fit");
    if (initial.cols() < 1) throw Error("fit: label matrix has no columns");
    const auto lap = laplacian(graph, config.laplacian_kind);
    const auto weights = row_weights(initial, config);
    const FStepSolver solver(lap, weights, config);

    FitResult result;
    result.labels.initial = initial;
    Matrix y = initial;
    Matrix f;
    auto& report = result.report;
    for (std::size_t it = 1; it <= config.max_iter; ++it) {
        f = solver.solve(y, it > 1 ? &f : nullptr);
        Matrix next = y_step(f, initial, weights, config);
        const double residual = (next - y).cwiseAbs().maxCoeff();
        y = std::move(next);
        report.iterations = it;
        report.final_residual = residual;
        report.residual_trace.push_back(residual);
        report.objective_trace.push_back(objective(f, y, initial, lap, weights, config));
        if (residual < config.tol) {
            report.converged = true;
            break;
        }
    }
    result.scores = std::move(f);
    result.labels.current = std::move(y);
    return result;
}

Matrix fixed_point_oracle(const SimilarityGraph& graph, const Matrix& initial, const SolverConfig& config) {
    config.validate();
    const auto n = graph.size();
    check_rows(initial, n, "oracle");
    if (n > 1000) throw Error("oracle: dense solve limited to 1000 nodes");
    const auto lap = dense_laplacian(laplacian(graph, config.laplacian_kind).matrix);
    const auto weights = row_weights(initial, config);
    const auto N = static_cast<Eigen::Index>(n);

    // Unknowns [F; Y]. Rows 0..n-1: dJ/dF = 0, rows n..2n-1: dJ/dY = 0.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(2 * N, initial.cols());
    h.topLeftCorner(N, N) = config.lambda * lap;
    for (Eigen::Index i = 0; i < N; ++i) {
        const double b = 1.0 + config.alpha * weights[static_cast<std::size_t>(i)];
        const bool labeled = !(initial.row(i).array() == 0.0).all();
        h(i, i) += b;
        h(i, N + i) = -b;
        if (config.clamp_labeled && labeled) {
            h(N + i, N + i) = 1.0;
            rhs.row(N + i) = initial.row(i);
        } else {
            h(N + i, i) = -b;
            h(N + i, N + i) = b + config.gamma;
            rhs.row(N + i) = config.gamma * initial.row(i);
        }
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(h);
    if (!(lu.rcond() > 1e-14)) throw Error("oracle: singular stationarity system");
    const Eigen::MatrixXd solution = lu.solve(rhs);
    return solution.topRows(N);
}

PredictResult predict(const Matrix& scores, const SolverConfig& config) {
    PredictResult out;
    const auto k = scores.cols();
    out.classes.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        if (k == 2) {
            const double sum = scores(i, 0) + scores(i, 1);
            if (sum == 0 || !std::isfinite(sum)) {
                out.classes.emplace_back(std::nullopt);
                out.positive_score.emplace_back(std::nullopt);
                continue;
            }
            const double p = scores(i, 1) / sum;
            out.classes.emplace_back(p >= config.threshold ? 1 : 0);
            out.positive_score.emplace_back(p);
            continue;
        }
        if ((scores.row(i).array() == 0.0).all()) {
            out.classes.emplace_back(std::nullopt);
            continue;
        }
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < k; ++c) {
            if (scores(i, c) > scores(i, best)) best = c;
        }
        out.classes.emplace_back(static_cast<std::size_t>(best));
    }
    return out;
}

std::string to_string(LinearSolver s) {
    switch (s) {
        case LinearSolver::automatic: return "auto";
        case LinearSolver::dense: return "dense";
        case LinearSolver::cg: return "cg";
    }
    return "?";
}

LinearSolver parse_linear_solver(std::string_view s) {
    if (s == "auto") return LinearSolver::automatic;
    if (s == "dense") return LinearSolver::dense;
    if (s == "cg") return LinearSolver::cg;
    throw Error("unknown linear solver '" + std::string(s) + "'");
}

}  // namespace ssgl
