#include "ssgl/solver.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ssgl;
using testing_util::max_abs_diff;

namespace {

Matrix col(std::initializer_list<double> v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

SimilarityGraph pair_graph() { return SimilarityGraph(2, {{0, 1, 1.0}}); }

SolverConfig tight() {
    SolverConfig c;
    c.tol = 1e-13;
    c.max_iter = 5000;
    return c;
}

// Stationary point by eliminating F: with B = I + alpha D_w,
//   F = (B + lambda L)^-1 B Y  and  (B + gamma I - B (B + lambda L)^-1 B) Y = gamma Y0.
std::pair<Matrix, Matrix> schur_solution(const SimilarityGraph& g, const Matrix& y0, const SolverConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) {
        const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
        L(i, j) -= e.weight;
        L(j, i) -= e.weight;
        L(i, i) += e.weight;
        L(j, j) += e.weight;
    }
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double w = 0;
        if (!(y0.row(i).array() == 0.0).all()) {
            Eigen::Index c;
            y0.row(i).maxCoeff(&c);
            w = cfg.severity_weights.empty() ? static_cast<double>(c) : cfg.severity_weights[static_cast<std::size_t>(c)];
        }
        b(i) = 1.0 + cfg.alpha * w;
    }
    const Eigen::MatrixXd B = b.asDiagonal();
    const Eigen::MatrixXd A = B + cfg.lambda * L;
    const Eigen::MatrixXd Ainv_B = A.fullPivLu().solve(B);
    const Eigen::MatrixXd S = B + cfg.gamma * Eigen::MatrixXd::Identity(n, n) - B * Ainv_B;
    const Matrix y = S.fullPivLu().solve(cfg.gamma * y0);
    const Matrix f = Ainv_B * y;
    return {f, y};
}

SimilarityGraph random_graph(std::size_t n, std::uint64_t seed, GraphMethod method = GraphMethod::knn) {
    GraphConfig gc;
    gc.method = method;
    gc.k = std::min<std::size_t>(4, n - 1);
    gc.epsilon = 1.2;
    return build_graph(testing_util::gaussian_points(n, 2, seed), gc);
}

}  // namespace

TEST(InitLabelMatrix, Layout) {
    const std::vector<std::pair<std::size_t, std::size_t>> one{{0, 1}};
    const auto y = init_label_matrix(3, 2, one);
    EXPECT_EQ(y.initial, rows({{0, 1}, {0, 0}, {0, 0}}));
    EXPECT_EQ(y.current, y.initial);
    EXPECT_EQ(init_label_matrix(3, 2, {}).initial, Matrix::Zero(3, 2));
    const std::vector<std::pair<std::size_t, std::size_t>> all{{0, 1}, {1, 0}, {2, 1}};
    const auto full = init_label_matrix(3, 2, all);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(full.initial.row(i).sum(), 1.0);
    const std::vector<std::pair<std::size_t, std::size_t>> dup{{0, 1}, {0, 0}};
    EXPECT_THROW(init_label_matrix(3, 2, dup), Error);
    const std::vector<std::pair<std::size_t, std::size_t>> bad{{3, 0}};
    EXPECT_THROW(init_label_matrix(3, 2, bad), Error);
}

TEST(Objective, ConstantColumnsOnConnectedGraph) {
    const auto g = random_graph(12, 1);
    const auto lap = laplacian(g, LaplacianKind::unnormalized);
    Matrix f(12, 2);
    f.col(0).setConstant(0.3);
    f.col(1).setConstant(0.7);
    const std::vector<double> w(12, 0.0);
    EXPECT_NEAR(objective(f, f, f, lap, w, SolverConfig{}), 0.0, 1e-12);
}

TEST(Objective, TwoNodeHandValue) {
    const auto lap = laplacian(pair_graph(), LaplacianKind::unnormalized);
    const Matrix f = col({1, 0});
    const std::vector<double> w{0, 0};
    SolverConfig cfg;
    cfg.alpha = 1;
    EXPECT_DOUBLE_EQ(objective(f, f, f, lap, w, cfg), 1.0);
}

TEST(Objective, QuadraticHomogeneity) {
    const auto g = random_graph(10, 2);
    const auto lap = laplacian(g, LaplacianKind::unnormalized);
    SplitMix64 rng(4);
    Matrix f = Matrix::NullaryExpr(10, 3, [&] { return rng.uniform(); });
    Matrix y = Matrix::NullaryExpr(10, 3, [&] { return rng.uniform(); });
    Matrix y0 = testing_util::random_initial(10, 3, 0.3, rng);
    const std::vector<double> w(10, 1.5);
    SolverConfig cfg;
    cfg.alpha = 0.7;
    cfg.lambda = 2.0;
    EXPECT_NEAR(objective(2 * f, 2 * y, 2 * y0, lap, w, cfg), 4 * objective(f, y, y0, lap, w, cfg), 1e-10);
}

TEST(DrLoss, Examples) {
    const Matrix f = rows({{0, 0}, {0, 0}});
    const Matrix y = rows({{0.1, -0.1}, {1, 1}});
    const std::vector<double> w{2, 0};
    EXPECT_NEAR(dr_loss(f, y, w), 0.04, 1e-15);
    const std::vector<double> zero{0, 0};
    EXPECT_EQ(dr_loss(f, y, zero), 0.0);
    const std::vector<double> some{3, 5};
    EXPECT_EQ(dr_loss(y, y, some), 0.0);
    const std::vector<double> neg{-1, 0};
    EXPECT_THROW(dr_loss(f, y, neg), Error);
}

TEST(RowWeights, DefaultIsClassIndex) {
    const Matrix y0 = rows({{0, 0, 1}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
    EXPECT_EQ(row_weights(y0, SolverConfig{}), (std::vector<double>{2, 0, 0, 1}));
    SolverConfig cfg;
    cfg.severity_weights = {5, 6, 7};
    EXPECT_EQ(row_weights(y0, cfg), (std::vector<double>{7, 0, 5, 6}));
    cfg.severity_weights = {1, 2};
    EXPECT_THROW(row_weights(y0, cfg), Error);
}

TEST(FStep, IdentitySystem) {
    const auto lap = laplacian(random_graph(9, 3), LaplacianKind::unnormalized);
    SolverConfig cfg;
    cfg.lambda = 0;
    SplitMix64 rng(1);
    const Matrix y = Matrix::NullaryExpr(9, 2, [&] { return rng.uniform(); });
    const std::vector<double> w(9, 1.0);
    EXPECT_EQ(f_step(y, lap, w, cfg), y);
}

TEST(FStep, TwoNodeHandSolve) {
    const auto lap = laplacian(pair_graph(), LaplacianKind::unnormalized);
    const std::vector<double> w{0, 0};
    const auto f = f_step(col({1, 0}), lap, w, SolverConfig{});
    EXPECT_NEAR(f(0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(f(1, 0), 1.0 / 3.0, 1e-15);
}

TEST(FStep, IsolatedNodeKeepsItsRow) {
    const SimilarityGraph g(3, {{0, 1, 0.8}});
    const auto lap = laplacian(g, LaplacianKind::unnormalized);
    SolverConfig cfg;
    cfg.lambda = 17;
    const std::vector<double> w{0, 0, 0};
    const auto f = f_step(rows({{1, 0}, {0, 0}, {0.25, 0.75}}), lap, w, cfg);
    EXPECT_EQ(f(2, 0), 0.25);
    EXPECT_EQ(f(2, 1), 0.75);
}

TEST(FStep, ConjugateGradientMatchesDenseFactorization) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = random_graph(60, seed);
        SplitMix64 rng(seed);
        const Matrix y0 = testing_util::random_initial(60, 3, 0.2, rng);
        SolverConfig cfg;
        cfg.alpha = 1.0;
        cfg.lambda = 3.0;
        cfg.tol = 1e-13;
        const auto lap = laplacian(g, LaplacianKind::unnormalized);
        const auto w = row_weights(y0, cfg);
        cfg.linear_solver = LinearSolver::dense;
        const Matrix dense = f_step(y0, lap, w, cfg);
        cfg.linear_solver = LinearSolver::cg;
        const Matrix cg = f_step(y0, lap, w, cfg);
        EXPECT_LE(max_abs_diff(dense, cg), 1e-11);
    }
}

TEST(YStep, Examples) {
    SolverConfig cfg;
    const std::vector<double> w{0};
    const auto y = y_step(rows({{0.5, 0.5}}), rows({{1, 0}}), w, cfg);
    EXPECT_DOUBLE_EQ(y(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(y(0, 1), 0.25);

    const auto unl = y_step(rows({{0.3, 0.6}}), rows({{0, 0}}), w, cfg);
    EXPECT_DOUBLE_EQ(unl(0, 0), 0.15);
    EXPECT_DOUBLE_EQ(unl(0, 1), 0.3);

    cfg.gamma = 1e6;
    const auto big = y_step(rows({{0.2, 0.9}}), rows({{1, 0}}), w, cfg);
    EXPECT_NEAR(big(0, 0), 1.0, 1e-5);
    EXPECT_NEAR(big(0, 1), 0.0, 1e-5);

    cfg.gamma = 0;
    EXPECT_THROW(y_step(rows({{0.5, 0.5}}), rows({{1, 0}}), w, cfg), Error);
}

TEST(YStep, ClampResetsLabeledRows) {
    SolverConfig cfg;
    cfg.clamp_labeled = true;
    const std::vector<double> w{0, 0};
    const auto y = y_step(rows({{0.5, 0.5}, {0.4, 0.2}}), rows({{1, 0}, {0, 0}}), w, cfg);
    EXPECT_EQ(y.row(0), rows({{1, 0}}));
    EXPECT_DOUBLE_EQ(y(1, 0), 0.2);
}

TEST(Fit, TwoNodeFixedPoint) {
    const auto r = fit(pair_graph(), col({1, 0}), tight());
    EXPECT_TRUE(r.report.converged);
    EXPECT_NEAR(r.labels.current(0, 0), 0.8, 1e-10);
    EXPECT_NEAR(r.labels.current(1, 0), 0.2, 1e-10);
    EXPECT_NEAR(r.scores(0, 0), 0.6, 1e-10);
    EXPECT_NEAR(r.scores(1, 0), 0.4, 1e-10);
}

TEST(Fit, NoSmoothingReturnsInitialLabels) {
    SplitMix64 rng(2);
    const Matrix y0 = testing_util::random_initial(15, 3, 0.4, rng);
    SolverConfig cfg;
    cfg.lambda = 0;
    const auto r = fit(random_graph(15, 2), y0, cfg);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.iterations, 2u);
    EXPECT_EQ(r.scores, y0);
    EXPECT_EQ(r.labels.current, y0);
}

TEST(Fit, UnlabeledComponentStaysZeroAndIndeterminate) {
    // Nodes 0-2 form component A (node 0 labeled), nodes 3-4 component B.
    const SimilarityGraph g(5, {{0, 1, 0.9}, {1, 2, 0.5}, {3, 4, 0.7}});
    const Matrix y0 = rows({{1, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}});
    const auto r = fit(g, y0, SolverConfig{});
    for (Eigen::Index i = 3; i < 5; ++i) {
        EXPECT_EQ(r.scores(i, 0), 0.0);
        EXPECT_EQ(r.scores(i, 1), 0.0);
    }
    const auto p = predict(r.scores, SolverConfig{});
    EXPECT_EQ(p.classes[0], Prediction{0});
    EXPECT_FALSE(p.classes[3]);
    EXPECT_FALSE(p.classes[4]);
}

TEST(Fit, RejectsBadConfig) {
    SolverConfig cfg;
    cfg.gamma = 0;
    try {
        fit(pair_graph(), col({1, 0}), cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()), "gamma must be > 0");
    }
    EXPECT_THROW(fit(pair_graph(), col({1, 0, 0}), SolverConfig{}), Error);
}

TEST(Fit, ReportsNonConvergence) {
    SolverConfig cfg;
    cfg.max_iter = 2;
    cfg.tol = 1e-15;
    cfg.lambda = 5;
    SplitMix64 rng(1);
    const auto r = fit(random_graph(20, 4), testing_util::random_initial(20, 2, 0.2, rng), cfg);
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 2u);
    EXPECT_EQ(r.report.objective_trace.size(), 2u);
}

TEST(Oracle, HandExampleAndNoSmoothing) {
    const auto f = fixed_point_oracle(pair_graph(), col({1, 0}), SolverConfig{});
    EXPECT_NEAR(f(0, 0), 0.6, 1e-14);
    EXPECT_NEAR(f(1, 0), 0.4, 1e-14);
    SplitMix64 rng(8);
    const Matrix y0 = testing_util::random_initial(10, 2, 0.5, rng);
    SolverConfig cfg;
    cfg.lambda = 0;
    EXPECT_LE(max_abs_diff(fixed_point_oracle(random_graph(10, 1), y0, cfg), y0), 1e-14);
}

TEST(Oracle, AgreesWithEliminatedSystem) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SplitMix64 rng(seed);
        const std::size_t n = 8 + rng.below(30), k = 2 + rng.below(4);
        const auto g = random_graph(n, seed, static_cast<GraphMethod>(seed % 3));
        const Matrix y0 = testing_util::random_initial(n, k, 0.2, rng);
        SolverConfig cfg;
        cfg.lambda = 0.1 + 3 * rng.uniform();
        cfg.gamma = 0.1 + 3 * rng.uniform();
        cfg.alpha = 2 * rng.uniform();
        const auto [f, y] = schur_solution(g, y0, cfg);
        EXPECT_LE(max_abs_diff(fixed_point_oracle(g, y0, cfg), f), 1e-10);
        auto fit_cfg = cfg;
        fit_cfg.tol = 1e-13;
        fit_cfg.max_iter = 20000;
        EXPECT_LE(max_abs_diff(fit(g, y0, fit_cfg).scores, f), 1e-9);
    }
}

TEST(Oracle, ClampedVariantMatchesFit) {
    SplitMix64 rng(5);
    const auto g = random_graph(30, 5);
    const Matrix y0 = testing_util::random_initial(30, 3, 0.2, rng);
    auto cfg = tight();
    cfg.clamp_labeled = true;
    cfg.alpha = 1.0;
    EXPECT_LE(max_abs_diff(fit(g, y0, cfg).scores, fixed_point_oracle(g, y0, cfg)), 1e-9);
}

TEST(Predict, Examples) {
    SolverConfig cfg;
    auto p = predict(rows({{0.6, 0.4}}), cfg);
    EXPECT_EQ(p.classes[0], Prediction{0});
    ASSERT_TRUE(p.positive_score[0]);
    EXPECT_NEAR(*p.positive_score[0], 0.4, 1e-15);
    EXPECT_FALSE(predict(rows({{0, 0}}), cfg).classes[0]);
    EXPECT_EQ(predict(rows({{0.2, 0.2, 0.5, 0.05, 0.05}}), cfg).classes[0], Prediction{2});
    EXPECT_EQ(predict(rows({{0.3, 0.3, 0.1}}), cfg).classes[0], Prediction{0});
    EXPECT_FALSE(predict(rows({{0, 0, 0}}), cfg).classes[0]);
    cfg.threshold = 0.4;
    EXPECT_EQ(predict(rows({{0.6, 0.4}}), cfg).classes[0], Prediction{1});
}

TEST(SolverProperties, ObjectiveTraceNonIncreasing) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SplitMix64 rng(seed);
        const auto g = random_graph(40, seed, static_cast<GraphMethod>(seed % 3));
        SolverConfig cfg;
        cfg.alpha = seed % 2 ? 2.0 : 0.0;
        cfg.clamp_labeled = seed % 4 == 3;
        cfg.laplacian_kind = seed % 5 == 0 ? LaplacianKind::symmetric_normalized : LaplacianKind::unnormalized;
        const auto r = fit(g, testing_util::random_initial(40, 3, 0.15, rng), cfg);
        for (std::size_t t = 1; t < r.report.objective_trace.size(); ++t) {
            EXPECT_LE(r.report.objective_trace[t], r.report.objective_trace[t - 1] + 1e-9);
        }
    }
}

TEST(SolverProperties, ScaleInvariance) {
    SplitMix64 rng(3);
    const auto g = random_graph(30, 3);
    const Matrix y0 = testing_util::random_initial(30, 4, 0.2, rng);
    const auto cfg = tight();
    const auto base = fit(g, y0, cfg);
    const auto scaled = fit(g, 3.5 * y0, cfg);
    EXPECT_LE(max_abs_diff(scaled.scores, 3.5 * base.scores), 1e-9);
    EXPECT_EQ(predict(scaled.scores, cfg).classes, predict(base.scores, cfg).classes);
}

TEST(SolverProperties, KernelLambdaTrade) {
    SplitMix64 rng(6);
    const auto g = random_graph(30, 6);
    const Matrix y0 = testing_util::random_initial(30, 3, 0.2, rng);
    auto cfg = tight();
    cfg.lambda = 1.3;
    const auto base = fit(g, y0, cfg);
    cfg.lambda = 1.3 / 0.25;
    const auto traded = fit(g.scaled(0.25), y0, cfg);
    EXPECT_LE(max_abs_diff(base.scores, traded.scores), 1e-9);
}

TEST(SolverProperties, PermutationEquivariance) {
    SplitMix64 rng(7);
    const std::size_t n = 35;
    const auto g = random_graph(n, 7);
    const Matrix y0 = testing_util::random_initial(n, 3, 0.2, rng);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order, rng);
    Matrix y0p(y0.rows(), y0.cols());
    for (std::size_t i = 0; i < n; ++i) y0p.row(static_cast<Eigen::Index>(i)) = y0.row(static_cast<Eigen::Index>(order[i]));
    const auto cfg = tight();
    const auto base = fit(g, y0, cfg);
    const auto perm = fit(g.permuted(order), y0p, cfg);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LE((perm.scores.row(static_cast<Eigen::Index>(i)) - base.scores.row(static_cast<Eigen::Index>(order[i])))
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-9);
    }
}

TEST(SolverProperties, ThreadCountDoesNotChangeResult) {
    SplitMix64 rng(9);
    const auto g = random_graph(80, 9);
    const Matrix y0 = testing_util::random_initial(80, 5, 0.1, rng);
    SolverConfig cfg;
    cfg.linear_solver = LinearSolver::cg;
    cfg.alpha = 1;
    const auto one = fit(g, y0, cfg);
    cfg.threads = 4;
    const auto four = fit(g, y0, cfg);
    EXPECT_EQ(one.scores, four.scores);
    EXPECT_EQ(one.report.iterations, four.report.iterations);
}

TEST(SolverProperties, MaximumPrinciple) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SplitMix64 rng(seed);
        const auto g = random_graph(25, seed + 50, static_cast<GraphMethod>(seed % 3));
        SolverConfig cfg;
        cfg.lambda = 0.1 + 5 * rng.uniform();
        cfg.gamma = 0.1 + 5 * rng.uniform();
        const auto r = fit(g, testing_util::random_initial(25, 3, 0.2, rng), cfg);
        EXPECT_GE(r.scores.minCoeff(), -1e-9);
        EXPECT_LE(r.scores.maxCoeff(), 1 + 1e-9);
        EXPECT_LE(r.scores.rowwise().sum().maxCoeff(), 1 + 1e-9);
    }
}

TEST(LinearSolverNames, RoundTrip) {
    for (auto s : {LinearSolver::automatic, LinearSolver::dense, LinearSolver::cg}) {
        EXPECT_EQ(parse_linear_solver(to_string(s)), s);
    }
    EXPECT_THROW(parse_linear_solver("qr"), Error);
}
