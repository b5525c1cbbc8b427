#include "ssgl/graph.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

using namespace ssgl;
using testing_util::TempDir;

namespace {

Dataset line_points(std::vector<double> xs) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < xs.size(); ++i) ids.push_back("n" + std::to_string(i));
    return Dataset(ids, 1, std::move(xs));
}

// Dense copy of the Laplacian built straight from the edge list.
std::vector<std::vector<double>> dense(const SparseMatrix& m) {
    std::vector<std::vector<double>> d(m.n, std::vector<double>(m.n, 0.0));
    for (std::size_t r = 0; r < m.n; ++r) {
        for (std::size_t c = 0; c < m.n; ++c) d[r][c] = m.at(r, c);
    }
    return d;
}

double quad(const SparseMatrix& m, const std::vector<double>& x) {
    std::vector<double> y(x.size());
    m.multiply(x, y);
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

std::set<std::pair<std::size_t, std::size_t>> pairs(const SimilarityGraph& g) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& e : g.edges()) out.insert({e.i, e.j});
    return out;
}

GraphConfig config(GraphMethod m, std::size_t k = 10, double eps = 1.0, std::optional<double> sigma = std::nullopt) {
    GraphConfig c;
    c.method = m;
    c.k = k;
    c.epsilon = eps;
    c.sigma = sigma;
    return c;
}

}  // namespace

TEST(Kernels, RbfValues) {
    const std::vector<double> a{0.0, 0.0}, b{1.0, 0.0};
    EXPECT_EQ(rbf_similarity(a, a, 1.0), 1.0);
    EXPECT_NEAR(rbf_similarity(a, b, 1.0), 0.606531, 1e-6);
    EXPECT_NEAR(rbf_similarity(a, b, 0.5), 0.135335, 1e-6);
    EXPECT_THROW(rbf_similarity(a, std::vector<double>{1.0}, 1.0), Error);
    EXPECT_THROW(rbf_similarity(a, b, 0.0), Error);
    EXPECT_THROW(rbf_similarity(a, std::vector<double>{NAN, 0.0}, 1.0), Error);
}

TEST(Kernels, RbfStrictlyDecreasesWithDistance) {
    const std::vector<double> o{0.0};
    double prev = 1.0;
    for (double d = 0.1; d < 5; d += 0.1) {
        const double s = rbf_similarity(o, std::vector<double>{d}, 1.3);
        EXPECT_LT(s, prev);
        EXPECT_GT(s, 0.0);
        prev = s;
    }
}

TEST(Kernels, CosineValues) {
    EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 1.0, 1e-15);
    EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{-1, 0}), 0.0);
    EXPECT_EQ(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), 0.0);
    EXPECT_THROW(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 0}), Error);
}

TEST(MedianSigma, Examples) {
    EXPECT_EQ(median_sigma(line_points({0, 1, 3})), 2.0);
    EXPECT_EQ(median_sigma(line_points({0, 5})), 5.0);
    // Pairwise distances {1,1,1,2,2,3}: even count, mean of the two middle values.
    EXPECT_EQ(median_sigma(line_points({0, 1, 2, 3})), 1.5);
    // {1,2,3,4,6,7}
    EXPECT_EQ(median_sigma(line_points({0, 1, 3, 7})), 3.5);
    try {
        median_sigma(line_points({4, 4, 4}));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate dataset"), std::string::npos);
    }
}

TEST(BuildGraph, KnnExample) {
    const auto g = build_graph(line_points({0, 1, 3}), config(GraphMethod::knn, 1, 1, 1.0));
    ASSERT_EQ(g.edges().size(), 2u);
    EXPECT_EQ(g.edges()[0].i, 0u);
    EXPECT_EQ(g.edges()[0].j, 1u);
    EXPECT_NEAR(g.edges()[0].weight, std::exp(-0.5), 1e-15);
    EXPECT_EQ(g.edges()[1].i, 1u);
    EXPECT_EQ(g.edges()[1].j, 2u);
    EXPECT_NEAR(g.edges()[1].weight, std::exp(-2.0), 1e-15);
}

TEST(BuildGraph, EpsilonAndFullExamples) {
    const auto pts = line_points({0, 1, 3});
    const auto eps = build_graph(pts, config(GraphMethod::epsilon, 10, 1.5, 1.0));
    EXPECT_EQ(pairs(eps), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}}));
    EXPECT_EQ(build_graph(pts, config(GraphMethod::full, 10, 1, 1.0)).edges().size(), 3u);
}

TEST(BuildGraph, KnnTiesGoToLowerIndex) {
    // Node 2 is equidistant from nodes 0 and 3 and must pick node 0; nobody else picks 2 or 3 across.
    const auto g = build_graph(line_points({-1, -1.25, 0, 1, 1.25}), config(GraphMethod::knn, 1, 1, 1.0));
    EXPECT_EQ(pairs(g), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {3, 4}}));
}

TEST(BuildGraph, Errors) {
    const auto pts = line_points({0, 1, 3});
    try {
        build_graph(pts, config(GraphMethod::knn, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("k < n"), std::string::npos) << e.what();
    }
    EXPECT_THROW(build_graph(line_points({2, 2, 2}), config(GraphMethod::full)), Error);
    EXPECT_THROW(build_graph(pts, config(GraphMethod::knn, 0)), Error);
    EXPECT_THROW(build_graph(pts, config(GraphMethod::full, 1, 1, -1.0)), Error);
}

TEST(BuildGraph, AutoSigmaIsMedianDistance) {
    const auto pts = line_points({0, 1, 3});
    const auto g = build_graph(pts, config(GraphMethod::full));
    ASSERT_TRUE(g.resolved_sigma());
    EXPECT_EQ(*g.resolved_sigma(), 2.0);
    EXPECT_NEAR(g.edges()[0].weight, std::exp(-1.0 / 8.0), 1e-15);
}

TEST(BuildGraph, CosineDropsZeroWeights) {
    std::vector<std::string> ids{"a", "b", "c"};
    const Dataset ds(ids, 2, {1, 0, 0, 1, 1, 1});
    GraphConfig c = config(GraphMethod::full);
    c.kernel = Kernel::cosine;
    const auto g = build_graph(ds, c);
    EXPECT_EQ(pairs(g), (std::set<std::pair<std::size_t, std::size_t>>{{0, 2}, {1, 2}}));
}

TEST(GraphProperties, KnnDegreeBounds) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const std::size_t n = 5 + seed * 3, k = 1 + seed % 6;
        if (k >= n) continue;
        const auto g = build_graph(testing_util::gaussian_points(n, 3, seed), config(GraphMethod::knn, k));
        // Union symmetrization: every edge was chosen by at least one endpoint and every
        // node chose k edges, so the edge count sits in [nk/2, nk]. Single degrees are
        // unbounded above because a hub can be picked by any number of neighbours.
        EXPECT_LE(g.edges().size(), n * k);
        EXPECT_GE(2 * g.edges().size(), n * k);
        std::vector<std::size_t> deg(n, 0);
        for (const auto& e : g.edges()) {
            ++deg[e.i];
            ++deg[e.j];
            EXPECT_GT(e.weight, 0.0);
            EXPECT_LE(e.weight, 1.0);
            EXPECT_LT(e.i, e.j);
        }
        for (auto d : deg) {
            EXPECT_GE(d, std::min(k, n - 1));
            EXPECT_LE(d, n - 1);
        }
    }
}

TEST(GraphProperties, EpsilonEdgesSubsetOfFull) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto pts = testing_util::gaussian_points(20, 2, seed);
        const auto eps = pairs(build_graph(pts, config(GraphMethod::epsilon, 1, 0.8)));
        const auto full = pairs(build_graph(pts, config(GraphMethod::full)));
        for (const auto& p : eps) EXPECT_TRUE(full.count(p));
    }
}

TEST(GraphProperties, PermutationEquivariance) {
    for (auto method : {GraphMethod::knn, GraphMethod::epsilon, GraphMethod::full}) {
        const auto pts = testing_util::gaussian_points(30, 2, 17);
        std::vector<std::size_t> order(30);
        for (std::size_t i = 0; i < 30; ++i) order[i] = i;
        SplitMix64 rng(3);
        shuffle(order, rng);
        const auto cfg = config(method, 4, 1.0, 0.9);
        const auto g = build_graph(pts, cfg);
        const auto gp = build_graph(pts.permuted(order), cfg);
        const auto expected = g.permuted(order);
        ASSERT_EQ(gp.edges().size(), expected.edges().size());
        for (std::size_t t = 0; t < gp.edges().size(); ++t) {
            EXPECT_EQ(gp.edges()[t].i, expected.edges()[t].i);
            EXPECT_EQ(gp.edges()[t].j, expected.edges()[t].j);
            EXPECT_EQ(gp.edges()[t].weight, expected.edges()[t].weight);
        }
    }
}

TEST(GraphProperties, ThreadCountDoesNotChangeEdges) {
    const auto pts = testing_util::gaussian_points(120, 4, 8);
    auto cfg = config(GraphMethod::knn, 7);
    const auto one = build_graph(pts, cfg);
    cfg.threads = 4;
    const auto four = build_graph(pts, cfg);
    EXPECT_EQ(one.edges(), four.edges());
}

TEST(Standardize, ZeroMeanUnitVariance) {
    const auto ds = standardized(Dataset({"a", "b", "c", "d"}, 2, {1, 5, 2, 5, 3, 5, 6, 5}));
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < 4; ++i) mean += ds.row(i)[0];
    mean /= 4;
    for (std::size_t i = 0; i < 4; ++i) sq += (ds.row(i)[0] - mean) * (ds.row(i)[0] - mean);
    EXPECT_NEAR(mean, 0.0, 1e-15);
    EXPECT_NEAR(sq / 4, 1.0, 1e-12);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ds.row(i)[1], 0.0);
}

TEST(Laplacian, SingleEdgeAndEdgeless) {
    const SimilarityGraph g(2, {{0, 1, 1.0}});
    const auto L = laplacian(g, LaplacianKind::unnormalized);
    EXPECT_EQ(dense(L.matrix), (std::vector<std::vector<double>>{{1, -1}, {-1, 1}}));
    const SimilarityGraph empty(3, {});
    for (const auto& row : dense(laplacian(empty, LaplacianKind::unnormalized).matrix)) {
        for (double v : row) EXPECT_EQ(v, 0.0);
    }
}

TEST(Laplacian, NormalizedEntriesAndIsolatedNodes) {
    const SimilarityGraph g(3, {{0, 1, 0.5}});
    const auto d = dense(laplacian(g, LaplacianKind::symmetric_normalized).matrix);
    EXPECT_NEAR(d[0][0], 1.0, 1e-15);
    EXPECT_NEAR(d[0][1], -1.0, 1e-15);  // -0.5 / sqrt(0.5 * 0.5)
    EXPECT_EQ(d[2][2], 1.0);
    EXPECT_EQ(d[2][0], 0.0);
}

TEST(Laplacian, QuadraticFormIdentityAndPsd) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = build_graph(testing_util::gaussian_points(25, 3, seed), config(GraphMethod::knn, 4));
        const auto L = laplacian(g, LaplacianKind::unnormalized);
        const auto N = laplacian(g, LaplacianKind::symmetric_normalized);
        SplitMix64 rng(seed + 100);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(25);
            for (auto& v : x) v = rng.normal();
            double half_sum = 0;
            for (const auto& e : g.edges()) half_sum += e.weight * (x[e.i] - x[e.j]) * (x[e.i] - x[e.j]);
            EXPECT_NEAR(quad(L.matrix, x), half_sum, 1e-9);
            EXPECT_GE(quad(L.matrix, x), -1e-9);
            EXPECT_GE(quad(N.matrix, x), -1e-9);
        }
        for (const auto& row : dense(L.matrix)) {
            double s = 0;
            for (double v : row) s += v;
            EXPECT_LE(std::abs(s), 1e-9);
        }
        const auto deg = g.degrees();
        const auto diag = L.matrix.diagonal();
        for (std::size_t i = 0; i < deg.size(); ++i) EXPECT_NEAR(diag[i], deg[i], 1e-12);
    }
}

TEST(EdgeList, FormatAndRoundTrip) {
    TempDir dir;
    const SimilarityGraph tiny(2, {{0, 1, 0.5}});
    const auto text = format_edgelist(tiny);
    EXPECT_EQ(text.substr(0, 16), "# ssgl-graph v1\n");
    EXPECT_NE(text.find("\n0 1 0.500000000\n"), std::string::npos) << text;

    const auto g = build_graph(testing_util::gaussian_points(40, 2, 5), config(GraphMethod::knn, 5));
    write_edgelist(g, dir / "g.edges");
    const auto back = read_edgelist(dir / "g.edges");
    EXPECT_EQ(back.size(), g.size());
    EXPECT_EQ(pairs(back), pairs(g));
    for (std::size_t t = 0; t < g.edges().size(); ++t) {
        EXPECT_NEAR(back.edges()[t].weight, g.edges()[t].weight, 1e-9);
    }
    EXPECT_EQ(back.config().method, GraphMethod::knn);
    EXPECT_EQ(back.config().k, 5u);
}

TEST(EdgeList, RejectsBadLines) {
    const std::string head = "# ssgl-graph v1\n# n=3 method=full kernel=rbf param=all\n";
    auto msg = [&](const std::string& body) {
        try {
            parse_edgelist(head + body, "g");
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(msg("1 1 0.3\n").find("self-loop"), std::string::npos);
    EXPECT_NE(msg("0 3 0.3\n").find("out of range"), std::string::npos);
    EXPECT_NE(msg("0 1 0.3\n1 0 0.2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(msg("0 1\n").find("malformed"), std::string::npos);
    EXPECT_FALSE(msg("0 1 1.5\n").empty());
    EXPECT_FALSE(msg("0 1 abc\n").empty());
    EXPECT_TRUE(msg("0 1 0.3\n1 2 1\n").empty());
    EXPECT_THROW(parse_edgelist("0 1 0.5\n"), Error);
}
