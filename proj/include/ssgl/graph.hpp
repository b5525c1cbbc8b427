#pragma once

#include "ssgl/dataset.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssgl {

enum class GraphMethod { knn, epsilon, full };
enum class Kernel { rbf, cosine };
enum class LaplacianKind { unnormalized, symmetric_normalized };

struct GraphConfig {
    GraphMethod method = GraphMethod::knn;
    std::size_t k = 10;
    double epsilon = 1.0;
    Kernel kernel = Kernel::rbf;
    std::optional<double> sigma;  // empty means "auto": median pairwise distance
    bool standardize = false;
    unsigned threads = 1;  // distance rows; 0 = hardware concurrency

    void validate() const;
};

struct Edge {
    std::size_t i = 0;  // i < j
    std::size_t j = 0;
    double weight = 0;

    bool operator==(const Edge&) const = default;
};

/// Undirected weighted graph. Edges are sorted by (i, j), weights in (0, 1].
class SimilarityGraph {
public:
    SimilarityGraph() = default;
    SimilarityGraph(std::size_t n, std::vector<Edge> edges, GraphConfig config = {},
                    std::optional<double> resolved_sigma = std::nullopt);

    std::size_t size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const GraphConfig& config() const noexcept { return config_; }
    /// Bandwidth actually used when the kernel is rbf.
    std::optional<double> resolved_sigma() const noexcept { return resolved_sigma_; }

    std::vector<double> degrees() const;
    /// Same topology, every weight multiplied by `factor` (must keep weights in (0,1]).
    SimilarityGraph scaled(double factor) const;
    /// Node i of the result is node order[i] of this graph.
    SimilarityGraph permuted(std::span<const std::size_t> order) const;

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    GraphConfig config_;
    std::optional<double> resolved_sigma_;
};

/// Compressed sparse row, square, symmetric by construction.
struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> values;

    void multiply(std::span<const double> x, std::span<double> y) const;
    double at(std::size_t r, std::size_t c) const;
    std::vector<double> diagonal() const;
};

struct Laplacian {
    LaplacianKind kind = LaplacianKind::unnormalized;
    SparseMatrix matrix;
};

double squared_distance(std::span<const double> x, std::span<const double> y);
double rbf_similarity(std::span<const double> x, std::span<const double> y, double sigma);
double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// Per-dimension z-scores (population std); constant dimensions become 0.
Dataset standardized(const Dataset& dataset);

/// Median of all pairwise Euclidean distances.
double median_sigma(const Dataset& dataset);

SimilarityGraph build_graph(const Dataset& dataset, const GraphConfig& config);

Laplacian laplacian(const SimilarityGraph& graph, LaplacianKind kind);

void write_edgelist(const SimilarityGraph& graph, const std::filesystem::path& path);
std::string format_edgelist(const SimilarityGraph& graph);
SimilarityGraph read_edgelist(const std::filesystem::path& path);
SimilarityGraph parse_edgelist(std::string_view text, std::string_view source = "<memory>");

std::string to_string(GraphMethod m);
std::string to_string(Kernel k);
std::string to_string(LaplacianKind k);
GraphMethod parse_graph_method(std::string_view s);
Kernel parse_kernel(std::string_view s);
LaplacianKind parse_laplacian_kind(std::string_view s);

}  // namespace ssgl
