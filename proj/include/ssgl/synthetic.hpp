#pragma once

#include "ssgl/dataset.hpp"
#include "ssgl/graph.hpp"
#include "ssgl/metrics.hpp"
#include "ssgl/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssgl {

enum class SyntheticFamily { two_moons, blobs };

struct BlobSpec {
    std::vector<double> center;
    std::size_t cls = 0;
    double fraction = 0;
};

struct SyntheticSpec {
    SyntheticFamily family = SyntheticFamily::two_moons;
    std::size_t n = 400;
    double noise = 0.1;  // std of isotropic Gaussian noise, feature units
    std::uint64_t seed = 0;
    std::vector<BlobSpec> blobs;

    std::size_t num_classes() const;
    void validate() const;
};

struct LabeledData {
    Dataset dataset;
    LabelAssignment truth;
};

/// Class 0 on the upper unit half-circle, class 1 on the shifted lower arc
/// (1 - cos t, 0.5 - sin t); t uniform on [0, pi]. Class 0 rows come first.
LabeledData gen_two_moons(const SyntheticSpec& spec);

/// Blob sizes by largest-remainder apportionment of fraction * n.
LabeledData gen_blobs(const SyntheticSpec& spec);

LabeledData generate(const SyntheticSpec& spec);

/// Largest-remainder (Hamilton) apportionment of `total` over `fractions`.
std::vector<std::size_t> apportion(const std::vector<double>& fractions, std::size_t total);

/// Five imbalanced blobs along one axis, one per severity grade, rarest grade at 5%.
SyntheticSpec severity_preset(std::size_t n, double noise, std::uint64_t seed);

/// Nearest labeled sample by Euclidean distance, lower row index on ties.
/// Labeled rows resolve to themselves unless an identical earlier point exists.
std::vector<Prediction> one_nn_baseline(const Dataset& dataset, const LabelAssignment& labeled);

struct BenchmarkConfig {
    SyntheticSpec data;  // data.seed is the base seed; trial t uses seed + t
    double label_fraction = 0.05;
    GraphConfig graph = standardized_graph();
    SolverConfig solver;
    std::size_t trials = 10;

    /// Benchmarks z-score features before building the graph unless told otherwise.
    static GraphConfig standardized_graph() {
        GraphConfig g;
        g.standardize = true;
        return g;
    }
    unsigned threads = 1;  // trials run concurrently; 0 = hardware concurrency
};

/// Scores on the unlabeled samples of one trial; empty when nothing is unlabeled.
struct TrialScore {
    std::optional<double> accuracy;
    std::optional<double> macro_f1;
    std::vector<std::optional<double>> recall;  // per class
};

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    TrialScore ssgl;
    TrialScore baseline;
    std::size_t ssgl_iterations = 0;
    bool ssgl_converged = false;
};

struct MethodSummary {
    std::optional<double> accuracy_mean;
    std::optional<double> accuracy_std;
    std::optional<double> macro_f1_mean;
    std::optional<double> macro_f1_std;
    std::vector<std::optional<double>> recall_mean;
};

struct BenchmarkResult {
    std::size_t num_classes = 0;
    std::vector<TrialRecord> trials;
    MethodSummary ssgl;
    MethodSummary baseline;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config);

/// `method,trial,accuracy,macro_f1,recall_class0..` with "n/a" for vacuous cells.
std::string benchmark_csv(const BenchmarkResult& result);
std::string benchmark_json(const BenchmarkResult& result, const BenchmarkConfig& config);

/// Mean and population standard deviation; empty input gives nothing.
std::optional<std::pair<double, double>> mean_std(const std::vector<double>& values);

}  // namespace ssgl
