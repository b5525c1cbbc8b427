#pragma once

#include "ssgl/dataset.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace ssgl {

/// Rows are true classes, columns predicted classes. Indeterminate predictions
/// are kept out of the table and counted separately.
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::size_t> counts;  // row-major num_classes x num_classes
    std::size_t indeterminate = 0;

    std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * num_classes + pred]; }
    std::size_t total() const;  // tallied samples, indeterminate excluded
    std::size_t row_sum(std::size_t truth) const;
    std::size_t col_sum(std::size_t pred) const;
};

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct MetricsReport {
    double accuracy = 0;  // trace / (total + indeterminate)
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
    double kappa = 0;  // agreement between truth and the determinate predictions
    std::size_t indeterminate = 0;
};

using IdPrediction = std::pair<std::string, Prediction>;

ConfusionMatrix confusion_matrix(const LabelAssignment& truth, const std::vector<IdPrediction>& predictions,
                                 std::size_t num_classes);

/// Index-aligned convenience overload.
ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& truth,
                                 const std::vector<Prediction>& predictions, std::size_t num_classes);

MetricsReport classification_metrics(const ConfusionMatrix& cm);

/// Cohen's kappa over the ids both raters labeled. Constant identical raters give 1.
double cohen_kappa(const LabelAssignment& rater_a, const LabelAssignment& rater_b, std::size_t num_classes);

/// Kappa of the tallied (determinate) cells of a confusion matrix.
double cohen_kappa(const ConfusionMatrix& cm);

/// {"accuracy":..., "macro_precision":..., ..., "per_class":[...], "indeterminate":...}
std::string metrics_json(const MetricsReport& report, const ClassCatalog& catalog);

}  // namespace ssgl
