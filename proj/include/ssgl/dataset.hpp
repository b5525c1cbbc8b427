#pragma once

#include "ssgl/common.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ssgl {

/// Ordered list of class names; position defines the class index.
class ClassCatalog {
public:
    ClassCatalog() = default;
    explicit ClassCatalog(std::vector<std::string> names);

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t k) const { return names_.at(k); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::optional<std::size_t> find(std::string_view name) const;

    /// NoDR, Mild, Moderate, Severe, PDR.
    static ClassCatalog severity_grades();

private:
    std::vector<std::string> names_;
};

/// n samples with d real features each, row-major.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> ids, std::size_t dim, std::vector<double> values,
            ClassCatalog catalog = {});

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::string& id(std::size_t i) const { return ids_.at(i); }
    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }
    std::span<const double> values() const noexcept { return values_; }
    std::optional<std::size_t> index_of(std::string_view id) const;

    const ClassCatalog& catalog() const noexcept { return catalog_; }
    void set_catalog(ClassCatalog catalog);

    /// Rows reordered so that output row i is input row order[i].
    Dataset permuted(std::span<const std::size_t> order) const;

private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
    ClassCatalog catalog_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Sample id to class index, in insertion order. Ids without an entry are unlabeled.
class LabelAssignment {
public:
    using Entry = std::pair<std::string, std::size_t>;

    void add(std::string id, std::size_t cls);
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::optional<std::size_t> find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id).has_value(); }

    /// Labeled share of `dataset`; throws if an id is not in the dataset or a
    /// class index is out of the dataset's catalog range.
    double coverage(const Dataset& dataset) const;

    /// (row index, class) pairs in dataset row order.
    std::vector<std::pair<std::size_t, std::size_t>> rows(const Dataset& dataset) const;

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool stratified = false;
};

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> warnings;
};

bool is_valid_id(std::string_view id) noexcept;

Dataset load_features_csv(const std::filesystem::path& path);
Dataset parse_features_csv(std::string_view text, std::string_view source = "<memory>");
void write_features_csv(const std::filesystem::path& path, const Dataset& dataset);

LabelAssignment load_labels_csv(const std::filesystem::path& path, const ClassCatalog& catalog);
LabelAssignment parse_labels_csv(std::string_view text, const ClassCatalog& catalog,
                                 std::string_view source = "<memory>");
void write_labels_csv(const std::filesystem::path& path, const LabelAssignment& labels,
                      const ClassCatalog& catalog);

/// One class name per line; blank lines ignored.
ClassCatalog load_catalog(const std::filesystem::path& path);

/// Per class, max(1, ceil(fraction * n_k)) members drawn without replacement.
/// Classes are visited in catalog order, each shuffled with the same stream.
LabelAssignment stratified_label_subset(const Dataset& dataset, const LabelAssignment& truth,
                                        double fraction, std::uint64_t seed);

SplitResult train_test_split(const Dataset& dataset, const LabelAssignment& truth,
                             const SplitSpec& spec);

/// Prediction for one row: a class index, or nothing when indeterminate.
using Prediction = std::optional<std::size_t>;

void write_scores_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                      std::span<const double> scores, std::size_t num_classes,
                      std::span<const Prediction> predictions, const ClassCatalog& catalog);

struct ScoreTable {
    std::vector<std::string> ids;
    std::size_t num_classes = 0;
    std::vector<double> scores;  // row-major ids.size() x num_classes
    std::vector<Prediction> predictions;
};

ScoreTable load_scores_csv(const std::filesystem::path& path, const ClassCatalog& catalog);

/// `id,pred` rows, "?" for indeterminate.
void write_predictions_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                           std::span<const Prediction> predictions, const ClassCatalog& catalog);

/// Reads any CSV whose first column is `id` and last column is `pred`.
std::vector<std::pair<std::string, Prediction>> load_predictions_csv(
    const std::filesystem::path& path, const ClassCatalog& catalog);

}  // namespace ssgl
