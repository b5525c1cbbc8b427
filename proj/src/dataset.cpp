#include "ssgl/dataset.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>

namespace ssgl {

using detail::at_line;
using detail::split_records;

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].empty()) throw Error("class catalog: empty class name");
        if (names_[i] == "?") throw Error("class catalog: '?' is reserved for indeterminate rows");
        for (std::size_t j = 0; j < i; ++j) {
            if (names_[i] == names_[j]) throw Error("class catalog: duplicate class '" + names_[i] + "'");
        }
    }
}

std::optional<std::size_t> ClassCatalog::find(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

ClassCatalog ClassCatalog::severity_grades() {
    return ClassCatalog({"NoDR", "Mild", "Moderate", "Severe", "PDR"});
}

bool is_valid_id(std::string_view id) noexcept {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '.' || c == '-';
    });
}

Dataset::Dataset(std::vector<std::string> ids, std::size_t dim, std::vector<double> values,
                 ClassCatalog catalog)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw Error("dataset: feature dimension must be >= 1");
    if (values_.size() != ids_.size() * dim_) throw Error("dataset: value count does not match n*d");
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!is_valid_id(ids_[i])) throw Error("dataset: invalid id '" + ids_[i] + "'");
        if (!index_.emplace(ids_[i], i).second) throw Error("dataset: duplicate id '" + ids_[i] + "'");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error("dataset: non-finite feature value");
    }
    set_catalog(std::move(catalog));
}

void Dataset::set_catalog(ClassCatalog catalog) {
    if (catalog.size() == 1) throw Error("dataset: class catalog needs at least 2 classes");
    catalog_ = std::move(catalog);
}

std::optional<std::size_t> Dataset::index_of(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Dataset Dataset::permuted(std::span<const std::size_t> order) const {
    if (order.size() != size()) throw Error("dataset: permutation size mismatch");
    std::vector<std::string> ids;
    std::vector<double> values;
    ids.reserve(size());
    values.reserve(values_.size());
    for (std::size_t i : order) {
        ids.push_back(ids_.at(i));
        const auto r = row(i);
        values.insert(values.end(), r.begin(), r.end());
    }
    return Dataset(std::move(ids), dim_, std::move(values), catalog_);
}

void LabelAssignment::add(std::string id, std::size_t cls) {
    if (!index_.emplace(id, entries_.size()).second) {
        throw Error("labels: duplicate id '" + id + "'");
    }
    entries_.emplace_back(std::move(id), cls);
}

std::optional<std::size_t> LabelAssignment::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
}

std::vector<std::pair<std::size_t, std::size_t>> LabelAssignment::rows(const Dataset& dataset) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(entries_.size());
    for (const auto& [id, cls] : entries_) {
        const auto row = dataset.index_of(id);
        if (!row) throw Error("labels: id '" + id + "' is not in the dataset");
        if (dataset.catalog().size() > 0 && cls >= dataset.catalog().size()) {
            throw Error("labels: class index out of range for id '" + id + "'");
        }
        out.emplace_back(*row, cls);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double LabelAssignment::coverage(const Dataset& dataset) const {
    if (dataset.size() == 0) return 0.0;
    return static_cast<double>(rows(dataset).size()) / static_cast<double>(dataset.size());
}

Dataset parse_features_csv(std::string_view text, std::string_view source) {
    const auto records = split_records(text);
    if (records.empty() || records.front().cells.empty() || records.front().cells[0] != "id") {
        throw Error(std::string(source) + ": missing header (expected 'id,f0,...')");
    }
    const auto& header = records.front();
    const std::size_t dim = header.cells.size() - 1;
    if (dim == 0) throw Error(at_line(source, header.line) + ": header has no feature columns");

    std::vector<std::string> ids;
    std::vector<double> values;
    std::unordered_map<std::string, std::size_t> first_seen;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto where = at_line(source, rec.line);
        if (rec.cells.size() != dim + 1) {
            throw Error(where + ": expected " + std::to_string(dim + 1) + " fields, got " +
                        std::to_string(rec.cells.size()));
        }
        std::string id(rec.cells[0]);
        if (!is_valid_id(id)) throw Error(where + ": invalid id '" + id + "'");
        if (const auto [it, fresh] = first_seen.emplace(id, rec.line); !fresh) {
            throw Error(where + ": duplicate id '" + id + "' (first seen on line " +
                        std::to_string(it->second) + ")");
        }
        for (std::size_t c = 1; c <= dim; ++c) values.push_back(parse_real(rec.cells[c], where));
        ids.push_back(std::move(id));
    }
    return Dataset(std::move(ids), dim, std::move(values));
}

Dataset load_features_csv(const std::filesystem::path& path) {
    return parse_features_csv(read_file(path), path.string());
}

void write_features_csv(const std::filesystem::path& path, const Dataset& dataset) {
    std::string out = "id";
    for (std::size_t c = 0; c < dataset.dim(); ++c) out += ",f" + std::to_string(c);
    out += '\n';
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out += dataset.id(i);
        for (double v : dataset.row(i)) out += "," + format_exact(v);
        out += '\n';
    }
    write_file_atomic(path, out);
}

LabelAssignment parse_labels_csv(std::string_view text, const ClassCatalog& catalog,
                                 std::string_view source) {
    const auto records = split_records(text);
    if (records.empty() || records.front().cells.size() != 2 || records.front().cells[0] != "id" ||
        records.front().cells[1] != "label") {
        throw Error(std::string(source) + ": missing header (expected 'id,label')");
    }
    LabelAssignment labels;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto where = at_line(source, rec.line);
        if (rec.cells.size() != 2) throw Error(where + ": expected 2 fields");
        std::string id(rec.cells[0]);
        if (!is_valid_id(id)) throw Error(where + ": invalid id '" + id + "'");
        const auto cls = catalog.find(rec.cells[1]);
        if (!cls) throw Error(where + ": unknown class '" + std::string(rec.cells[1]) + "'");
        if (labels.contains(id)) throw Error(where + ": duplicate id '" + id + "'");
        labels.add(std::move(id), *cls);
    }
    return labels;
}

LabelAssignment load_labels_csv(const std::filesystem::path& path, const ClassCatalog& catalog) {
    return parse_labels_csv(read_file(path), catalog, path.string());
}

void write_labels_csv(const std::filesystem::path& path, const LabelAssignment& labels,
                      const ClassCatalog& catalog) {
    std::string out = "id,label\n";
    for (const auto& [id, cls] : labels.entries()) out += id + "," + catalog.name(cls) + "\n";
    write_file_atomic(path, out);
}

ClassCatalog load_catalog(const std::filesystem::path& path) {
    const auto text = read_file(path);
    std::vector<std::string> names;
    for (const auto& rec : split_records(text)) {
        if (rec.cells.size() != 1) {
            throw Error(at_line(path.string(), rec.line) + ": class names may not contain ','");
        }
        names.emplace_back(rec.cells[0]);
    }
    if (names.size() < 2) throw Error(path.string() + ": class catalog needs at least 2 classes");
    return ClassCatalog(std::move(names));
}

namespace {

// Row indices per class, in dataset order. Every sample must be labeled.
std::vector<std::vector<std::size_t>> members_by_class(const Dataset& dataset,
                                                       const LabelAssignment& truth,
                                                       std::size_t num_classes) {
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto cls = truth.find(dataset.id(i));
        if (!cls) throw Error("sample '" + dataset.id(i) + "' has no ground-truth label");
        if (*cls >= num_classes) throw Error("class index out of range for '" + dataset.id(i) + "'");
        members[*cls].push_back(i);
    }
    return members;
}

std::size_t class_count(const Dataset& dataset, const LabelAssignment& truth) {
    if (dataset.catalog().size() > 0) return dataset.catalog().size();
    std::size_t k = 0;
    for (const auto& [id, cls] : truth.entries()) k = std::max(k, cls + 1);
    return k;
}

std::string class_name(const Dataset& dataset, std::size_t k) {
    return dataset.catalog().size() > k ? dataset.catalog().name(k) : "class " + std::to_string(k);
}

}  // namespace

LabelAssignment stratified_label_subset(const Dataset& dataset, const LabelAssignment& truth,
                                        double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("label fraction must be in (0, 1]");
    const std::size_t num_classes = class_count(dataset, truth);
    auto members = members_by_class(dataset, truth, num_classes);

    std::vector<std::string> empty;
    for (std::size_t k = 0; k < num_classes; ++k) {
        if (members[k].empty()) empty.push_back(class_name(dataset, k));
    }
    if (!empty.empty()) {
        std::string msg = "stratified labeling: classes without members:";
        for (const auto& name : empty) msg += " " + name;
        throw Error(msg);
    }

    SplitMix64 rng(seed);
    std::vector<char> selected(dataset.size(), 0);
    for (auto& group : members) {
        const std::size_t take = std::max<std::size_t>(1, ceil_count(fraction * group.size()));
        shuffle(group, rng);
        for (std::size_t j = 0; j < std::min(take, group.size()); ++j) selected[group[j]] = 1;
    }

    LabelAssignment out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (selected[i]) out.add(dataset.id(i), *truth.find(dataset.id(i)));
    }
    return out;
}

SplitResult train_test_split(const Dataset& dataset, const LabelAssignment& truth,
                             const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw Error("test fraction must be in (0, 1)");
    }
    SplitResult result;
    SplitMix64 rng(spec.seed);
    std::vector<char> is_test(dataset.size(), 0);

    if (spec.stratified) {
        auto members = members_by_class(dataset, truth, class_count(dataset, truth));
        for (std::size_t k = 0; k < members.size(); ++k) {
            auto& group = members[k];
            if (group.empty()) continue;
            const double want = spec.test_fraction * static_cast<double>(group.size());
            if (want < 1.0) {
                result.warnings.push_back(class_name(dataset, k) + ": test_fraction * n_k < 1, "
                                          "class contributes 1 test sample");
            }
            const std::size_t take = std::max<std::size_t>(1, ceil_count(want));
            shuffle(group, rng);
            for (std::size_t j = 0; j < std::min(take, group.size()); ++j) is_test[group[j]] = 1;
        }
    } else {
        std::vector<std::size_t> order(dataset.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, rng);
        const std::size_t take =
            std::min(order.size(), ceil_count(spec.test_fraction * static_cast<double>(order.size())));
        for (std::size_t j = 0; j < take; ++j) is_test[order[j]] = 1;
    }

    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (is_test[i] ? result.test : result.train).push_back(dataset.id(i));
    }
    return result;
}

namespace {

std::string prediction_token(const Prediction& p, const ClassCatalog& catalog) {
    return p ? catalog.name(*p) : std::string("?");
}

Prediction parse_prediction(std::string_view token, const ClassCatalog& catalog,
                            const std::string& where) {
    if (token == "?") return std::nullopt;
    const auto cls = catalog.find(token);
    if (!cls) throw Error(where + ": unknown class '" + std::string(token) + "'");
    return cls;
}

}  // namespace

void write_scores_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                      std::span<const double> scores, std::size_t num_classes,
                      std::span<const Prediction> predictions, const ClassCatalog& catalog) {
    if (num_classes != catalog.size()) throw Error("scores: class count does not match catalog");
    if (scores.size() != ids.size() * num_classes || predictions.size() != ids.size()) {
        throw Error("scores: shape mismatch");
    }
    std::string out = "id";
    for (const auto& name : catalog.names()) out += ",score_" + name;
    out += ",pred\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += ids[i];
        for (std::size_t k = 0; k < num_classes; ++k) out += "," + format_real(scores[i * num_classes + k]);
        out += "," + prediction_token(predictions[i], catalog) + "\n";
    }
    write_file_atomic(path, out);
}

ScoreTable load_scores_csv(const std::filesystem::path& path, const ClassCatalog& catalog) {
    const auto text = read_file(path);
    const auto source = path.string();
    const auto records = split_records(text);
    const std::size_t k = catalog.size();
    if (records.empty() || records.front().cells.size() != k + 2 ||
        records.front().cells.front() != "id" || records.front().cells.back() != "pred") {
        throw Error(source + ": missing or mismatched score header");
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (records.front().cells[c + 1] != "score_" + catalog.name(c)) {
            throw Error(source + ": score column " + std::to_string(c) + " does not match catalog");
        }
    }
    ScoreTable table;
    table.num_classes = k;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto where = at_line(source, rec.line);
        if (rec.cells.size() != k + 2) throw Error(where + ": wrong field count");
        table.ids.emplace_back(rec.cells[0]);
        for (std::size_t c = 0; c < k; ++c) table.scores.push_back(parse_real(rec.cells[c + 1], where));
        table.predictions.push_back(parse_prediction(rec.cells.back(), catalog, where));
    }
    return table;
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                           std::span<const Prediction> predictions, const ClassCatalog& catalog) {
    if (ids.size() != predictions.size()) throw Error("predictions: shape mismatch");
    std::string out = "id,pred\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += ids[i] + "," + prediction_token(predictions[i], catalog) + "\n";
    }
    write_file_atomic(path, out);
}

std::vector<std::pair<std::string, Prediction>> load_predictions_csv(
    const std::filesystem::path& path, const ClassCatalog& catalog) {
    const auto text = read_file(path);
    const auto source = path.string();
    const auto records = split_records(text);
    if (records.empty() || records.front().cells.size() < 2 || records.front().cells.front() != "id" ||
        records.front().cells.back() != "pred") {
        throw Error(source + ": missing header (expected 'id,...,pred')");
    }
    const std::size_t width = records.front().cells.size();
    std::vector<std::pair<std::string, Prediction>> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto where = at_line(source, rec.line);
        if (rec.cells.size() != width) throw Error(where + ": wrong field count");
        out.emplace_back(std::string(rec.cells[0]), parse_prediction(rec.cells.back(), catalog, where));
    }
    return out;
}

}  // namespace ssgl
