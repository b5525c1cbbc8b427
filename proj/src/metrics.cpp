#include "ssgl/metrics.hpp"

#include <json.hpp>

#include <numeric>

namespace ssgl {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < num_classes; ++p) s += at(truth, p);
    return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t pred) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < num_classes; ++t) s += at(t, pred);
    return s;
}

ConfusionMatrix confusion_matrix(const LabelAssignment& truth, const std::vector<IdPrediction>& predictions,
                                 std::size_t num_classes) {
    std::vector<std::size_t> t;
    std::vector<Prediction> p;
    t.reserve(predictions.size());
    p.reserve(predictions.size());
    for (const auto& [id, pred] : predictions) {
        const auto cls = truth.find(id);
        if (!cls) throw Error("confusion matrix: id '" + id + "' has no ground-truth label");
        t.push_back(*cls);
        p.push_back(pred);
    }
    return confusion_matrix(t, p, num_classes);
}

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& truth,
                                 const std::vector<Prediction>& predictions, std::size_t num_classes) {
    if (truth.size() != predictions.size()) throw Error("confusion matrix: length mismatch");
    ConfusionMatrix cm{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0), 0};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= num_classes) throw Error("confusion matrix: true class out of range");
        if (!predictions[i]) {
            ++cm.indeterminate;
            continue;
        }
        if (*predictions[i] >= num_classes) throw Error("confusion matrix: predicted class out of range");
        ++cm.counts[truth[i] * num_classes + *predictions[i]];
    }
    return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double kappa_from_table(const std::vector<std::size_t>& table, std::size_t k) {
    const auto n = std::accumulate(table.begin(), table.end(), std::size_t{0});
    if (n == 0) return 0.0;
    std::size_t agree = 0;
    double expected = 0;
    for (std::size_t c = 0; c < k; ++c) {
        agree += table[c * k + c];
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += table[c * k + j];
            col += table[j * k + c];
        }
        expected += static_cast<double>(row) * static_cast<double>(col);
    }
    const double nn = static_cast<double>(n);
    const double po = static_cast<double>(agree) / nn;
    const double pe = expected / (nn * nn);
    if (pe == 1.0) return 1.0;
    return (po - pe) / (1.0 - pe);
}

}  // namespace

MetricsReport classification_metrics(const ConfusionMatrix& cm) {
    const auto k = cm.num_classes;
    const auto tallied = cm.total();
    if (k == 0 || tallied + cm.indeterminate == 0) throw Error("metrics: empty confusion matrix");

    MetricsReport r;
    r.indeterminate = cm.indeterminate;
    std::size_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        trace += cm.at(c, c);
        ClassMetrics m;
        m.precision = ratio(cm.at(c, c), cm.col_sum(c));
        m.recall = ratio(cm.at(c, c), cm.row_sum(c));
        m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.per_class.push_back(m);
    }
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
    r.accuracy = ratio(trace, tallied + cm.indeterminate);
    r.kappa = cohen_kappa(cm);
    return r;
}

double cohen_kappa(const ConfusionMatrix& cm) { return kappa_from_table(cm.counts, cm.num_classes); }

double cohen_kappa(const LabelAssignment& rater_a, const LabelAssignment& rater_b, std::size_t num_classes) {
    std::vector<std::size_t> table(num_classes * num_classes, 0);
    std::size_t shared = 0;
    for (const auto& [id, a] : rater_a.entries()) {
        const auto b = rater_b.find(id);
        if (!b) continue;
        if (a >= num_classes || *b >= num_classes) throw Error("kappa: class index out of range");
        ++table[a * num_classes + *b];
        ++shared;
    }
    if (shared == 0) throw Error("kappa: raters share no ids");
    return kappa_from_table(table, num_classes);
}

std::string metrics_json(const MetricsReport& report, const ClassCatalog& catalog) {
    nlohmann::ordered_json j;
    j["accuracy"] = report.accuracy;
    j["macro_precision"] = report.macro_precision;
    j["macro_recall"] = report.macro_recall;
    j["macro_f1"] = report.macro_f1;
    j["kappa"] = report.kappa;
    auto per_class = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        nlohmann::ordered_json e;
        e["class"] = c < catalog.size() ? catalog.name(c) : std::to_string(c);
        e["precision"] = report.per_class[c].precision;
        e["recall"] = report.per_class[c].recall;
        e["f1"] = report.per_class[c].f1;
        per_class.push_back(std::move(e));
    }
    j["per_class"] = std::move(per_class);
    j["indeterminate"] = report.indeterminate;
    return j.dump(2) + "\n";
}

}  // namespace ssgl
