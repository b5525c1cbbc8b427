#include "ssgl/synthetic.hpp"

#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace ssgl {

std::size_t SyntheticSpec::num_classes() const {
    if (family == SyntheticFamily::two_moons) return 2;
    std::size_t k = 0;
    for (const auto& b : blobs) k = std::max(k, b.cls + 1);
    return k;
}

void SyntheticSpec::validate() const {
    if (!(noise >= 0) || !std::isfinite(noise)) throw Error("synthetic: noise must be >= 0");
    if (family == SyntheticFamily::two_moons) {
        if (n % 2 != 0) throw Error("two-moons: n must be even (got " + std::to_string(n) + ")");
        if (n < 4) throw Error("two-moons: n must be >= 4");
        return;
    }
    if (blobs.empty()) throw Error("blobs: no centers given");
    const auto dim = blobs.front().center.size();
    if (dim == 0) throw Error("blobs: centers need at least one coordinate");
    double sum = 0;
    for (const auto& b : blobs) {
        if (b.center.size() != dim) throw Error("blobs: centers differ in dimension");
        if (!(b.fraction >= 0) || !std::isfinite(b.fraction)) throw Error("blobs: fractions must be >= 0");
        sum += b.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("blobs: fractions must sum to 1");
    if (num_classes() < 2) throw Error("blobs: need at least 2 classes");
    if (n < 2 * num_classes()) throw Error("blobs: n must be >= 2K");
}

namespace {

std::vector<std::string> make_ids(std::size_t n) {
    const auto width = std::max<std::size_t>(4, std::to_string(n).size());
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto digits = std::to_string(i);
        ids[i] = "s" + std::string(width - std::min(width, digits.size()), '0') + digits;
    }
    return ids;
}

ClassCatalog numbered_catalog(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k; ++c) names.push_back("class" + std::to_string(c));
    return ClassCatalog(std::move(names));
}

LabeledData assemble(std::size_t dim, std::vector<double> values, const std::vector<std::size_t>& classes,
                     ClassCatalog catalog) {
    auto ids = make_ids(classes.size());
    LabeledData out{Dataset(ids, dim, std::move(values), std::move(catalog)), {}};
    for (std::size_t i = 0; i < classes.size(); ++i) out.truth.add(ids[i], classes[i]);
    return out;
}

}  // namespace

LabeledData gen_two_moons(const SyntheticSpec& spec) {
    if (spec.family != SyntheticFamily::two_moons) throw Error("gen_two_moons: wrong family");
    spec.validate();
    SplitMix64 rng(spec.seed);
    const auto half = spec.n / 2;
    std::vector<double> values;
    std::vector<std::size_t> classes;
    values.reserve(spec.n * 2);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        for (std::size_t i = 0; i < half; ++i) {
            const double t = std::numbers::pi * rng.uniform();
            double x = cls == 0 ? std::cos(t) : 1.0 - std::cos(t);
            double y = cls == 0 ? std::sin(t) : 0.5 - std::sin(t);
            if (spec.noise > 0) {
                x += spec.noise * rng.normal();
                y += spec.noise * rng.normal();
            }
            values.push_back(x);
            values.push_back(y);
            classes.push_back(cls);
        }
    }
    return assemble(2, std::move(values), classes, numbered_catalog(2));
}

std::vector<std::size_t> apportion(const std::vector<double>& fractions, std::size_t total) {
    std::vector<std::size_t> counts(fractions.size());
    std::vector<double> remainder(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double quota = fractions[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t t = 0; assigned < total && t < order.size(); ++t, ++assigned) ++counts[order[t]];
    return counts;
}

LabeledData gen_blobs(const SyntheticSpec& spec) {
    if (spec.family != SyntheticFamily::blobs) throw Error("gen_blobs: wrong family");
    spec.validate();
    std::vector<double> fractions;
    for (const auto& b : spec.blobs) fractions.push_back(b.fraction);
    const auto counts = apportion(fractions, spec.n);
    const auto dim = spec.blobs.front().center.size();

    SplitMix64 rng(spec.seed);
    std::vector<double> values;
    std::vector<std::size_t> classes;
    values.reserve(spec.n * dim);
    for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
        for (std::size_t i = 0; i < counts[b]; ++i) {
            for (double c : spec.blobs[b].center) values.push_back(spec.noise > 0 ? c + spec.noise * rng.normal() : c);
            classes.push_back(spec.blobs[b].cls);
        }
    }
    const auto k = spec.num_classes();
    return assemble(dim, std::move(values), classes, k == 5 ? ClassCatalog::severity_grades() : numbered_catalog(k));
}

LabeledData generate(const SyntheticSpec& spec) {
    return spec.family == SyntheticFamily::two_moons ? gen_two_moons(spec) : gen_blobs(spec);
}

SyntheticSpec severity_preset(std::size_t n, double noise, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.family = SyntheticFamily::blobs;
    spec.n = n;
    spec.noise = noise;
    spec.seed = seed;
    const double fractions[] = {0.35, 0.25, 0.20, 0.15, 0.05};
    for (std::size_t k = 0; k < 5; ++k) {
        spec.blobs.push_back({{2.5 * static_cast<double>(k), 0.0}, k, fractions[k]});
    }
    return spec;
}

std::vector<Prediction> one_nn_baseline(const Dataset& dataset, const LabelAssignment& labeled) {
    const auto rows = labeled.rows(dataset);
    if (rows.empty()) throw Error("1-NN baseline: no labeled samples");
    std::vector<Prediction> out(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t cls = 0;
        for (const auto& [row, c] : rows) {  // ascending row order, strict < keeps the lower index
            const double d = squared_distance(dataset.row(i), dataset.row(row));
            if (d < best) {
                best = d;
                cls = c;
            }
        }
        out[i] = cls;
    }
    return out;
}

std::optional<std::pair<double, double>> mean_std(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::make_pair(mean, std::sqrt(ss / n));
}

namespace {

TrialScore score_rows(const std::vector<std::size_t>& truth, const std::vector<Prediction>& pred, std::size_t k) {
    TrialScore s;
    s.recall.assign(k, std::nullopt);
    if (truth.empty()) return s;
    const auto cm = confusion_matrix(truth, pred, k);
    const auto m = classification_metrics(cm);
    s.accuracy = m.accuracy;
    s.macro_f1 = m.macro_f1;
    // Recall over every unlabeled member of c, so abstentions count as misses.
    std::vector<std::size_t> members(k, 0);
    for (auto t : truth) ++members[t];
    for (std::size_t c = 0; c < k; ++c) {
        if (members[c] > 0) s.recall[c] = static_cast<double>(cm.at(c, c)) / static_cast<double>(members[c]);
    }
    return s;
}

MethodSummary summarize(const std::vector<const TrialScore*>& scores, std::size_t k) {
    MethodSummary out;
    std::vector<double> acc, f1;
    std::vector<std::vector<double>> rec(k);
    for (const auto* s : scores) {
        if (s->accuracy) acc.push_back(*s->accuracy);
        if (s->macro_f1) f1.push_back(*s->macro_f1);
        for (std::size_t c = 0; c < k; ++c) {
            if (s->recall[c]) rec[c].push_back(*s->recall[c]);
        }
    }
    if (const auto a = mean_std(acc)) {
        out.accuracy_mean = a->first;
        out.accuracy_std = a->second;
    }
    if (const auto f = mean_std(f1)) {
        out.macro_f1_mean = f->first;
        out.macro_f1_std = f->second;
    }
    for (std::size_t c = 0; c < k; ++c) {
        const auto r = mean_std(rec[c]);
        out.recall_mean.push_back(r ? std::optional<double>(r->first) : std::nullopt);
    }
    return out;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
    config.data.validate();
    config.graph.validate();
    config.solver.validate();
    if (config.trials == 0) throw Error("benchmark: trials must be >= 1");
    if (!(config.label_fraction > 0 && config.label_fraction <= 1)) {
        throw Error("benchmark: label fraction must be in (0, 1]");
    }
    const auto k = config.data.num_classes();

    BenchmarkResult result;
    result.num_classes = k;
    result.trials.resize(config.trials);
    detail::parallel_for(config.trials, config.threads, [&](std::size_t t) {
        auto spec = config.data;
        spec.seed = config.data.seed + t;
        const auto data = generate(spec);
        const auto& ds = data.dataset;
        const auto labeled = stratified_label_subset(ds, data.truth, config.label_fraction, spec.seed);

        const auto graph = build_graph(ds, config.graph);
        const auto y0 = init_label_matrix(ds.size(), k, labeled.rows(ds));
        const auto fitted = fit(graph, y0.initial, config.solver);
        const auto ssgl_pred = predict(fitted.scores, config.solver).classes;
        const auto base_pred = one_nn_baseline(config.graph.standardize ? standardized(ds) : ds, labeled);

        std::vector<std::size_t> truth;
        std::vector<Prediction> ssgl_unlabeled, base_unlabeled;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (labeled.contains(ds.id(i))) continue;
            truth.push_back(*data.truth.find(ds.id(i)));
            ssgl_unlabeled.push_back(ssgl_pred[i]);
            base_unlabeled.push_back(base_pred[i]);
        }
        auto& rec = result.trials[t];
        rec.trial = t;
        rec.seed = spec.seed;
        rec.ssgl = score_rows(truth, ssgl_unlabeled, k);
        rec.baseline = score_rows(truth, base_unlabeled, k);
        rec.ssgl_iterations = fitted.report.iterations;
        rec.ssgl_converged = fitted.report.converged;
    });

    std::vector<const TrialScore*> ssgl_scores, base_scores;
    for (const auto& rec : result.trials) {
        ssgl_scores.push_back(&rec.ssgl);
        base_scores.push_back(&rec.baseline);
    }
    result.ssgl = summarize(ssgl_scores, k);
    result.baseline = summarize(base_scores, k);
    return result;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_real(*v) : "n/a"; }

nlohmann::ordered_json jnum(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json("n/a");
}

nlohmann::ordered_json summary_json(const MethodSummary& s) {
    nlohmann::ordered_json j;
    j["accuracy_mean"] = jnum(s.accuracy_mean);
    j["accuracy_std"] = jnum(s.accuracy_std);
    j["macro_f1_mean"] = jnum(s.macro_f1_mean);
    j["macro_f1_std"] = jnum(s.macro_f1_std);
    auto rec = nlohmann::ordered_json::array();
    for (const auto& r : s.recall_mean) rec.push_back(jnum(r));
    j["recall_mean"] = std::move(rec);
    return j;
}

}  // namespace

std::string benchmark_csv(const BenchmarkResult& result) {
    std::string out = "method,trial,accuracy,macro_f1";
    for (std::size_t c = 0; c < result.num_classes; ++c) out += ",recall_class" + std::to_string(c);
    out += "\n";
    auto emit = [&](const char* method, const TrialRecord& rec, const TrialScore& s) {
        out += std::string(method) + "," + std::to_string(rec.trial) + "," + cell(s.accuracy) + "," + cell(s.macro_f1);
        for (const auto& r : s.recall) out += "," + cell(r);
        out += "\n";
    };
    for (const auto& rec : result.trials) emit("ssgl", rec, rec.ssgl);
    for (const auto& rec : result.trials) emit("1nn", rec, rec.baseline);
    return out;
}

std::string benchmark_json(const BenchmarkResult& result, const BenchmarkConfig& config) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cfg;
    cfg["family"] = config.data.family == SyntheticFamily::two_moons ? "two-moons" : "blobs";
    cfg["n"] = config.data.n;
    cfg["noise"] = config.data.noise;
    cfg["seed"] = config.data.seed;
    cfg["trials"] = config.trials;
    cfg["label_fraction"] = config.label_fraction;
    cfg["graph"] = {{"method", to_string(config.graph.method)},
                    {"k", config.graph.k},
                    {"epsilon", config.graph.epsilon},
                    {"kernel", to_string(config.graph.kernel)},
                    {"sigma", config.graph.sigma ? nlohmann::ordered_json(*config.graph.sigma) : nlohmann::ordered_json("auto")},
                    {"standardize", config.graph.standardize}};
    cfg["solver"] = {{"lambda", config.solver.lambda},
                     {"gamma", config.solver.gamma},
                     {"alpha", config.solver.alpha},
                     {"severity_weights", config.solver.severity_weights},
                     {"tol", config.solver.tol},
                     {"max_iter", config.solver.max_iter},
                     {"clamp_labeled", config.solver.clamp_labeled},
                     {"laplacian", to_string(config.solver.laplacian_kind)}};
    j["config"] = std::move(cfg);
    j["ssgl"] = summary_json(result.ssgl);
    j["1nn"] = summary_json(result.baseline);
    std::size_t unconverged = 0;
    for (const auto& rec : result.trials) unconverged += rec.ssgl_converged ? 0 : 1;
    j["ssgl_unconverged_trials"] = unconverged;
    return j.dump(2) + "\n";
}

}  // namespace ssgl
