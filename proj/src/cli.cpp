#include "ssgl/cli.hpp"

#include "ssgl/dataset.hpp"
#include "ssgl/graph.hpp"
#include "ssgl/image.hpp"
#include "ssgl/metrics.hpp"
#include "ssgl/solver.hpp"
#include "ssgl/synthetic.hpp"

#include "csv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <set>

namespace ssgl {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::optional<double> parse_sigma(const std::string& text) {
    if (text == "auto") return std::nullopt;
    return parse_real(text, "sigma");
}

std::vector<double> parse_weights(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    for (const auto& cell : detail::split_cells(text)) out.push_back(parse_real(cell, "severity weight"));
    return out;
}

struct GraphFlags {
    std::string method = "knn";
    std::size_t k = 10;
    double epsilon = 1.0;
    std::string kernel = "rbf";
    std::string sigma = "auto";
    bool standardize = false;

    void attach(CLI::App* app) {
        app->add_option("--method", method, "knn | epsilon | full");
        app->add_option("--k", k, "neighbors per node (knn)");
        app->add_option("--epsilon", epsilon, "distance radius (epsilon)");
        app->add_option("--kernel", kernel, "rbf | cosine");
        app->add_option("--sigma", sigma, "rbf bandwidth, or auto for the median pairwise distance");
        app->add_flag("--standardize,!--no-standardize", standardize, "z-score features before measuring distances");
    }

    GraphConfig resolve(unsigned threads) const {
        GraphConfig g;
        g.method = parse_graph_method(method);
        g.k = k;
        g.epsilon = epsilon;
        g.kernel = parse_kernel(kernel);
        g.sigma = parse_sigma(sigma);
        g.standardize = standardize;
        g.threads = threads;
        g.validate();
        return g;
    }
};

struct SolverFlags {
    double lambda = 1.0;
    double gamma = 1.0;
    double alpha = 0.0;
    std::string weights;
    double threshold = 0.5;
    double tol = 1e-6;
    std::size_t max_iter = 1000;
    bool clamp = false;
    std::string laplacian = "unnormalized";
    std::string linear = "auto";

    void attach(CLI::App* app) {
        app->add_option("--lambda", lambda, "Laplacian smoothness weight");
        app->add_option("--gamma", gamma, "pull towards the initial labels (> 0)");
        app->add_option("--alpha", alpha, "severity-loss weight");
        app->add_option("--weights", weights, "comma-separated per-class severity weights; empty = class index");
        app->add_option("--threshold", threshold, "binary decision threshold");
        app->add_option("--tol", tol, "stop when max |Y_t - Y_{t-1}| < tol");
        app->add_option("--max-iter", max_iter, "iteration cap");
        app->add_flag("--clamp", clamp, "hold labeled rows of Y at their initial values");
        app->add_option("--laplacian", laplacian, "unnormalized | normalized");
        app->add_option("--linear-solver", linear, "auto | dense | cg");
    }

    SolverConfig resolve(unsigned threads) const {
        SolverConfig s;
        s.lambda = lambda;
        s.gamma = gamma;
        s.alpha = alpha;
        s.severity_weights = parse_weights(weights);
        s.threshold = threshold;
        s.tol = tol;
        s.max_iter = max_iter;
        s.clamp_labeled = clamp;
        s.laplacian_kind = parse_laplacian_kind(laplacian);
        s.linear_solver = parse_linear_solver(linear);
        s.threads = threads;
        s.validate();
        return s;
    }
};

json solver_json(const SolverConfig& s) {
    json j;
    j["lambda"] = s.lambda;
    j["gamma"] = s.gamma;
    j["alpha"] = s.alpha;
    j["severity_weights"] = s.severity_weights;
    j["threshold"] = s.threshold;
    j["tol"] = s.tol;
    j["max_iter"] = s.max_iter;
    j["clamp_labeled"] = s.clamp_labeled;
    j["laplacian"] = to_string(s.laplacian_kind);
    j["linear_solver"] = to_string(s.linear_solver);
    return j;
}

// ---- subcommand bodies -------------------------------------------------------

struct AugmentArgs {
    fs::path in, out;
    std::string ops;
    std::uint64_t seed = 0;
};

void run_augment(const AugmentArgs& a, std::ostream& out) {
    validate_ops(a.ops);
    const auto img = apply_ops(read_pnm(a.in), a.ops, a.seed);
    write_pnm(img, a.out);
    out << "augment: wrote " << a.out.string() << " (" << img.width() << "x" << img.height() << ")\n";
}

struct FeaturesArgs {
    fs::path images, out;
    std::size_t grid = 8;
    std::size_t bins = 16;
};

void run_features(const FeaturesArgs& a, std::ostream& out) {
    if (a.grid == 0 || a.bins == 0) throw Error("features: grid and bins must be >= 1");
    if (!fs::is_directory(a.images)) throw Error("features: not a directory: " + a.images.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.images)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("features: no .pgm/.ppm/.pnm files in " + a.images.string());
    std::vector<std::string> ids;
    std::vector<double> values;
    for (const auto& f : files) {
        ids.push_back(f.stem().string());
        const auto v = extract_features(read_pnm(f), a.grid, a.bins);
        values.insert(values.end(), v.begin(), v.end());
    }
    const Dataset ds(std::move(ids), a.grid * a.grid + a.bins, std::move(values));
    write_features_csv(a.out, ds);
    out << "features: wrote " << ds.size() << " rows x " << ds.dim() << " features to " << a.out.string() << "\n";
}

struct GraphArgs {
    fs::path features, out;
    GraphFlags graph;
    unsigned threads = 1;
};

void run_graph(const GraphArgs& a, std::ostream& out) {
    const auto cfg = a.graph.resolve(a.threads);
    const auto ds = load_features_csv(a.features);
    const auto g = build_graph(ds, cfg);
    write_edgelist(g, a.out);
    out << "graph: wrote " << g.edges().size() << " edges over " << g.size() << " nodes to " << a.out.string() << "\n";
}

struct SplitArgs {
    fs::path features, labels, catalog, out;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool stratified = false;
};

void run_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
    const auto catalog = load_catalog(a.catalog);
    const auto ds = load_features_csv(a.features);
    const auto truth = load_labels_csv(a.labels, catalog);
    const auto result = train_test_split(ds, truth, {a.test_fraction, a.seed, a.stratified});
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    const std::set<std::string> test(result.test.begin(), result.test.end());
    std::string text = "id,set\n";
    for (const auto& id : ds.ids()) text += id + (test.count(id) ? ",test\n" : ",train\n");
    write_file_atomic(a.out, text);
    out << "split: " << result.train.size() << " train, " << result.test.size() << " test -> " << a.out.string() << "\n";
}

struct SubsetArgs {
    fs::path features, labels, catalog, out;
    double fraction = 0.05;
    std::uint64_t seed = 0;
};

void run_label_subset(const SubsetArgs& a, std::ostream& out) {
    const auto catalog = load_catalog(a.catalog);
    const auto ds = load_features_csv(a.features);
    const auto truth = load_labels_csv(a.labels, catalog);
    const auto subset = stratified_label_subset(ds, truth, a.fraction, a.seed);
    write_labels_csv(a.out, subset, catalog);
    out << "label-subset: " << subset.size() << " of " << ds.size() << " samples labeled -> " << a.out.string() << "\n";
}

struct FitArgs {
    fs::path features, graph, labels, catalog, scores, report;
    SolverFlags solver;
    unsigned threads = 1;
};

void run_fit(const FitArgs& a, std::ostream& out) {
    const auto cfg = a.solver.resolve(a.threads);
    const auto catalog = load_catalog(a.catalog);
    const auto ds = load_features_csv(a.features);
    const auto g = read_edgelist(a.graph);
    if (g.size() != ds.size()) {
        throw Error("fit: graph has " + std::to_string(g.size()) + " nodes but the feature file has " +
                    std::to_string(ds.size()) + " rows");
    }
    const auto labeled = load_labels_csv(a.labels, catalog);
    if (labeled.empty()) throw Error("fit: no labeled samples");
    const auto y0 = init_label_matrix(ds.size(), catalog.size(), labeled.rows(ds));
    const auto result = fit(g, y0.initial, cfg);
    const auto pred = predict(result.scores, cfg);

    // Eigen is column-major; the score file wants rows.
    std::vector<double> flat(result.scores.size());
    for (Eigen::Index i = 0; i < result.scores.rows(); ++i) {
        for (Eigen::Index c = 0; c < result.scores.cols(); ++c) {
            flat[static_cast<std::size_t>(i * result.scores.cols() + c)] = result.scores(i, c);
        }
    }

    json report;
    report["iterations"] = result.report.iterations;
    report["converged"] = result.report.converged;
    report["final_residual"] = result.report.final_residual;
    report["objective"] = result.report.objective_trace;
    report["residual"] = result.report.residual_trace;
    std::size_t indeterminate = 0;
    for (const auto& p : pred.classes) indeterminate += p ? 0 : 1;
    report["indeterminate"] = indeterminate;
    report["labeled"] = labeled.size();
    report["solver"] = solver_json(cfg);
    const auto report_text = report.dump(2) + "\n";

    write_scores_csv(a.scores, ds.ids(), flat, catalog.size(), pred.classes, catalog);
    if (!a.report.empty()) write_file_atomic(a.report, report_text);
    out << "fit: " << result.report.iterations << " iterations, "
        << (result.report.converged ? "converged" : "NOT converged") << ", final residual "
        << format_real(result.report.final_residual) << "\n";
}

struct PredictArgs {
    fs::path scores, catalog, out;
    double threshold = 0.5;
};

void run_predict(const PredictArgs& a, std::ostream& out) {
    const auto catalog = load_catalog(a.catalog);
    const auto table = load_scores_csv(a.scores, catalog);
    Matrix f(static_cast<Eigen::Index>(table.ids.size()), static_cast<Eigen::Index>(table.num_classes));
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        for (std::size_t c = 0; c < table.num_classes; ++c) {
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = table.scores[i * table.num_classes + c];
        }
    }
    SolverConfig cfg;
    cfg.threshold = a.threshold;
    const auto pred = predict(f, cfg);
    write_predictions_csv(a.out, table.ids, pred.classes, catalog);
    out << "predict: wrote " << table.ids.size() << " predictions to " << a.out.string() << "\n";
}

struct EvaluateArgs {
    fs::path predictions, truth, catalog, exclude, out;
};

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const auto catalog = load_catalog(a.catalog);
    const auto truth = load_labels_csv(a.truth, catalog);
    auto preds = load_predictions_csv(a.predictions, catalog);
    if (!a.exclude.empty()) {
        const auto skip = load_labels_csv(a.exclude, catalog);
        std::erase_if(preds, [&](const auto& p) { return skip.contains(p.first); });
    }
    if (preds.empty()) throw Error("evaluate: no predictions left to score");
    const auto cm = confusion_matrix(truth, preds, catalog.size());
    const auto report = classification_metrics(cm);
    write_file_atomic(a.out, metrics_json(report, catalog));
    out << "evaluate: accuracy " << format_real(report.accuracy) << ", macro F1 " << format_real(report.macro_f1)
        << ", kappa " << format_real(report.kappa) << " over " << preds.size() << " samples\n";
}

struct BenchArgs {
    std::string family = "two-moons";
    std::size_t n = 400;
    std::optional<double> noise;
    std::uint64_t seed = 0;
    double label_fraction = 0.05;
    std::size_t trials = 10;
    GraphFlags graph;
    SolverFlags solver;
    fs::path csv, json_path;
    unsigned threads = 1;
};

void run_bench(const BenchArgs& a, std::ostream& out) {
    BenchmarkConfig cfg;
    if (a.family == "two-moons") {
        cfg.data.family = SyntheticFamily::two_moons;
        cfg.data.n = a.n;
        cfg.data.noise = a.noise.value_or(0.1);
        cfg.data.seed = a.seed;
    } else if (a.family == "severity") {
        cfg.data = severity_preset(a.n, a.noise.value_or(1.0), a.seed);
    } else {
        throw Error("bench: unknown family '" + a.family + "' (expected two-moons or severity)");
    }
    cfg.label_fraction = a.label_fraction;
    cfg.trials = a.trials;
    cfg.graph = a.graph.resolve(1);
    cfg.solver = a.solver.resolve(1);
    cfg.threads = a.threads;
    const auto result = run_benchmark(cfg);
    const auto csv_text = benchmark_csv(result);
    const auto json_text = benchmark_json(result, cfg);
    write_file_atomic(a.csv, csv_text);
    if (!a.json_path.empty()) write_file_atomic(a.json_path, json_text);
    auto show = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("n/a"); };
    out << "bench: ssgl accuracy " << show(result.ssgl.accuracy_mean) << " +- " << show(result.ssgl.accuracy_std)
        << ", 1nn accuracy " << show(result.baseline.accuracy_mean) << " +- " << show(result.baseline.accuracy_std)
        << "\n";
}

void guarded(std::function<void()> body, int& status, std::ostream& err) {
    try {
        body();
        status = 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        status = 1;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graph-based semi-supervised learning toolkit", "ssgl"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    int status = 0;
    std::function<void()> action;

    AugmentArgs aug;
    auto* c_aug = app.add_subcommand("augment", "apply an augmentation op list to a PGM/PPM image");
    c_aug->add_option("--in", aug.in, "input image")->required();
    c_aug->add_option("--out", aug.out, "output image")->required();
    c_aug->add_option("--ops", aug.ops,
                      "comma-separated ops: rot90, rot:DEG, flip-h, flip-v, crop:X:Y:W:H, resize:W:H, stretch, "
                      "noise:SIGMA, blur:SIGMA")
        ->required();
    c_aug->add_option("--seed", aug.seed, "noise seed");
    c_aug->callback([&] { action = [&] { run_augment(aug, out); }; });

    FeaturesArgs feat;
    auto* c_feat = app.add_subcommand("features", "extract a feature CSV from a directory of PGM/PPM images");
    c_feat->add_option("--images", feat.images, "image directory")->required();
    c_feat->add_option("--out", feat.out, "feature CSV")->required();
    c_feat->add_option("--grid", feat.grid, "downsampled grid side");
    c_feat->add_option("--bins", feat.bins, "intensity histogram bins");
    c_feat->callback([&] { action = [&] { run_features(feat, out); }; });

    GraphArgs gr;
    auto* c_graph = app.add_subcommand("graph", "build a similarity graph edge list from a feature CSV");
    c_graph->add_option("--features", gr.features, "feature CSV")->required();
    c_graph->add_option("--out", gr.out, "edge list")->required();
    gr.graph.attach(c_graph);
    c_graph->add_option("--threads", gr.threads, "worker threads, 0 = all cores");
    c_graph->callback([&] { action = [&] { run_graph(gr, out); }; });

    SplitArgs sp;
    auto* c_split = app.add_subcommand("split", "train/test split of a labeled dataset");
    c_split->add_option("--features", sp.features, "feature CSV")->required();
    c_split->add_option("--labels", sp.labels, "ground-truth label CSV")->required();
    c_split->add_option("--catalog", sp.catalog, "class catalog, one name per line")->required();
    c_split->add_option("--out", sp.out, "output CSV id,set")->required();
    c_split->add_option("--test-fraction", sp.test_fraction, "share of samples in the test set");
    c_split->add_option("--seed", sp.seed, "shuffle seed");
    c_split->add_flag("--stratified", sp.stratified, "split each class separately");
    c_split->callback([&] { action = [&] { run_split(sp, out, err); }; });

    SubsetArgs sub;
    auto* c_sub = app.add_subcommand("label-subset", "draw a stratified labeled subset from full ground truth");
    c_sub->add_option("--features", sub.features, "feature CSV")->required();
    c_sub->add_option("--labels", sub.labels, "ground-truth label CSV")->required();
    c_sub->add_option("--catalog", sub.catalog, "class catalog")->required();
    c_sub->add_option("--out", sub.out, "labeled subset CSV")->required();
    c_sub->add_option("--fraction", sub.fraction, "per-class labeled fraction");
    c_sub->add_option("--seed", sub.seed, "selection seed");
    c_sub->callback([&] { action = [&] { run_label_subset(sub, out); }; });

    FitArgs ft;
    auto* c_fit = app.add_subcommand("fit", "propagate labels over a graph");
    c_fit->add_option("--features", ft.features, "feature CSV (defines sample ids and order)")->required();
    c_fit->add_option("--graph", ft.graph, "edge list")->required();
    c_fit->add_option("--labels", ft.labels, "labeled subset CSV")->required();
    c_fit->add_option("--catalog", ft.catalog, "class catalog")->required();
    c_fit->add_option("--scores", ft.scores, "output score CSV")->required();
    c_fit->add_option("--report", ft.report, "output solve report JSON");
    ft.solver.attach(c_fit);
    c_fit->add_option("--threads", ft.threads, "worker threads, 0 = all cores");
    c_fit->callback([&] { action = [&] { run_fit(ft, out); }; });

    PredictArgs pr;
    auto* c_pred = app.add_subcommand("predict", "turn a score CSV into class predictions");
    c_pred->add_option("--scores", pr.scores, "score CSV")->required();
    c_pred->add_option("--catalog", pr.catalog, "class catalog")->required();
    c_pred->add_option("--out", pr.out, "prediction CSV")->required();
    c_pred->add_option("--threshold", pr.threshold, "binary decision threshold");
    c_pred->callback([&] { action = [&] { run_predict(pr, out); }; });

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "score predictions against ground truth");
    c_eval->add_option("--predictions", ev.predictions, "prediction or score CSV")->required();
    c_eval->add_option("--truth", ev.truth, "ground-truth label CSV")->required();
    c_eval->add_option("--catalog", ev.catalog, "class catalog")->required();
    c_eval->add_option("--exclude", ev.exclude, "label CSV of ids to leave out (e.g. the labeled subset)");
    c_eval->add_option("--out", ev.out, "metrics JSON")->required();
    c_eval->callback([&] { action = [&] { run_evaluate(ev, out); }; });

    BenchArgs bn;
    auto* c_bench = app.add_subcommand("bench", "synthetic benchmark of label propagation against 1-NN");
    c_bench->add_option("--family", bn.family, "two-moons | severity");
    c_bench->add_option("--n", bn.n, "samples per trial");
    c_bench->add_option("--noise", bn.noise, "noise std (default 0.1 for two-moons, 1.0 for severity)");
    c_bench->add_option("--seed", bn.seed, "base seed; trial t uses seed + t");
    c_bench->add_option("--label-fraction", bn.label_fraction, "per-class labeled fraction");
    c_bench->add_option("--trials", bn.trials, "number of trials");
    bn.graph.standardize = true;
    bn.graph.attach(c_bench);
    bn.solver.attach(c_bench);
    c_bench->add_option("--csv", bn.csv, "per-trial CSV")->required();
    c_bench->add_option("--json", bn.json_path, "summary JSON");
    c_bench->add_option("--threads", bn.threads, "trials run concurrently, 0 = all cores");
    c_bench->callback([&] { action = [&] { run_bench(bn, out); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    guarded(action, status, err);
    return status;
}

}  // namespace ssgl
