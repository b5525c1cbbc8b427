#include "ssgl/graph.hpp"

#include "csv.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

namespace ssgl {

void GraphConfig::validate() const {
    if (method == GraphMethod::knn && k == 0) throw Error("graph: k must be >= 1");
    if (method == GraphMethod::epsilon && !(epsilon > 0 && std::isfinite(epsilon))) {
        throw Error("graph: epsilon must be > 0");
    }
    if (sigma && !(*sigma > 0 && std::isfinite(*sigma))) throw Error("graph: sigma must be > 0");
}

SimilarityGraph::SimilarityGraph(std::size_t n, std::vector<Edge> edges, GraphConfig config,
                                 std::optional<double> resolved_sigma)
    : n_(n), edges_(std::move(edges)), config_(config), resolved_sigma_(resolved_sigma) {
    for (auto& e : edges_) {
        if (e.i == e.j) throw Error("graph: self-loop at node " + std::to_string(e.i));
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.j >= n_) throw Error("graph: edge index out of range");
        if (!(e.weight > 0 && e.weight <= 1)) {
            throw Error("graph: weight outside (0, 1] on edge " + std::to_string(e.i) + "-" +
                        std::to_string(e.j));
        }
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
    for (std::size_t t = 1; t < edges_.size(); ++t) {
        if (edges_[t].i == edges_[t - 1].i && edges_[t].j == edges_[t - 1].j) {
            throw Error("graph: duplicate edge " + std::to_string(edges_[t].i) + "-" +
                        std::to_string(edges_[t].j));
        }
    }
}

std::vector<double> SimilarityGraph::degrees() const {
    std::vector<double> d(n_, 0.0);
    for (const auto& e : edges_) {
        d[e.i] += e.weight;
        d[e.j] += e.weight;
    }
    return d;
}

SimilarityGraph SimilarityGraph::scaled(double factor) const {
    auto edges = edges_;
    for (auto& e : edges) e.weight *= factor;
    return SimilarityGraph(n_, std::move(edges), config_, resolved_sigma_);
}

SimilarityGraph SimilarityGraph::permuted(std::span<const std::size_t> order) const {
    if (order.size() != n_) throw Error("graph: permutation size mismatch");
    std::vector<std::size_t> new_index(n_);
    for (std::size_t i = 0; i < n_; ++i) new_index[order[i]] = i;
    auto edges = edges_;
    for (auto& e : edges) {
        e.i = new_index[e.i];
        e.j = new_index[e.j];
    }
    return SimilarityGraph(n_, std::move(edges), config_, resolved_sigma_);
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0;
        for (auto p = row_ptr[r]; p < row_ptr[r + 1]; ++p) acc += values[p] * x[cols[p]];
        y[r] = acc;
    }
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values[static_cast<std::size_t>(it - cols.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(n);
    for (std::size_t r = 0; r < n; ++r) d[r] = at(r, r);
    return d;
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error("similarity: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
    }
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (!std::isfinite(x[t]) || !std::isfinite(y[t])) throw Error("similarity: non-finite input");
    }
}

double rbf_from_squared(double d2, double sigma) { return std::exp(-d2 / (2.0 * sigma * sigma)); }

double cosine_unchecked(std::span<const double> x, std::span<const double> y) {
    double dot = 0, nx = 0, ny = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        dot += x[t] * y[t];
        nx += x[t] * x[t];
        ny += y[t] * y[t];
    }
    if (nx == 0 || ny == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), 0.0, 1.0);
}

}  // namespace

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double acc = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = x[t] - y[t];
        acc += d * d;
    }
    return acc;
}

double rbf_similarity(std::span<const double> x, std::span<const double> y, double sigma) {
    check_pair(x, y);
    if (!(sigma > 0) || !std::isfinite(sigma)) throw Error("similarity: sigma must be > 0");
    return rbf_from_squared(squared_distance(x, y), sigma);
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    return cosine_unchecked(x, y);
}

Dataset standardized(const Dataset& dataset) {
    const auto n = dataset.size();
    const auto d = dataset.dim();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += dataset.row(i)[c];
    for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = dataset.row(i)[c] - mean[c];
            sd[c] += dev * dev;
        }
    for (auto& s : sd) s = std::sqrt(s / static_cast<double>(std::max<std::size_t>(n, 1)));

    std::vector<double> values(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            values[i * d + c] = sd[c] > 0 ? (dataset.row(i)[c] - mean[c]) / sd[c] : 0.0;
        }
    return Dataset(dataset.ids(), d, std::move(values), dataset.catalog());
}

double median_sigma(const Dataset& dataset) {
    const auto n = dataset.size();
    if (n < 2) throw Error("median_sigma: need at least 2 samples");
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            dist.push_back(std::sqrt(squared_distance(dataset.row(i), dataset.row(j))));
        }
    const auto m = dist.size();
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (m % 2 == 0) {
        const double lower = *std::max_element(dist.begin(), mid);
        median = 0.5 * (lower + median);
    }
    if (!(median > 0)) throw Error("median_sigma: degenerate dataset (median pairwise distance is 0)");
    return median;
}

SimilarityGraph build_graph(const Dataset& input, const GraphConfig& config) {
    config.validate();
    const auto n = input.size();
    if (config.method == GraphMethod::knn && config.k >= n) {
        throw Error("graph: knn requires k < n (k=" + std::to_string(config.k) +
                    ", n=" + std::to_string(n) + ")");
    }
    const Dataset data = config.standardize ? standardized(input) : input;

    std::optional<double> sigma;
    if (config.kernel == Kernel::rbf) sigma = config.sigma ? *config.sigma : median_sigma(data);

    // Per row: partner indices j with squared distance. For knn, j may be < i.
    std::vector<std::vector<std::pair<std::size_t, double>>> partners(n);
    detail::parallel_for(n, config.threads, [&](std::size_t i) {
        auto& out = partners[i];
        if (config.method == GraphMethod::knn) {
            std::vector<std::pair<double, std::size_t>> cand;
            cand.reserve(n - 1);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) cand.emplace_back(squared_distance(data.row(i), data.row(j)), j);
            }
            // Pair ordering breaks distance ties by lower index.
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(config.k), cand.end());
            for (std::size_t t = 0; t < config.k; ++t) out.emplace_back(cand[t].second, cand[t].first);
        } else {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d2 = squared_distance(data.row(i), data.row(j));
                if (config.method == GraphMethod::full || std::sqrt(d2) <= config.epsilon) {
                    out.emplace_back(j, d2);
                }
            }
        }
    });

    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, d2] : partners[i]) {
            const auto key = std::minmax(i, j);
            if (!seen.insert(key).second) continue;
            const double w = config.kernel == Kernel::rbf ? rbf_from_squared(d2, *sigma)
                                                          : cosine_unchecked(data.row(i), data.row(j));
            if (w > 0) edges.push_back({key.first, key.second, std::min(w, 1.0)});
        }
    }
    return SimilarityGraph(n, std::move(edges), config, sigma);
}

Laplacian laplacian(const SimilarityGraph& graph, LaplacianKind kind) {
    const auto n = graph.size();
    const auto deg = graph.degrees();
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = deg[i] > 0 ? 1.0 / std::sqrt(deg[i]) : 0.0;

    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].emplace_back(i, kind == LaplacianKind::unnormalized ? deg[i] : 1.0);
    }
    for (const auto& e : graph.edges()) {
        const double v = kind == LaplacianKind::unnormalized ? -e.weight
                                                            : -e.weight * inv_sqrt[e.i] * inv_sqrt[e.j];
        rows[e.i].emplace_back(e.j, v);
        rows[e.j].emplace_back(e.i, v);
    }
    Laplacian out{kind, {}};
    auto& m = out.matrix;
    m.n = n;
    m.row_ptr.assign(1, 0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end());
        for (const auto& [c, v] : r) {
            m.cols.push_back(c);
            m.values.push_back(v);
        }
        m.row_ptr.push_back(m.cols.size());
    }
    return out;
}

std::string to_string(GraphMethod m) {
    switch (m) {
        case GraphMethod::knn: return "knn";
        case GraphMethod::epsilon: return "epsilon";
        case GraphMethod::full: return "full";
    }
    return "?";
}

std::string to_string(Kernel k) { return k == Kernel::rbf ? "rbf" : "cosine"; }

std::string to_string(LaplacianKind k) {
    return k == LaplacianKind::unnormalized ? "unnormalized" : "symmetric-normalized";
}

GraphMethod parse_graph_method(std::string_view s) {
    if (s == "knn") return GraphMethod::knn;
    if (s == "epsilon") return GraphMethod::epsilon;
    if (s == "full") return GraphMethod::full;
    throw Error("unknown graph method '" + std::string(s) + "'");
}

Kernel parse_kernel(std::string_view s) {
    if (s == "rbf") return Kernel::rbf;
    if (s == "cosine") return Kernel::cosine;
    throw Error("unknown kernel '" + std::string(s) + "'");
}

LaplacianKind parse_laplacian_kind(std::string_view s) {
    if (s == "unnormalized") return LaplacianKind::unnormalized;
    if (s == "symmetric-normalized" || s == "normalized") return LaplacianKind::symmetric_normalized;
    throw Error("unknown laplacian kind '" + std::string(s) + "'");
}

std::string format_edgelist(const SimilarityGraph& graph) {
    const auto& cfg = graph.config();
    std::string param;
    switch (cfg.method) {
        case GraphMethod::knn: param = "k:" + std::to_string(cfg.k); break;
        case GraphMethod::epsilon: param = "epsilon:" + format_real(cfg.epsilon); break;
        case GraphMethod::full: param = "all"; break;
    }
    if (graph.resolved_sigma()) param += ";sigma:" + format_real(*graph.resolved_sigma());
    param += std::string(";standardize:") + (cfg.standardize ? "1" : "0");

    std::string out = "# ssgl-graph v1\n# n=" + std::to_string(graph.size()) + " method=" +
                      to_string(cfg.method) + " kernel=" + to_string(cfg.kernel) + " param=" + param + "\n";
    for (const auto& e : graph.edges()) {
        out += std::to_string(e.i) + " " + std::to_string(e.j) + " " + format_real(e.weight) + "\n";
    }
    return out;
}

void write_edgelist(const SimilarityGraph& graph, const std::filesystem::path& path) {
    write_file_atomic(path, format_edgelist(graph));
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t p = 0;
    while (p < line.size()) {
        while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
        const auto start = p;
        while (p < line.size() && line[p] != ' ' && line[p] != '\t') ++p;
        if (p > start) out.push_back(line.substr(start, p - start));
    }
    return out;
}

}  // namespace

SimilarityGraph parse_edgelist(std::string_view text, std::string_view source) {
    std::vector<std::pair<std::size_t, std::string_view>> lines;
    {
        std::size_t start = 0, no = 0;
        while (start < text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            auto line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            ++no;
            if (!line.empty()) lines.emplace_back(no, line);
            start = end + 1;
        }
    }
    const std::string src(source);
    if (lines.size() < 2 || lines[0].second != "# ssgl-graph v1") {
        throw Error(src + ": missing '# ssgl-graph v1' header");
    }
    GraphConfig cfg;
    std::optional<std::size_t> n;
    std::optional<double> sigma;
    const auto meta = split_ws(lines[1].second);
    if (meta.empty() || meta[0] != "#") throw Error(detail::at_line(src, lines[1].first) + ": missing metadata line");
    for (std::size_t t = 1; t < meta.size(); ++t) {
        const auto eq = meta[t].find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = meta[t].substr(0, eq);
        const auto val = meta[t].substr(eq + 1);
        if (key == "n") {
            n = parse_index(val, "edge list n");
        } else if (key == "method") {
            cfg.method = parse_graph_method(val);
        } else if (key == "kernel") {
            cfg.kernel = parse_kernel(val);
        } else if (key == "param") {
            for (auto item : detail::split_cells(val, ';')) {
                const auto colon = item.find(':');
                if (colon == std::string_view::npos) continue;
                const auto pk = item.substr(0, colon);
                const auto pv = item.substr(colon + 1);
                if (pk == "k") cfg.k = parse_index(pv, "edge list k");
                if (pk == "epsilon") cfg.epsilon = parse_real(pv, "edge list epsilon");
                if (pk == "sigma") sigma = parse_real(pv, "edge list sigma");
                if (pk == "standardize") cfg.standardize = pv == "1";
            }
        }
    }
    if (!n) throw Error(detail::at_line(src, lines[1].first) + ": metadata line lacks n=<count>");
    cfg.sigma = sigma;

    std::vector<Edge> edges;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t t = 2; t < lines.size(); ++t) {
        const auto where = detail::at_line(src, lines[t].first);
        if (lines[t].second.front() == '#') continue;
        const auto f = split_ws(lines[t].second);
        if (f.size() != 3) throw Error(where + ": malformed edge line (expected 'i j w')");
        const auto i = parse_index(f[0], where);
        const auto j = parse_index(f[1], where);
        const auto w = parse_real(f[2], where);
        if (i == j) throw Error(where + ": self-loop");
        if (i >= *n || j >= *n) throw Error(where + ": index out of range (n=" + std::to_string(*n) + ")");
        if (!(w > 0 && w <= 1)) throw Error(where + ": weight must be in (0, 1]");
        if (!seen.insert(std::minmax(i, j)).second) throw Error(where + ": duplicate pair");
        edges.push_back({std::min(i, j), std::max(i, j), w});
    }
    return SimilarityGraph(*n, std::move(edges), cfg, sigma);
}

SimilarityGraph read_edgelist(const std::filesystem::path& path) {
    return parse_edgelist(read_file(path), path.string());
}

}  // namespace ssgl
