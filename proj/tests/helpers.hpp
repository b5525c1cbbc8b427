#pragma once

#include "ssgl/common.hpp"
#include "ssgl/dataset.hpp"
#include "ssgl/graph.hpp"
#include "ssgl/solver.hpp"

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

namespace testing_util {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::uint64_t counter = 0;
        ssgl::SplitMix64 rng(static_cast<std::uint64_t>(::getpid()) * 1000003u + counter++);
        path_ = fs::temp_directory_path() / ("ssgl-test-" + std::to_string(rng.next()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline ssgl::Dataset gaussian_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    ssgl::SplitMix64 rng(seed);
    std::vector<std::string> ids;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("p" + std::to_string(i));
        for (std::size_t d = 0; d < dim; ++d) values.push_back(rng.normal());
    }
    return ssgl::Dataset(std::move(ids), dim, std::move(values));
}

// One-hot rows for a random subset (at least one row per class when n allows), zero elsewhere.
inline ssgl::Matrix random_initial(std::size_t n, std::size_t k, double labeled_share, ssgl::SplitMix64& rng) {
    ssgl::Matrix y0 = ssgl::Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const bool labeled = i < k || rng.uniform() < labeled_share;
        if (labeled) y0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i < k ? i : rng.below(k))) = 1.0;
    }
    return y0;
}

inline double max_abs_diff(const ssgl::Matrix& a, const ssgl::Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing_util
