#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ssgl {

__extension__ using uint128 = unsigned __int128;

/// Raised for invalid input data, bad configuration and I/O failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SplitMix64 generator. Every random choice in the toolkit is drawn from one
/// of these, seeded explicitly, so runs are reproducible.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform_open_zero() noexcept {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    /// Unbiased integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        // Lemire's multiply-shift with rejection.
        uint128 m = static_cast<uint128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<uint128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal draw via the Box-Muller cosine branch.
    double normal() noexcept;

private:
    std::uint64_t state_;
};

/// Fisher-Yates shuffle in place.
template <typename Container>
void shuffle(Container& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

/// ceil() that ignores floating-point noise just above an integer, so that
/// 0.1 * 30 counts as 3 rather than 4.
std::size_t ceil_count(double x);

/// `%#.9g`: at least nine significant digits, trailing zeros kept.
std::string format_real(double v);

/// Shortest round-trip representation (`%.17g`).
std::string format_exact(double v);

/// Strict decimal parse of a whole token; throws Error on junk or non-finite.
double parse_real(std::string_view token, std::string_view what);

/// Strict unsigned parse of a whole token.
std::size_t parse_index(std::string_view token, std::string_view what);

/// Writes through a sibling temp file and renames on success, so a failed
/// write never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace ssgl
