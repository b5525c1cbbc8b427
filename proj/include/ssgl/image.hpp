#pragma once

#include "ssgl/common.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace ssgl {

/// 8-bit raster, row-major, channels interleaved. One (gray) or three (RGB) channels.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(std::size_t width, std::size_t height, std::size_t channels);
    RasterImage(std::size_t width, std::size_t height, std::size_t channels,
                std::vector<std::uint8_t> samples);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t channels() const noexcept { return channels_; }
    std::span<const std::uint8_t> samples() const noexcept { return samples_; }
    std::span<std::uint8_t> samples() noexcept { return samples_; }

    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return samples_[(y * width_ + x) * channels_ + c];
    }
    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
        return samples_[(y * width_ + x) * channels_ + c];
    }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t channels_ = 1;
    std::vector<std::uint8_t> samples_;
};

struct NoiseSpec {
    double sigma_fraction = 0.0;  // std of the noise as a fraction of 255
    std::uint64_t seed = 0;
};

enum class FlipAxis { horizontal, vertical };

RasterImage decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const RasterImage& image);
RasterImage read_pnm(const std::filesystem::path& path);
void write_pnm(const RasterImage& image, const std::filesystem::path& path);

RasterImage crop(const RasterImage& image, std::size_t x, std::size_t y, std::size_t w, std::size_t h);

/// Pixel-center bilinear resampling, edge-clamped.
RasterImage resize_bilinear(const RasterImage& image, std::size_t out_w, std::size_t out_h);

RasterImage flip(const RasterImage& image, FlipAxis axis);

/// Clockwise rotation. Multiples of 90 degrees permute pixels exactly; any other
/// angle keeps the frame size, samples bilinearly and fills uncovered area with 0.
RasterImage rotate(const RasterImage& image, double angle_degrees);

/// The general-angle path of rotate(), without the exact 90-degree shortcut.
RasterImage rotate_resampled(const RasterImage& image, double angle_degrees);

/// Per-channel min-max stretch onto [0, 255]. Constant channels are left alone.
RasterImage contrast_stretch(const RasterImage& image);

RasterImage add_gaussian_noise(const RasterImage& image, const NoiseSpec& spec);

/// Separable, clamp-to-edge, radius ceil(3 sigma), rounded once at the end.
RasterImage gaussian_blur(const RasterImage& image, double sigma);

/// Normalized 1-D kernel used by gaussian_blur, index r is the center tap.
std::vector<double> gaussian_kernel(double sigma);

/// Luma 0.299R + 0.587G + 0.114B, rounded. Gray input is returned unchanged.
RasterImage to_gray(const RasterImage& image);

/// grid*grid downsampled intensities in [0,1], then a bins-wide normalized histogram.
std::vector<double> extract_features(const RasterImage& image, std::size_t grid, std::size_t bins);

/// Parses the augmentation op list (`rot90,flip-h,blur:1.5,...`) and applies it
/// left to right. `noise` ops draw from `seed`.
RasterImage apply_ops(const RasterImage& image, std::string_view ops, std::uint64_t seed);

/// Validates an op list without applying it.
void validate_ops(std::string_view ops);

}  // namespace ssgl
