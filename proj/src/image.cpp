#include "ssgl/image.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

namespace ssgl {

namespace {

std::uint8_t to_byte(double v) {
    // std::round is half-away-from-zero.
    return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string token() {
        skip_space_and_comments();
        std::string out;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') {
            out += static_cast<char>(bytes_[pos_++]);
        }
        if (out.empty()) throw Error("pnm: truncated header");
        return out;
    }

    std::size_t number(const char* what) {
        const auto t = token();
        return parse_index(t, std::string("pnm ") + what);
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t body_offset() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw Error("pnm: truncated header");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// Bilinear read with out-of-frame neighbors contributing 0.
double sample_zero_fill(const RasterImage& img, double sx, double sy, std::size_t c) {
    const double fx = std::floor(sx);
    const double fy = std::floor(sy);
    const double tx = sx - fx;
    const double ty = sy - fy;
    const auto w = static_cast<double>(img.width());
    const auto h = static_cast<double>(img.height());
    auto px = [&](double x, double y) -> double {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
        return img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c);
    };
    const double top = (1 - tx) * px(fx, fy) + tx * px(fx + 1, fy);
    const double bottom = (1 - tx) * px(fx, fy + 1) + tx * px(fx + 1, fy + 1);
    return (1 - ty) * top + ty * bottom;
}

RasterImage rotate_quarter_turns(const RasterImage& img, int quarters) {
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    const std::size_t ch = img.channels();
    if (quarters == 0) return img;
    if (quarters == 2) {
        RasterImage out(w, h, ch);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < ch; ++c) out.at(w - 1 - x, h - 1 - y, c) = img.at(x, y, c);
        return out;
    }
    RasterImage out(h, w, ch);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < ch; ++c) {
                if (quarters == 1) {
                    out.at(h - 1 - y, x, c) = img.at(x, y, c);
                } else {
                    out.at(y, w - 1 - x, c) = img.at(x, y, c);
                }
            }
        }
    }
    return out;
}

}  // namespace

RasterImage::RasterImage(std::size_t width, std::size_t height, std::size_t channels)
    : RasterImage(width, height, channels, std::vector<std::uint8_t>(width * height * channels, 0)) {}

RasterImage::RasterImage(std::size_t width, std::size_t height, std::size_t channels,
                         std::vector<std::uint8_t> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
    if (width_ == 0 || height_ == 0) throw Error("image: width and height must be >= 1");
    if (channels_ != 1 && channels_ != 3) throw Error("image: channels must be 1 or 3");
    if (samples_.size() != width_ * height_ * channels_) {
        throw Error("image: sample count does not match width*height*channels");
    }
}

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
    HeaderReader reader(bytes);
    const auto magic = reader.token();
    std::size_t channels = 0;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw Error("pnm: unsupported magic '" + magic + "' (expected P5 or P6)");
    }
    const auto width = reader.number("width");
    const auto height = reader.number("height");
    const auto maxval = reader.number("maxval");
    if (maxval != 255) throw Error("pnm: unsupported maxval " + std::to_string(maxval));
    if (width == 0 || height == 0) throw Error("pnm: zero-sized image");
    const auto offset = reader.body_offset();
    const auto need = width * height * channels;
    if (bytes.size() < offset + need) throw Error("pnm: truncated body");
    std::vector<std::uint8_t> samples(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                      bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
    return RasterImage(width, height, channels, std::move(samples));
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& image) {
    const std::string header = std::string(image.channels() == 1 ? "P5" : "P6") + "\n" +
                               std::to_string(image.width()) + " " + std::to_string(image.height()) +
                               "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.samples().begin(), image.samples().end());
    return out;
}

RasterImage read_pnm(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        return decode_pnm({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_pnm(const RasterImage& image, const std::filesystem::path& path) {
    const auto bytes = encode_pnm(image);
    write_file_atomic(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

RasterImage crop(const RasterImage& image, std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
    if (w == 0 || h == 0 || x > image.width() || y > image.height() || w > image.width() - x ||
        h > image.height() - y) {
        throw Error("crop: rectangle (" + std::to_string(x) + "," + std::to_string(y) + "," +
                    std::to_string(w) + "," + std::to_string(h) + ") outside " +
                    std::to_string(image.width()) + "x" + std::to_string(image.height()) + " image");
    }
    RasterImage out(w, h, image.channels());
    for (std::size_t j = 0; j < h; ++j)
        for (std::size_t i = 0; i < w; ++i)
            for (std::size_t c = 0; c < image.channels(); ++c) out.at(i, j, c) = image.at(x + i, y + j, c);
    return out;
}

RasterImage resize_bilinear(const RasterImage& image, std::size_t out_w, std::size_t out_h) {
    if (out_w == 0 || out_h == 0) throw Error("resize: output size must be >= 1");
    const auto in_w = image.width();
    const auto in_h = image.height();
    const double scale_x = static_cast<double>(in_w) / static_cast<double>(out_w);
    const double scale_y = static_cast<double>(in_h) / static_cast<double>(out_h);
    auto source = [](std::size_t d, double scale, std::size_t in) {
        const double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(in - 1));
    };
    RasterImage out(out_w, out_h, image.channels());
    for (std::size_t dy = 0; dy < out_h; ++dy) {
        const double sy = source(dy, scale_y, in_h);
        const auto y0 = static_cast<std::size_t>(sy);
        const auto y1 = std::min(y0 + 1, in_h - 1);
        const double ty = sy - static_cast<double>(y0);
        for (std::size_t dx = 0; dx < out_w; ++dx) {
            const double sx = source(dx, scale_x, in_w);
            const auto x0 = static_cast<std::size_t>(sx);
            const auto x1 = std::min(x0 + 1, in_w - 1);
            const double tx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < image.channels(); ++c) {
                const double top = (1 - tx) * image.at(x0, y0, c) + tx * image.at(x1, y0, c);
                const double bottom = (1 - tx) * image.at(x0, y1, c) + tx * image.at(x1, y1, c);
                out.at(dx, dy, c) = to_byte((1 - ty) * top + ty * bottom);
            }
        }
    }
    return out;
}

RasterImage flip(const RasterImage& image, FlipAxis axis) {
    const auto w = image.width();
    const auto h = image.height();
    RasterImage out(w, h, image.channels());
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto sx = axis == FlipAxis::horizontal ? w - 1 - x : x;
            const auto sy = axis == FlipAxis::vertical ? h - 1 - y : y;
            for (std::size_t c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(sx, sy, c);
        }
    }
    return out;
}

RasterImage rotate_resampled(const RasterImage& image, double angle_degrees) {
    if (!std::isfinite(angle_degrees)) throw Error("rotate: angle must be finite");
    const double theta = angle_degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const double cx = (static_cast<double>(image.width()) - 1.0) / 2.0;
    const double cy = (static_cast<double>(image.height()) - 1.0) / 2.0;
    RasterImage out(image.width(), image.height(), image.channels());
    for (std::size_t y = 0; y < image.height(); ++y) {
        for (std::size_t x = 0; x < image.width(); ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            // Inverse of the clockwise (y-down) rotation.
            const double sx = cx + dx * cs + dy * sn;
            const double sy = cy - dx * sn + dy * cs;
            for (std::size_t c = 0; c < image.channels(); ++c) {
                out.at(x, y, c) = to_byte(sample_zero_fill(image, sx, sy, c));
            }
        }
    }
    return out;
}

RasterImage rotate(const RasterImage& image, double angle_degrees) {
    if (!std::isfinite(angle_degrees)) throw Error("rotate: angle must be finite");
    double a = std::fmod(angle_degrees, 360.0);
    if (a < 0) a += 360.0;
    if (a == 0.0 || a == 90.0 || a == 180.0 || a == 270.0) {
        return rotate_quarter_turns(image, static_cast<int>(a / 90.0));
    }
    return rotate_resampled(image, angle_degrees);
}

RasterImage contrast_stretch(const RasterImage& image) {
    RasterImage out = image;
    const auto ch = image.channels();
    const auto samples = image.samples();
    for (std::size_t c = 0; c < ch; ++c) {
        std::uint8_t lo = 255;
        std::uint8_t hi = 0;
        for (std::size_t i = c; i < samples.size(); i += ch) {
            lo = std::min(lo, samples[i]);
            hi = std::max(hi, samples[i]);
        }
        if (lo == hi) continue;
        // Multiply before dividing so exact half-steps such as 127.5 survive rounding.
        const double range = static_cast<double>(hi - lo);
        for (std::size_t i = c; i < samples.size(); i += ch) {
            out.samples()[i] = to_byte(static_cast<double>(samples[i] - lo) * 255.0 / range);
        }
    }
    return out;
}

RasterImage add_gaussian_noise(const RasterImage& image, const NoiseSpec& spec) {
    if (!std::isfinite(spec.sigma_fraction) || spec.sigma_fraction < 0) {
        throw Error("noise: sigma_fraction must be finite and >= 0");
    }
    RasterImage out = image;
    SplitMix64 rng(spec.seed);
    const double sigma = spec.sigma_fraction * 255.0;
    for (auto& s : out.samples()) {
        const double z = rng.normal();
        s = to_byte(static_cast<double>(s) + z * sigma);
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw Error("blur: sigma must be > 0");
    const auto r = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0;
    for (std::ptrdiff_t t = -r; t <= r; ++t) {
        const double v = std::exp(-static_cast<double>(t * t) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(t + r)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

RasterImage gaussian_blur(const RasterImage& image, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto w = static_cast<std::ptrdiff_t>(image.width());
    const auto h = static_cast<std::ptrdiff_t>(image.height());
    const auto ch = image.channels();
    auto idx = [&](std::ptrdiff_t x, std::ptrdiff_t y, std::size_t c) {
        return (static_cast<std::size_t>(y) * image.width() + static_cast<std::size_t>(x)) * ch + c;
    };

    std::vector<double> horizontal(image.samples().size());
    for (std::ptrdiff_t y = 0; y < h; ++y)
        for (std::ptrdiff_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c) {
                double acc = 0;
                for (std::ptrdiff_t t = -r; t <= r; ++t) {
                    const auto sx = std::clamp<std::ptrdiff_t>(x + t, 0, w - 1);
                    acc += kernel[static_cast<std::size_t>(t + r)] * image.samples()[idx(sx, y, c)];
                }
                horizontal[idx(x, y, c)] = acc;
            }

    RasterImage out(image.width(), image.height(), ch);
    for (std::ptrdiff_t y = 0; y < h; ++y)
        for (std::ptrdiff_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c) {
                double acc = 0;
                for (std::ptrdiff_t t = -r; t <= r; ++t) {
                    const auto sy = std::clamp<std::ptrdiff_t>(y + t, 0, h - 1);
                    acc += kernel[static_cast<std::size_t>(t + r)] * horizontal[idx(x, sy, c)];
                }
                out.samples()[idx(x, y, c)] = to_byte(acc);
            }
    return out;
}

RasterImage to_gray(const RasterImage& image) {
    if (image.channels() == 1) return image;
    RasterImage out(image.width(), image.height(), 1);
    for (std::size_t y = 0; y < image.height(); ++y)
        for (std::size_t x = 0; x < image.width(); ++x) {
            out.at(x, y) = to_byte(0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) +
                                   0.114 * image.at(x, y, 2));
        }
    return out;
}

std::vector<double> extract_features(const RasterImage& image, std::size_t grid, std::size_t bins) {
    if (grid == 0 || bins == 0) throw Error("features: grid and bins must be >= 1");
    const auto gray = to_gray(image);
    const auto small = resize_bilinear(gray, grid, grid);
    std::vector<double> features;
    features.reserve(grid * grid + bins);
    for (auto v : small.samples()) features.push_back(static_cast<double>(v) / 255.0);

    std::vector<std::size_t> counts(bins, 0);
    for (auto v : gray.samples()) ++counts[static_cast<std::size_t>(v) * bins / 256];
    const auto total = static_cast<double>(gray.samples().size());
    for (auto n : counts) features.push_back(static_cast<double>(n) / total);
    return features;
}

namespace {

struct Op {
    std::string name;
    std::vector<std::string_view> args;
};

std::vector<Op> parse_ops(std::string_view ops) {
    std::vector<Op> out;
    if (ops.empty()) return out;
    for (auto item : detail::split_cells(ops, ',')) {
        auto parts = detail::split_cells(item, ':');
        Op op{std::string(parts.front()), {parts.begin() + 1, parts.end()}};
        auto want = [&](std::size_t n) {
            if (op.args.size() != n) {
                throw Error("augment: op '" + op.name + "' takes " + std::to_string(n) + " argument(s)");
            }
        };
        if (op.name == "rot90" || op.name == "flip-h" || op.name == "flip-v" || op.name == "stretch") {
            want(0);
        } else if (op.name == "rot" || op.name == "noise" || op.name == "blur") {
            want(1);
            const double v = parse_real(op.args[0], op.name);
            if (op.name == "blur" && !(v > 0)) throw Error("augment: blur sigma must be > 0");
            if (op.name == "noise" && !(v >= 0)) throw Error("augment: noise sigma must be >= 0");
        } else if (op.name == "crop") {
            want(4);
            for (auto a : op.args) parse_index(a, "crop");
        } else if (op.name == "resize") {
            want(2);
            for (auto a : op.args) parse_index(a, "resize");
        } else {
            throw Error("augment: unknown op '" + std::string(item) + "'");
        }
        out.push_back(std::move(op));
    }
    return out;
}

}  // namespace

void validate_ops(std::string_view ops) { parse_ops(ops); }

RasterImage apply_ops(const RasterImage& image, std::string_view ops, std::uint64_t seed) {
    RasterImage img = image;
    std::uint64_t position = 0;
    for (const auto& op : parse_ops(ops)) {
        if (op.name == "rot90") {
            img = rotate(img, 90.0);
        } else if (op.name == "rot") {
            img = rotate(img, parse_real(op.args[0], "rot"));
        } else if (op.name == "flip-h") {
            img = flip(img, FlipAxis::horizontal);
        } else if (op.name == "flip-v") {
            img = flip(img, FlipAxis::vertical);
        } else if (op.name == "crop") {
            img = crop(img, parse_index(op.args[0], "crop"), parse_index(op.args[1], "crop"),
                       parse_index(op.args[2], "crop"), parse_index(op.args[3], "crop"));
        } else if (op.name == "resize") {
            img = resize_bilinear(img, parse_index(op.args[0], "resize"), parse_index(op.args[1], "resize"));
        } else if (op.name == "stretch") {
            img = contrast_stretch(img);
        } else if (op.name == "noise") {
            img = add_gaussian_noise(img, {parse_real(op.args[0], "noise"), seed + position});
        } else if (op.name == "blur") {
            img = gaussian_blur(img, parse_real(op.args[0], "blur"));
        }
        ++position;
    }
    return img;
}

}  // namespace ssgl
