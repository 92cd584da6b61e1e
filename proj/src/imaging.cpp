#include "poserec/imaging.hpp"

#include "poserec/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poserec {

namespace {

std::uint8_t round_to_byte(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

struct Rgb {
    int r, g, b;
};

// Integer hexcone so that results do not depend on floating-point rounding.
// Hue is carried as t in [0, 6*delta) and mapped to [0,255] rounding half up.
void rgb_to_hsv(Rgb in, std::uint8_t* out)
{
    const int mx = std::max({in.r, in.g, in.b});
    const int mn = std::min({in.r, in.g, in.b});
    const int delta = mx - mn;

    int hue = 0;
    if (delta > 0) {
        int t;
        if (mx == in.r) {
            t = in.g - in.b;
            if (t < 0)
                t += 6 * delta;
        } else if (mx == in.g) {
            t = in.b - in.r + 2 * delta;
        } else {
            t = in.r - in.g + 4 * delta;
        }
        hue = (2 * 255 * t + 6 * delta) / (12 * delta);
    }
    const int sat = mx == 0 ? 0 : (2 * 255 * delta + mx) / (2 * mx);

    out[0] = static_cast<std::uint8_t>(hue);
    out[1] = static_cast<std::uint8_t>(sat);
    out[2] = static_cast<std::uint8_t>(mx);
}

Rgb hsv_to_rgb(const std::uint8_t* in)
{
    const double h = in[0] * 6.0 / 255.0; // sextant units
    const double s = in[1] / 255.0;
    const double v = in[2];

    const double c = v * s;
    const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
    const double m = v - c;

    double r = 0, g = 0, b = 0;
    switch (std::min(static_cast<int>(h), 5)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    return {round_to_byte(r + m), round_to_byte(g + m), round_to_byte(b + m)};
}

std::uint8_t luma(Rgb in)
{
    return static_cast<std::uint8_t>((299 * in.r + 587 * in.g + 114 * in.b + 500) / 1000);
}

Rgb pixel_as_rgb(const ImageBuffer& img, const std::uint8_t* p)
{
    switch (img.color_space()) {
    case ColorSpace::RGB: return {p[0], p[1], p[2]};
    case ColorSpace::GRAY: return {p[0], p[0], p[0]};
    case ColorSpace::HSV: return hsv_to_rgb(p);
    }
    return {0, 0, 0};
}

} // namespace

std::string_view to_string(ColorSpace space) noexcept
{
    switch (space) {
    case ColorSpace::RGB: return "rgb";
    case ColorSpace::HSV: return "hsv";
    case ColorSpace::GRAY: return "gray";
    }
    return "unknown";
}

std::optional<ColorSpace> parse_color_space(std::string_view name) noexcept
{
    if (name == "rgb")
        return ColorSpace::RGB;
    if (name == "hsv")
        return ColorSpace::HSV;
    if (name == "gray")
        return ColorSpace::GRAY;
    return std::nullopt;
}

ImageBuffer::ImageBuffer(int width, int height, ColorSpace space, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), space_(space), pixels_(std::move(pixels))
{
    if (width < 1 || height < 1)
        throw Error(ErrorKind::InvalidArgument,
                    "image dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    const auto expected = static_cast<std::size_t>(width) * height * channels();
    if (pixels_.size() != expected)
        throw Error(ErrorKind::InvalidArgument, "pixel array holds " + std::to_string(pixels_.size()) +
                                                    " samples, expected " + std::to_string(expected));
}

AxisSpan region_span(int extent, int parts, int index) noexcept
{
    const auto lo = static_cast<long long>(index) * extent / parts;
    const auto hi = static_cast<long long>(index + 1) * extent / parts;
    return {static_cast<int>(lo), static_cast<int>(hi)};
}

ImageBuffer to_color_space(const ImageBuffer& img, ColorSpace target)
{
    if (img.color_space() == target)
        return img;

    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    const int src_ch = img.channels();
    const int dst_ch = target == ColorSpace::GRAY ? 1 : 3;
    std::vector<std::uint8_t> out(n * dst_ch);
    const auto src = img.pixels();

    for (std::size_t i = 0; i < n; ++i) {
        const Rgb rgb = pixel_as_rgb(img, &src[i * src_ch]);
        std::uint8_t* dst = &out[i * dst_ch];
        switch (target) {
        case ColorSpace::RGB:
            dst[0] = static_cast<std::uint8_t>(rgb.r);
            dst[1] = static_cast<std::uint8_t>(rgb.g);
            dst[2] = static_cast<std::uint8_t>(rgb.b);
            break;
        case ColorSpace::HSV:
            rgb_to_hsv(rgb, dst);
            break;
        case ColorSpace::GRAY:
            dst[0] = luma(rgb);
            break;
        }
    }
    return ImageBuffer(img.width(), img.height(), target, std::move(out));
}

std::vector<ImageBuffer> segment_regions(const ImageBuffer& img, const RegionGrid& grid)
{
    if (grid.rows < 1 || grid.cols < 1)
        throw Error(ErrorKind::InvalidArgument, "grid must have at least one row and column");
    if (grid.rows > img.height() || grid.cols > img.width())
        throw Error(ErrorKind::GridTooFine,
                    std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid on a " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " image leaves empty regions");

    const int ch = img.channels();
    const auto src = img.pixels();
    std::vector<ImageBuffer> regions;
    regions.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);

    for (int r = 0; r < grid.rows; ++r) {
        const AxisSpan ys = region_span(img.height(), grid.rows, r);
        for (int c = 0; c < grid.cols; ++c) {
            const AxisSpan xs = region_span(img.width(), grid.cols, c);
            const int w = xs.end - xs.begin;
            std::vector<std::uint8_t> px;
            px.reserve(static_cast<std::size_t>(w) * (ys.end - ys.begin) * ch);
            for (int y = ys.begin; y < ys.end; ++y) {
                const auto row = src.subspan((static_cast<std::size_t>(y) * img.width() + xs.begin) * ch,
                                             static_cast<std::size_t>(w) * ch);
                px.insert(px.end(), row.begin(), row.end());
            }
            regions.emplace_back(w, ys.end - ys.begin, img.color_space(), std::move(px));
        }
    }
    return regions;
}

ImageBuffer center_crop_square(const ImageBuffer& img)
{
    const int side = std::min(img.width(), img.height());
    if (side == img.width() && side == img.height())
        return img;

    const int x0 = (img.width() - side) / 2;
    const int y0 = (img.height() - side) / 2;
    const int ch = img.channels();
    const auto src = img.pixels();
    std::vector<std::uint8_t> px;
    px.reserve(static_cast<std::size_t>(side) * side * ch);
    for (int y = y0; y < y0 + side; ++y) {
        const auto row = src.subspan((static_cast<std::size_t>(y) * img.width() + x0) * ch,
                                     static_cast<std::size_t>(side) * ch);
        px.insert(px.end(), row.begin(), row.end());
    }
    return ImageBuffer(side, side, img.color_space(), std::move(px));
}

namespace {

// Sparse coverage weights of each destination cell over source cells, one axis.
struct Tap {
    int src;
    double weight;
};

std::vector<std::vector<Tap>> axis_taps(int src_len, int dst_len)
{
    std::vector<std::vector<Tap>> taps(dst_len);
    const double scale = static_cast<double>(src_len) / dst_len;
    for (int d = 0; d < dst_len; ++d) {
        const double lo = d * scale;
        const double hi = (d + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src_len - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int s = first; s <= last; ++s) {
            const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
            if (overlap > 0)
                taps[d].push_back({s, overlap / scale});
        }
    }
    return taps;
}

} // namespace

ImageBuffer resize_area(const ImageBuffer& img, int width, int height)
{
    if (width < 1 || height < 1)
        throw Error(ErrorKind::InvalidArgument, "resize target must be at least 1x1");
    if (width == img.width() && height == img.height())
        return img;

    const auto xtaps = axis_taps(img.width(), width);
    const auto ytaps = axis_taps(img.height(), height);
    const int ch = img.channels();

    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height * ch);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0;
                for (const Tap& ty : ytaps[y])
                    for (const Tap& tx : xtaps[x])
                        acc += ty.weight * tx.weight * img.at(tx.src, ty.src, c);
                out[(static_cast<std::size_t>(y) * width + x) * ch + c] = round_to_byte(acc);
            }
        }
    }
    return ImageBuffer(width, height, img.color_space(), std::move(out));
}

} // namespace poserec
