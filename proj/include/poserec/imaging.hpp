#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace poserec {

enum class ColorSpace { RGB, HSV, GRAY };

std::string_view to_string(ColorSpace space) noexcept;

/// Parses the lowercase names "rgb", "hsv" and "gray".
std::optional<ColorSpace> parse_color_space(std::string_view name) noexcept;

/// Decoded 8-bit raster, row-major, channels interleaved.
///
/// Construction validates the invariants: non-zero dimensions, a pixel array of
/// exactly width*height*channels samples, and one channel iff the space is GRAY.
class ImageBuffer {
public:
    ImageBuffer(int width, int height, ColorSpace space, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return space_ == ColorSpace::GRAY ? 1 : 3; }
    ColorSpace color_space() const noexcept { return space_; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::uint8_t at(int x, int y, int c) const noexcept
    {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels() + c];
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    int width_;
    int height_;
    ColorSpace space_;
    std::vector<std::uint8_t> pixels_;
};

struct RegionGrid {
    int rows = 3;
    int cols = 3;

    friend bool operator==(const RegionGrid&, const RegionGrid&) = default;
};

/// Pixel span [begin, end) of region `index` out of `parts` along an axis of
/// length `extent`. Boundaries are floor(index*extent/parts).
struct AxisSpan {
    int begin;
    int end;
};
AxisSpan region_span(int extent, int parts, int index) noexcept;

/// Decodes PNG, JPEG or BMP (detected from the file signature) into RGB.
ImageBuffer load_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG. GRAY buffers become grayscale PNGs, RGB buffers RGB.
/// HSV buffers are rejected since PNG has no such color type.
void save_png(const ImageBuffer& img, const std::filesystem::path& path);

ImageBuffer to_color_space(const ImageBuffer& img, ColorSpace target);

/// Splits the image into grid.rows*grid.cols sub-images, row-major region order.
std::vector<ImageBuffer> segment_regions(const ImageBuffer& img, const RegionGrid& grid);

/// Largest centered square crop.
ImageBuffer center_crop_square(const ImageBuffer& img);

/// Box-filter resampling: each output pixel is the coverage-weighted mean of the
/// source pixels under its footprint. Works for shrinking and enlarging.
ImageBuffer resize_area(const ImageBuffer& img, int width, int height);

} // namespace poserec
