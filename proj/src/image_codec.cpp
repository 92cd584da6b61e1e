#include "poserec/imaging.hpp"

#include "poserec/error.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

// jpeglib.h expects size_t and FILE to be declared beforehand.
#include <jpeglib.h>

namespace poserec {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path)
{
    std::error_code ec;
    if (!fs::exists(path, ec) || ec)
        throw Error(ErrorKind::FileNotFound, path.string());
    if (!fs::is_regular_file(path, ec))
        throw Error(ErrorKind::IoError, path.string() + " is not a regular file");

    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error(ErrorKind::IoError, "read failed for " + path.string());
    return bytes;
}

bool has_prefix(const std::vector<std::uint8_t>& bytes, std::initializer_list<std::uint8_t> magic)
{
    return bytes.size() >= magic.size() && std::equal(magic.begin(), magic.end(), bytes.begin());
}

// ---------------------------------------------------------------- PNG

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;

    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw Error(ErrorKind::CorruptImage, path.string() + ": " + image.message);

    // Decode with alpha and drop it afterwards; letting libpng strip alpha would
    // composite against a background and alter the color samples.
    image.format = PNG_FORMAT_RGBA;
    const auto width = static_cast<int>(image.width);
    const auto height = static_cast<int>(image.height);
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorKind::CorruptImage, path.string() + ": " + msg);
    }

    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0, n = static_cast<std::size_t>(width) * height; i < n; ++i)
        std::memcpy(&rgb[i * 3], &rgba[i * 4], 3);
    return ImageBuffer(width, height, ColorSpace::RGB, std::move(rgb));
}

// ---------------------------------------------------------------- JPEG

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf escape;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->escape, 1);
}

// Warnings (premature end of data and the like) are promoted to errors so that
// truncated streams are reported as corrupt instead of padded with gray.
void jpeg_emit_message(j_common_ptr cinfo, int level)
{
    if (level < 0)
        jpeg_error_exit(cinfo);
}

ImageBuffer decode_jpeg(const std::vector<std::uint8_t>& bytes, const fs::path& path)
{
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_emit_message;
    err.message[0] = '\0';

    // Only trivially destructible locals live across setjmp.
    std::vector<std::uint8_t> rgb;
    int width = 0;
    int height = 0;

    if (setjmp(err.escape)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(ErrorKind::CorruptImage, path.string() + ": " + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(ErrorKind::UnsupportedFormat, path.string() + ": CMYK JPEG");
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    rgb.resize(static_cast<std::size_t>(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = &rgb[static_cast<std::size_t>(cinfo.output_scanline) * width * 3];
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return ImageBuffer(width, height, ColorSpace::RGB, std::move(rgb));
}

// ---------------------------------------------------------------- BMP

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t at)
{
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t at)
{
    return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

// Uncompressed 8-bit palettized, 24-bit and 32-bit (BI_RGB or BGRA bitfields).
ImageBuffer decode_bmp(const std::vector<std::uint8_t>& bytes, const fs::path& path)
{
    auto corrupt = [&](const char* what) { return Error(ErrorKind::CorruptImage, path.string() + ": " + what); };

    if (bytes.size() < 54)
        throw corrupt("truncated header");
    const std::uint32_t data_offset = le32(bytes, 10);
    const std::uint32_t header_size = le32(bytes, 14);
    if (header_size < 40)
        throw Error(ErrorKind::UnsupportedFormat, path.string() + ": OS/2 bitmap headers are not supported");

    const auto width = static_cast<std::int32_t>(le32(bytes, 18));
    const auto raw_height = static_cast<std::int32_t>(le32(bytes, 22));
    const std::uint16_t bpp = le16(bytes, 28);
    const std::uint32_t compression = le32(bytes, 30);
    const bool top_down = raw_height < 0;
    const std::int64_t height = top_down ? -static_cast<std::int64_t>(raw_height) : raw_height;

    if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16))
        throw corrupt("bad dimensions");
    const bool bitfields_bgra = compression == 3 && bpp == 32;
    if (compression != 0 && !bitfields_bgra)
        throw Error(ErrorKind::UnsupportedFormat, path.string() + ": compressed bitmap");
    if (bpp != 8 && bpp != 24 && bpp != 32)
        throw Error(ErrorKind::UnsupportedFormat, path.string() + ": " + std::to_string(bpp) + "-bit bitmap");

    std::vector<std::array<std::uint8_t, 3>> palette;
    if (bpp == 8) {
        std::uint32_t colors = le32(bytes, 46);
        if (colors == 0)
            colors = 256;
        const std::size_t pal_at = 14 + header_size;
        if (colors > 256 || pal_at + colors * 4 > bytes.size())
            throw corrupt("truncated palette");
        for (std::uint32_t i = 0; i < colors; ++i) {
            const std::size_t p = pal_at + i * 4;
            palette.push_back({bytes[p + 2], bytes[p + 1], bytes[p]});
        }
    }

    const std::size_t stride = (static_cast<std::size_t>(width) * bpp / 8 + 3) & ~std::size_t{3};
    if (data_offset > bytes.size() || stride * height > bytes.size() - data_offset)
        throw corrupt("truncated pixel data");

    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
    for (std::int64_t y = 0; y < height; ++y) {
        const std::int64_t src_row = top_down ? y : height - 1 - y;
        const std::uint8_t* row = &bytes[data_offset + static_cast<std::size_t>(src_row) * stride];
        std::uint8_t* dst = &rgb[static_cast<std::size_t>(y) * width * 3];
        for (std::int32_t x = 0; x < width; ++x, dst += 3) {
            if (bpp == 8) {
                if (row[x] >= palette.size())
                    throw corrupt("palette index out of range");
                const auto& c = palette[row[x]];
                dst[0] = c[0];
                dst[1] = c[1];
                dst[2] = c[2];
            } else {
                const std::uint8_t* p = row + static_cast<std::size_t>(x) * (bpp / 8);
                dst[0] = p[2];
                dst[1] = p[1];
                dst[2] = p[0];
            }
        }
    }
    return ImageBuffer(width, static_cast<int>(height), ColorSpace::RGB, std::move(rgb));
}

} // namespace

ImageBuffer load_image(const fs::path& path)
{
    const auto bytes = read_file(path);
    if (has_prefix(bytes, {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A}))
        return decode_png(bytes, path);
    if (has_prefix(bytes, {0xFF, 0xD8, 0xFF}))
        return decode_jpeg(bytes, path);
    if (has_prefix(bytes, {'B', 'M'}))
        return decode_bmp(bytes, path);
    throw Error(ErrorKind::UnsupportedFormat, path.string() + ": unrecognized file signature");
}

void save_png(const ImageBuffer& img, const fs::path& path)
{
    if (img.color_space() == ColorSpace::HSV)
        throw Error(ErrorKind::InvalidArgument, "cannot write an HSV buffer as PNG");

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.color_space() == ColorSpace::GRAY ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(image, size, 0, img.pixels().data(), 0, nullptr))
        throw Error(ErrorKind::IoError, "PNG encoding failed: " + std::string(image.message));
    std::vector<std::uint8_t> encoded(size);
    if (!png_image_write_to_memory(&image, encoded.data(), &size, 0, img.pixels().data(), 0, nullptr))
        throw Error(ErrorKind::IoError, "PNG encoding failed: " + std::string(image.message));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(encoded.data()), static_cast<std::streamsize>(size));
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

} // namespace poserec
