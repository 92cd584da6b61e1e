#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iterator>
#include <set>

namespace testing_support {

namespace {
std::atomic<int> counter{0};
}

TempDir::TempDir(const std::string& tag)
{
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("poserec_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path data_dir() { return fs::path(POSEREC_TEST_DATA_DIR); }

poserec::ImageBuffer solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    std::vector<std::uint8_t> px;
    for (int i = 0; i < w * h; ++i)
        px.insert(px.end(), {r, g, b});
    return poserec::ImageBuffer(w, h, poserec::ColorSpace::RGB, std::move(px));
}

poserec::ImageBuffer random_rgb(int w, int h, std::mt19937& rng)
{
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : px)
        v = static_cast<std::uint8_t>(byte(rng));
    return poserec::ImageBuffer(w, h, poserec::ColorSpace::RGB, std::move(px));
}

poserec::ImageBuffer random_gray(int w, int h, std::mt19937& rng)
{
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
    for (auto& v : px)
        v = static_cast<std::uint8_t>(byte(rng));
    return poserec::ImageBuffer(w, h, poserec::ColorSpace::GRAY, std::move(px));
}

poserec::ImageBuffer synthetic_image(int n, std::mt19937& rng, int side)
{
    std::uniform_int_distribution<int> byte(0, 255);
    const auto u8 = [](int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); };

    switch (n % 3) {
    case 0:
        return solid_rgb(side, side, u8(byte(rng)), u8(byte(rng)), u8(byte(rng)));
    case 1: {
        // two-color linear gradient at a random orientation
        const int r0 = byte(rng), g0 = byte(rng), b0 = byte(rng);
        const int r1 = byte(rng), g1 = byte(rng), b1 = byte(rng);
        const bool vertical = byte(rng) % 2 == 0;
        std::vector<std::uint8_t> px;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double t = (vertical ? y : x) / static_cast<double>(side - 1);
                px.push_back(u8(static_cast<int>(r0 + t * (r1 - r0))));
                px.push_back(u8(static_cast<int>(g0 + t * (g1 - g0))));
                px.push_back(u8(static_cast<int>(b0 + t * (b1 - b0))));
            }
        return poserec::ImageBuffer(side, side, poserec::ColorSpace::RGB, std::move(px));
    }
    default: {
        // noise texture around a random base color
        const int r = byte(rng), g = byte(rng), b = byte(rng);
        const int spread = 8 + byte(rng) % 80;
        std::uniform_int_distribution<int> jitter(-spread, spread);
        std::vector<std::uint8_t> px;
        for (int i = 0; i < side * side; ++i) {
            px.push_back(u8(r + jitter(rng)));
            px.push_back(u8(g + jitter(rng)));
            px.push_back(u8(b + jitter(rng)));
        }
        return poserec::ImageBuffer(side, side, poserec::ColorSpace::RGB, std::move(px));
    }
    }
}

std::vector<fs::path> write_corpus(const fs::path& dir, int count, std::uint32_t seed,
                                   const poserec::IndexConfig& config)
{
    fs::create_directories(dir);
    std::mt19937 rng(seed);
    std::set<std::vector<double>> seen;
    std::vector<fs::path> files;
    for (int n = 0; n < count; ++n) {
        for (;;) {
            auto img = synthetic_image(n, rng);
            const auto feature = poserec::extract_feature(img, config);
            std::vector<double> key(feature.values().begin(), feature.values().end());
            if (!seen.insert(std::move(key)).second)
                continue;
            char name[32];
            std::snprintf(name, sizeof name, "img_%04d.png", n);
            files.push_back(dir / name);
            poserec::save_png(img, files.back());
            break;
        }
    }
    return files;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace testing_support
