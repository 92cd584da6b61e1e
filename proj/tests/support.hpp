#pragma once

#include "poserec/imaging.hpp"
#include "poserec/index.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

fs::path data_dir();

poserec::ImageBuffer solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);
poserec::ImageBuffer random_rgb(int w, int h, std::mt19937& rng);
poserec::ImageBuffer random_gray(int w, int h, std::mt19937& rng);

/// Synthetic corpus image number `n`: cycles through solid colors, linear
/// gradients and noise textures, parameterized by rng.
poserec::ImageBuffer synthetic_image(int n, std::mt19937& rng, int side = 24);

/// Writes `count` synthetic PNGs named img_0000.png ... into dir. Every image
/// has a feature (under `config`) distinct from all others, so self-retrieval
/// is unambiguous. Returns the file paths in id order.
std::vector<fs::path> write_corpus(const fs::path& dir, int count, std::uint32_t seed,
                                   const poserec::IndexConfig& config = {});

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace testing_support
