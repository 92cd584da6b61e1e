#pragma once

#include "poserec/histogram.hpp"
#include "poserec/imaging.hpp"
#include "poserec/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace poserec {

inline constexpr int kIndexFormatVersion = 1;
inline constexpr int kDefaultTopK = 12;

struct IndexConfig {
    int bins = 32;
    ColorSpace color_space = ColorSpace::HSV;
    RegionGrid grid{3, 3};

    friend bool operator==(const IndexConfig&, const IndexConfig&) = default;
};

struct IndexEntry {
    std::string id; // path relative to the indexed directory, '/'-separated
    std::string path;
    int width = 0;
    int height = 0;
    HistogramFeature feature;

    friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

/// Entries sorted by id (byte order), unique, all features shaped by config.
class ImageIndex {
public:
    /// Throws Error{InvalidArgument} unless ids are strictly ascending and every
    /// feature matches the config layout.
    ImageIndex(IndexConfig config, std::vector<IndexEntry> entries);

    const IndexConfig& config() const noexcept { return config_; }
    const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    const IndexEntry* find(std::string_view id) const noexcept;

    friend bool operator==(const ImageIndex&, const ImageIndex&) = default;

private:
    IndexConfig config_;
    std::vector<IndexEntry> entries_;
};

/// The retrieval feature of an image under an index configuration.
HistogramFeature extract_feature(const ImageBuffer& img, const IndexConfig& config);

struct SkippedFile {
    std::string path;
    std::string reason;
};

struct IndexBuild {
    ImageIndex index;
    std::vector<SkippedFile> skipped;
};

/// True for .png/.jpg/.jpeg/.bmp, case-insensitively.
bool has_image_extension(const std::filesystem::path& path);

/// Recursively indexes every image file under `dir`. Files that fail to decode
/// (or are too small for the grid) are listed in `skipped` and left out.
/// `threads` = 0 picks the hardware concurrency. Output does not depend on it.
IndexBuild build_index(const std::filesystem::path& dir, const IndexConfig& config, unsigned threads = 0);

void save_index(const ImageIndex& index, const std::filesystem::path& path);
ImageIndex load_index(const std::filesystem::path& path);

struct RankedItem {
    std::string id;
    double score;

    friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

struct RankedResult {
    MetricKind metric;
    int k;
    std::vector<RankedItem> items; // best first

    friend bool operator==(const RankedResult&, const RankedResult&) = default;
};

/// Scores every entry against the query (the query is the reference side for
/// asymmetric metrics), orders by similarity then ascending id, keeps k.
RankedResult query_top_k(const ImageIndex& index, const HistogramFeature& query, MetricKind metric,
                         int k = kDefaultTopK);
RankedResult query_top_k(const ImageIndex& index, const ImageBuffer& query, MetricKind metric,
                         int k = kDefaultTopK);

/// Copies the ranked files into out_dir as rank_NN_<basename> and writes
/// results.json. Stale rank_* files from earlier runs are removed.
void export_results(const RankedResult& result, const ImageIndex& index, const std::filesystem::path& out_dir);

} // namespace poserec
