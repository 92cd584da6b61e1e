#include "poserec/index.hpp"

#include "poserec/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <thread>

namespace poserec {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

ImageIndex::ImageIndex(IndexConfig config, std::vector<IndexEntry> entries)
    : config_(config), entries_(std::move(entries))
{
    const int expected_regions = config_.grid.rows * config_.grid.cols;
    const int expected_channels = config_.color_space == ColorSpace::GRAY ? 1 : 3;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const IndexEntry& e = entries_[i];
        if (i > 0 && !(entries_[i - 1].id < e.id))
            throw Error(ErrorKind::InvalidArgument, "entries not strictly sorted by id at '" + e.id + "'");
        if (e.feature.bins() != config_.bins || e.feature.channels() != expected_channels ||
            e.feature.regions() != expected_regions)
            throw Error(ErrorKind::InvalidArgument, "feature of '" + e.id + "' does not match the index config");
        if (e.width < 1 || e.height < 1)
            throw Error(ErrorKind::InvalidArgument, "entry '" + e.id + "' has non-positive dimensions");
    }
}

const IndexEntry* ImageIndex::find(std::string_view id) const noexcept
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const IndexEntry& e, std::string_view key) { return e.id < key; });
    return it != entries_.end() && it->id == id ? &*it : nullptr;
}

HistogramFeature extract_feature(const ImageBuffer& img, const IndexConfig& config)
{
    return compute_histogram(to_color_space(img, config.color_space), config.grid, config.bins);
}

bool has_image_extension(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// ---------------------------------------------------------------- build

IndexBuild build_index(const fs::path& dir, const IndexConfig& config, unsigned threads)
{
    if (config.bins < 2 || config.bins > 256)
        throw Error(ErrorKind::InvalidBinCount, "bins must lie in [2, 256], got " + std::to_string(config.bins));
    if (config.grid.rows < 1 || config.grid.cols < 1)
        throw Error(ErrorKind::InvalidArgument, "grid must have at least one row and column");

    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error(ErrorKind::IoError, dir.string() + " is not a readable directory");

    std::vector<fs::path> files;
    try {
        for (const auto& item : fs::recursive_directory_iterator(dir, fs::directory_options::skip_permission_denied))
            if (item.is_regular_file() && has_image_extension(item.path()))
                files.push_back(item.path());
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::IoError, e.what());
    }
    std::sort(files.begin(), files.end());

    std::vector<std::optional<IndexEntry>> slots(files.size());
    std::vector<std::optional<SkippedFile>> failures(files.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            const fs::path& file = files[i];
            try {
                ImageBuffer img = load_image(file);
                HistogramFeature feature = extract_feature(img, config);
                slots[i] = IndexEntry{file.lexically_relative(dir).generic_string(), file.generic_string(), img.width(),
                                      img.height(), std::move(feature)};
            } catch (const Error& e) {
                failures[i] = SkippedFile{file.generic_string(), e.what()};
            }
        }
    };

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(files.size(), 1)));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    pool.clear();

    std::vector<IndexEntry> entries;
    std::vector<SkippedFile> skipped;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (slots[i])
            entries.push_back(std::move(*slots[i]));
        else if (failures[i])
            skipped.push_back(std::move(*failures[i]));
    }
    if (entries.empty())
        throw Error(ErrorKind::EmptyDataset, "no decodable images under " + dir.string() + " (" +
                                                 std::to_string(skipped.size()) + " skipped)");

    std::sort(entries.begin(), entries.end(), [](const IndexEntry& a, const IndexEntry& b) { return a.id < b.id; });
    return IndexBuild{ImageIndex(config, std::move(entries)), std::move(skipped)};
}

// ---------------------------------------------------------------- persistence

namespace {

void write_text_atomically(const fs::path& path, const std::string& text)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out)
            throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

} // namespace

void save_index(const ImageIndex& index, const fs::path& path)
{
    const IndexConfig& cfg = index.config();
    json doc;
    doc["version"] = kIndexFormatVersion;
    doc["config"] = {{"bins", cfg.bins},
                     {"color_space", std::string(to_string(cfg.color_space))},
                     {"grid_rows", cfg.grid.rows},
                     {"grid_cols", cfg.grid.cols}};
    json entries = json::array();
    for (const IndexEntry& e : index.entries()) {
        entries.push_back({{"id", e.id},
                           {"path", e.path},
                           {"width", e.width},
                           {"height", e.height},
                           {"feature", std::vector<double>(e.feature.values().begin(), e.feature.values().end())}});
    }
    doc["entries"] = std::move(entries);
    write_text_atomically(path, doc.dump() + "\n");
}

ImageIndex load_index(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open index " + path.string());

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptIndex, path.string() + ": " + e.what());
    }

    try {
        if (!doc.is_object() || !doc.contains("version"))
            throw Error(ErrorKind::CorruptIndex, "missing version field");
        if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kIndexFormatVersion)
            throw Error(ErrorKind::VersionMismatch, "index format version " + doc["version"].dump() +
                                                        ", expected " + std::to_string(kIndexFormatVersion));

        const json& jc = doc.at("config");
        IndexConfig cfg;
        cfg.bins = jc.at("bins").get<int>();
        const auto space = parse_color_space(jc.at("color_space").get<std::string>());
        if (!space)
            throw Error(ErrorKind::CorruptIndex, "unknown color space " + jc.at("color_space").dump());
        cfg.color_space = *space;
        cfg.grid = {jc.at("grid_rows").get<int>(), jc.at("grid_cols").get<int>()};
        if (cfg.grid.rows < 1 || cfg.grid.cols < 1)
            throw Error(ErrorKind::CorruptIndex, "grid dimensions must be positive");

        const int channels = cfg.color_space == ColorSpace::GRAY ? 1 : 3;
        const int regions = cfg.grid.rows * cfg.grid.cols;
        std::vector<IndexEntry> entries;
        for (const json& je : doc.at("entries")) {
            auto feature = HistogramFeature::from_values(cfg.bins, channels, regions,
                                                         je.at("feature").get<std::vector<double>>());
            entries.push_back(IndexEntry{je.at("id").get<std::string>(), je.at("path").get<std::string>(),
                                         je.at("width").get<int>(), je.at("height").get<int>(), std::move(feature)});
        }
        return ImageIndex(cfg, std::move(entries));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptIndex, path.string() + ": " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::VersionMismatch || e.kind() == ErrorKind::CorruptIndex)
            throw;
        throw Error(ErrorKind::CorruptIndex, path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- query

RankedResult query_top_k(const ImageIndex& index, const HistogramFeature& query, MetricKind metric, int k)
{
    if (k < 1)
        throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
    if (index.size() == 0)
        throw Error(ErrorKind::EmptyDataset, "cannot query an empty index");

    std::vector<RankedItem> scored;
    scored.reserve(index.size());
    for (const IndexEntry& e : index.entries())
        scored.push_back({e.id, compare(query, e.feature, metric).value});

    const auto ranks_before = [metric](const RankedItem& a, const RankedItem& b) {
        const auto order = more_similar({a.score, metric}, {b.score, metric});
        return order != 0 ? order < 0 : a.id < b.id;
    };
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), ranks_before);
    scored.resize(keep);
    return RankedResult{metric, k, std::move(scored)};
}

RankedResult query_top_k(const ImageIndex& index, const ImageBuffer& query, MetricKind metric, int k)
{
    return query_top_k(index, extract_feature(query, index.config()), metric, k);
}

// ---------------------------------------------------------------- export

void export_results(const RankedResult& result, const ImageIndex& index, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    const int width = std::max<int>(2, static_cast<int>(std::to_string(result.items.size()).size()));
    std::set<std::string> written;
    json items = json::array();

    for (std::size_t i = 0; i < result.items.size(); ++i) {
        const RankedItem& item = result.items[i];
        const IndexEntry* entry = index.find(item.id);
        if (!entry)
            throw Error(ErrorKind::InvalidArgument, "result id '" + item.id + "' is not in the index");

        std::string rank = std::to_string(i + 1);
        rank.insert(0, static_cast<std::size_t>(width) - rank.size(), '0');
        const std::string name = "rank_" + rank + "_" + fs::path(entry->id).filename().string();
        const fs::path target = out_dir / name;
        fs::path tmp = out_dir / ("." + name + ".tmp");

        fs::copy_file(entry->path, tmp, fs::copy_options::overwrite_existing, ec);
        if (!ec)
            fs::rename(tmp, target, ec);
        if (ec)
            throw Error(ErrorKind::IoError, "cannot export " + entry->path + ": " + ec.message());
        written.insert(name);

        items.push_back({{"rank", i + 1}, {"id", item.id}, {"score", item.score}, {"source_path", entry->path}});
    }

    for (const auto& f : fs::directory_iterator(out_dir, ec)) {
        const std::string name = f.path().filename().string();
        if (name.rfind("rank_", 0) == 0 && f.is_regular_file() && !written.contains(name))
            fs::remove(f.path(), ec);
    }

    json manifest;
    manifest["metric"] = std::string(to_string(result.metric));
    manifest["k"] = result.k;
    manifest["items"] = std::move(items);
    write_text_atomically(out_dir / "results.json", manifest.dump(2) + "\n");
}

} // namespace poserec
