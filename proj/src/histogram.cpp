#include "poserec/histogram.hpp"

#include "poserec/error.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace poserec {

HistogramFeature HistogramFeature::from_values(int bins, int channels, int regions, std::vector<double> values)
{
    if (bins < 2 || bins > 256)
        throw Error(ErrorKind::InvalidBinCount, "bins must lie in [2, 256], got " + std::to_string(bins));
    if (channels < 1 || regions < 1)
        throw Error(ErrorKind::InvalidFeature, "channel and region counts must be positive");
    const auto expected = static_cast<std::size_t>(bins) * channels * regions;
    if (values.size() != expected)
        throw Error(ErrorKind::InvalidFeature,
                    "feature has " + std::to_string(values.size()) + " values, expected " + std::to_string(expected));

    double sum = 0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0)
            throw Error(ErrorKind::InvalidFeature, "feature values must be finite and non-negative");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kNormalizationTolerance)
        throw Error(ErrorKind::InvalidFeature, "feature sums to " + std::to_string(sum) + ", expected 1");

    return HistogramFeature(bins, channels, regions, std::move(values));
}

HistogramFeature compute_histogram(const ImageBuffer& img, const RegionGrid& grid, int bins)
{
    if (bins < 2 || bins > 256)
        throw Error(ErrorKind::InvalidBinCount, "bins must lie in [2, 256], got " + std::to_string(bins));

    const auto regions = segment_regions(img, grid);
    const int ch = img.channels();
    std::vector<std::uint64_t> counts(regions.size() * ch * bins, 0);

    for (std::size_t r = 0; r < regions.size(); ++r) {
        const auto px = regions[r].pixels();
        std::uint64_t* region_counts = &counts[r * ch * bins];
        for (std::size_t i = 0; i < px.size(); ++i) {
            const int c = static_cast<int>(i % ch);
            ++region_counts[c * bins + bin_of(px[i], bins)];
        }
    }

    const double total = static_cast<double>(img.width()) * img.height() * ch;
    std::vector<double> values(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        values[i] = static_cast<double>(counts[i]) / total;

    return HistogramFeature(bins, ch, static_cast<int>(regions.size()), std::move(values));
}

bool feature_distance_ready(const HistogramFeature& a, const HistogramFeature& b) noexcept
{
    return a.bins() == b.bins() && a.channels() == b.channels() && a.regions() == b.regions();
}

} // namespace poserec
