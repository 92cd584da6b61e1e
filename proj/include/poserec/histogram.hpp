#pragma once

#include "poserec/imaging.hpp"

#include <span>
#include <vector>

namespace poserec {

/// L1-normalized per-region, per-channel color histogram.
///
/// Values are laid out as [region][channel][bin] and the whole
/// vector sums to one. Instances are immutable once built.
class HistogramFeature {
public:
    /// Validates the invariants (length, non-negativity, unit sum within 1e-9)
    /// and throws Error{InvalidFeature} when any is violated.
    static HistogramFeature from_values(int bins, int channels, int regions, std::vector<double> values);

    int bins() const noexcept { return bins_; }
    int channels() const noexcept { return channels_; }
    int regions() const noexcept { return regions_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    friend bool operator==(const HistogramFeature&, const HistogramFeature&) = default;

private:
    HistogramFeature(int bins, int channels, int regions, std::vector<double> values)
        : bins_(bins), channels_(channels), regions_(regions), values_(std::move(values)) {}

    friend HistogramFeature compute_histogram(const ImageBuffer&, const RegionGrid&, int);

    int bins_;
    int channels_;
    int regions_;
    std::vector<double> values_;
};

inline constexpr double kNormalizationTolerance = 1e-9;

/// Bin index of an 8-bit sample: floor(v*bins/256).
constexpr int bin_of(int value, int bins) noexcept { return value * bins / 256; }

/// Histogram of every region of the grid, channel by channel, in the image's
/// own color space. Counts are divided by width*height*channels.
HistogramFeature compute_histogram(const ImageBuffer& img, const RegionGrid& grid, int bins);

/// True when the two features can be compared bin-for-bin.
bool feature_distance_ready(const HistogramFeature& a, const HistogramFeature& b) noexcept;

} // namespace poserec
