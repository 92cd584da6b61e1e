#pragma once

#include "poserec/histogram.hpp"

#include <compare>
#include <optional>
#include <string_view>

namespace poserec {

enum class MetricKind { Correlation, ChiSquared, Intersection, Bhattacharyya };

enum class Polarity { HigherIsMoreSimilar, LowerIsMoreSimilar };

constexpr Polarity polarity(MetricKind metric) noexcept
{
    switch (metric) {
    case MetricKind::Correlation:
    case MetricKind::Intersection:
        return Polarity::HigherIsMoreSimilar;
    case MetricKind::ChiSquared:
    case MetricKind::Bhattacharyya:
        return Polarity::LowerIsMoreSimilar;
    }
    return Polarity::LowerIsMoreSimilar;
}

inline constexpr MetricKind kAllMetrics[] = {MetricKind::Correlation, MetricKind::ChiSquared,
                                             MetricKind::Intersection, MetricKind::Bhattacharyya};

/// "correlation", "chi-squared", "intersection", "bhattacharyya".
std::string_view to_string(MetricKind metric) noexcept;
std::optional<MetricKind> parse_metric(std::string_view name) noexcept;

struct Score {
    double value;
    MetricKind metric;

    friend bool operator==(const Score&, const Score&) = default;
};

// All comparisons throw Error{IncompatibleFeatures} unless
// feature_distance_ready(p, q) holds.

/// Pearson correlation over the full vector, clamped to [-1, 1]. Constant
/// vectors score 1 against an identical vector and 0 otherwise.
Score correlation(const HistogramFeature& p, const HistogramFeature& q);

/// Sum over bins with p_i > 0 of (p_i - q_i)^2 / p_i. Not symmetric: p is the
/// reference (the query when ranking).
Score chi_squared(const HistogramFeature& p, const HistogramFeature& q);

Score intersection(const HistogramFeature& p, const HistogramFeature& q);

/// sqrt(1 - BC) where BC = sum sqrt(p_i q_i) / sqrt(sum p * sum q). The
/// normalization is a no-op for unit-sum features but makes self-distance
/// exactly zero instead of a few ulps of summation error under a square root.
Score bhattacharyya(const HistogramFeature& p, const HistogramFeature& q);

Score compare(const HistogramFeature& p, const HistogramFeature& q, MetricKind metric);

/// Ordering by similarity: `less` means a ranks ahead of b. Throws
/// Error{MixedMetrics} if the scores come from different metrics.
std::weak_ordering more_similar(const Score& a, const Score& b);

} // namespace poserec
