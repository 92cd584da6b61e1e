#include "poserec/metrics.hpp"

#include "poserec/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poserec {

namespace {

void require_comparable(const HistogramFeature& p, const HistogramFeature& q)
{
    if (!feature_distance_ready(p, q))
        throw Error(ErrorKind::IncompatibleFeatures,
                    "features differ in layout (bins " + std::to_string(p.bins()) + "/" + std::to_string(q.bins()) +
                        ", channels " + std::to_string(p.channels()) + "/" + std::to_string(q.channels()) +
                        ", regions " + std::to_string(p.regions()) + "/" + std::to_string(q.regions()) + ")");
}

} // namespace

std::string_view to_string(MetricKind metric) noexcept
{
    switch (metric) {
    case MetricKind::Correlation: return "correlation";
    case MetricKind::ChiSquared: return "chi-squared";
    case MetricKind::Intersection: return "intersection";
    case MetricKind::Bhattacharyya: return "bhattacharyya";
    }
    return "unknown";
}

std::optional<MetricKind> parse_metric(std::string_view name) noexcept
{
    for (MetricKind m : kAllMetrics)
        if (to_string(m) == name)
            return m;
    return std::nullopt;
}

Score correlation(const HistogramFeature& p, const HistogramFeature& q)
{
    require_comparable(p, q);
    const auto a = p.values();
    const auto b = q.values();
    const auto n = static_cast<double>(a.size());

    double mean_a = 0, mean_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;

    double cov = 0, var_a = 0, var_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }

    double value;
    if (var_a == 0 && var_b == 0)
        value = std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
    else if (var_a == 0 || var_b == 0)
        value = 0.0;
    else
        value = std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
    return {value, MetricKind::Correlation};
}

Score chi_squared(const HistogramFeature& p, const HistogramFeature& q)
{
    require_comparable(p, q);
    const auto a = p.values();
    const auto b = q.values();
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > 0) {
            const double d = a[i] - b[i];
            sum += d * d / a[i];
        }
    }
    return {sum, MetricKind::ChiSquared};
}

Score intersection(const HistogramFeature& p, const HistogramFeature& q)
{
    require_comparable(p, q);
    const auto a = p.values();
    const auto b = q.values();
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += std::min(a[i], b[i]);
    return {sum, MetricKind::Intersection};
}

Score bhattacharyya(const HistogramFeature& p, const HistogramFeature& q)
{
    require_comparable(p, q);
    const auto a = p.values();
    const auto b = q.values();
    double overlap = 0, sum_a = 0, sum_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        overlap += std::sqrt(a[i] * b[i]);
        sum_a += a[i];
        sum_b += b[i];
    }
    // sqrt(x*x) == x exactly in IEEE arithmetic, so p against itself gives
    // overlap == sum_a == sqrt(sum_a * sum_a) and a coefficient of exactly 1.
    const double coefficient = overlap / std::sqrt(sum_a * sum_b);
    return {std::sqrt(std::max(0.0, 1.0 - coefficient)), MetricKind::Bhattacharyya};
}

Score compare(const HistogramFeature& p, const HistogramFeature& q, MetricKind metric)
{
    switch (metric) {
    case MetricKind::Correlation: return correlation(p, q);
    case MetricKind::ChiSquared: return chi_squared(p, q);
    case MetricKind::Intersection: return intersection(p, q);
    case MetricKind::Bhattacharyya: return bhattacharyya(p, q);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown metric");
}

std::weak_ordering more_similar(const Score& a, const Score& b)
{
    if (a.metric != b.metric)
        throw Error(ErrorKind::MixedMetrics, std::string(to_string(a.metric)) + " vs " + std::string(to_string(b.metric)));
    if (a.value == b.value)
        return std::weak_ordering::equivalent;
    const bool a_first = polarity(a.metric) == Polarity::HigherIsMoreSimilar ? a.value > b.value : a.value < b.value;
    return a_first ? std::weak_ordering::less : std::weak_ordering::greater;
}

} // namespace poserec
