#include "oracles.hpp"
#include "poserec/error.hpp"
#include "poserec/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace poserec;

namespace {

HistogramFeature vec(std::vector<double> v)
{
    const int bins = static_cast<int>(v.size());
    return HistogramFeature::from_values(bins, 1, 1, std::move(v));
}

HistogramFeature random_feature(std::mt19937& rng, int bins = 16, int channels = 3, int regions = 4,
                                double zero_fraction = 0.2)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(bins) * channels * regions);
    double sum = 0;
    for (double& x : v) {
        x = u(rng) < zero_fraction ? 0.0 : u(rng);
        sum += x;
    }
    if (sum == 0) {
        v[0] = 1;
        sum = 1;
    }
    for (double& x : v)
        x /= sum;
    // renormalizing in double leaves the sum within a few ulps of 1
    return HistogramFeature::from_values(bins, channels, regions, std::move(v));
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("polarity table")
{
    CHECK(polarity(MetricKind::Correlation) == Polarity::HigherIsMoreSimilar);
    CHECK(polarity(MetricKind::Intersection) == Polarity::HigherIsMoreSimilar);
    CHECK(polarity(MetricKind::ChiSquared) == Polarity::LowerIsMoreSimilar);
    CHECK(polarity(MetricKind::Bhattacharyya) == Polarity::LowerIsMoreSimilar);
}

TEST_CASE("metric names round-trip")
{
    for (MetricKind m : kAllMetrics)
        CHECK(parse_metric(to_string(m)) == m);
    CHECK(parse_metric("chi-squared") == MetricKind::ChiSquared);
    CHECK_FALSE(parse_metric("chisqr").has_value());
}

TEST_CASE("correlation examples")
{
    std::mt19937 rng(1);
    const auto p = random_feature(rng);
    CHECK(correlation(p, p).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(correlation(vec({0.8, 0.2}), vec({0.2, 0.8})).value == doctest::Approx(-1.0).epsilon(1e-12));

    // degenerate constant vectors
    CHECK(correlation(vec({0.5, 0.5}), vec({0.5, 0.5})).value == 1.0);
    CHECK(correlation(vec({0.5, 0.5}), vec({0.8, 0.2})).value == 0.0);
    CHECK(correlation(vec({0.8, 0.2}), vec({0.5, 0.5})).value == 0.0);
}

TEST_CASE("correlation matches the extended-precision oracle")
{
    std::mt19937 rng(99);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_feature(rng);
        const auto q = random_feature(rng);
        const double expected = static_cast<double>(oracle::pearson(p.values(), q.values()));
        CHECK(std::fabs(correlation(p, q).value - expected) <= 1e-12);
    }
}

TEST_CASE("chi-squared examples")
{
    std::mt19937 rng(2);
    const auto p = random_feature(rng);
    CHECK(chi_squared(p, p).value == 0.0);
    CHECK(chi_squared(vec({0.5, 0.5}), vec({0.25, 0.75})).value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(chi_squared(vec({1.0, 0.0}), vec({0.0, 1.0})).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chi-squared is asymmetric")
{
    const auto p = vec({0.5, 0.5});
    const auto q = vec({0.25, 0.75});
    // (0.25^2/0.25 + 0.25^2/0.75) = 0.3333... vs 0.25
    CHECK(chi_squared(q, p).value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(chi_squared(p, q).value != chi_squared(q, p).value);
}

TEST_CASE("intersection examples")
{
    std::mt19937 rng(3);
    const auto p = random_feature(rng);
    CHECK(std::fabs(intersection(p, p).value - 1.0) <= 1e-9);
    CHECK(intersection(vec({1.0, 0.0}), vec({0.0, 1.0})).value == 0.0);
    CHECK(intersection(vec({0.5, 0.5}), vec({1.0, 0.0})).value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bhattacharyya examples")
{
    std::mt19937 rng(4);
    const auto p = random_feature(rng);
    CHECK(bhattacharyya(p, p).value <= 1e-9);
    CHECK(bhattacharyya(vec({1.0, 0.0}), vec({0.0, 1.0})).value == 1.0);
    CHECK(std::fabs(bhattacharyya(vec({0.5, 0.5}), vec({1.0, 0.0})).value - 0.5411961001461970) <= 1e-12);
}

TEST_CASE("symmetry, identity and bounds over random features (property)")
{
    std::mt19937 rng(2718);
    for (int i = 0; i < 500; ++i) {
        const int bins = 2 + static_cast<int>(rng() % 40);
        const auto p = random_feature(rng, bins, 3, 1 + static_cast<int>(rng() % 9), i % 2 ? 0.5 : 0.0);
        const auto q = HistogramFeature::from_values(
            p.bins(), p.channels(), p.regions(),
            [&] {
                auto f = random_feature(rng, p.bins(), p.channels(), p.regions(), 0.3);
                return std::vector<double>(f.values().begin(), f.values().end());
            }());

        CHECK(intersection(p, q).value == intersection(q, p).value);
        CHECK(std::fabs(bhattacharyya(p, q).value - bhattacharyya(q, p).value) <= 1e-12);
        CHECK(std::fabs(correlation(p, q).value - correlation(q, p).value) <= 1e-12);

        CHECK(std::fabs(correlation(p, p).value - 1.0) <= 1e-9);
        CHECK(std::fabs(chi_squared(p, p).value) <= 1e-9);
        CHECK(std::fabs(intersection(p, p).value - 1.0) <= 1e-9);
        CHECK(std::fabs(bhattacharyya(p, p).value) <= 1e-9);

        const double b = bhattacharyya(p, q).value;
        const double in = intersection(p, q).value;
        const double r = correlation(p, q).value;
        CHECK((b >= 0.0 && b <= 1.0));
        CHECK((in >= 0.0 && in <= 1.0 + 1e-12));
        CHECK((r >= -1.0 && r <= 1.0));
        CHECK(chi_squared(p, q).value >= 0.0);

        // nothing ranks above an exact duplicate of the query
        for (MetricKind m : kAllMetrics)
            CHECK(more_similar(compare(p, q, m), compare(p, p, m)) >= 0);
    }
}

TEST_CASE("incompatible features are rejected by every metric")
{
    const auto a = vec({0.5, 0.5});
    const auto b = vec({0.25, 0.25, 0.25, 0.25});
    for (MetricKind m : kAllMetrics) {
        try {
            compare(a, b, m);
            FAIL("expected IncompatibleFeatures");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::IncompatibleFeatures);
        }
    }
}

TEST_CASE("more_similar follows polarity")
{
    CHECK(more_similar({0.1, MetricKind::Bhattacharyya}, {0.5, MetricKind::Bhattacharyya}) < 0);
    CHECK(more_similar({0.9, MetricKind::Intersection}, {0.3, MetricKind::Intersection}) < 0);
    CHECK(more_similar({0.2, MetricKind::ChiSquared}, {0.2, MetricKind::ChiSquared}) == 0);
    CHECK(more_similar({-0.5, MetricKind::Correlation}, {0.5, MetricKind::Correlation}) > 0);
    try {
        (void)more_similar({0.1, MetricKind::Bhattacharyya}, {0.1, MetricKind::Intersection});
        FAIL("expected MixedMetrics");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MixedMetrics);
    }
}

} // TEST_SUITE
