// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pam/extremes.hpp"

namespace pam {
namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n)
{
    std::vector<std::uint64_t> s(n);
    std::iota(s.begin(), s.end(), first);
    return s;
}

TEST(FloorPow, ExactPowers)
{
    EXPECT_EQ(floor_pow(100'000, 0.5), 316u);
    EXPECT_EQ(floor_pow(10'000, 0.5), 100u);
    EXPECT_EQ(floor_pow(1000, 1.0 / 3.0), 10u);
    EXPECT_EQ(floor_pow(10'000, 0.4), 39u);
    EXPECT_EQ(floor_pow(10'000, 0.25), 10u);
}

TEST(TopK, SmallBallMatchesDenseSort)
{
    // With k close to the ball size the threshold drops to 0, so the sparse
    // sample is the dense field itself.
    const auto dense = sample_dense(1, 10, DistributionSpec::exponential(), 5);
    const auto a = top_k(1, 10, 21, 5);
    const auto b = order_stats(dense, 21);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].value, b[i].value);
        EXPECT_EQ(a[i].site, b[i].site);
    }
}

TEST(TopK, MaximumFollowsExactLaw)
{
    // P(M_r <= x) = (1 - e^{-x})^{l_r}; one-sample KS over 2000 seeds.
    const std::int64_t r = 5000;
    const double l = static_cast<double>(ball_size(2, r));
    std::vector<double> u;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const double m = ball_maximum(2, r, s);
        u.push_back(std::exp(l * std::log1p(-std::exp(-m))));
    }
    std::sort(u.begin(), u.end());
    double dmax = 0;
    const double n = static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        dmax = std::max({dmax, (i + 1) / n - u[i], u[i] - i / n});
    }
    EXPECT_LT(std::sqrt(n) * dmax, 1.949);
}

TEST(TopK, RefinementPathStillExact)
{
    // Large k forces several refinements for some seeds; ranks stay sorted.
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto top = top_k(1, 100'000, 400, s);
        ASSERT_EQ(top.size(), 400u);
        for (std::size_t i = 1; i < top.size(); ++i) {
            EXPECT_GT(top[i - 1].value, top[i].value);
        }
    }
}

TEST(Envelope, RatioBracketInOneDimension)
{
    const std::int64_t radius = 100'000;
    int inside = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto rows = envelope_check(1, std::span<const std::int64_t>(&radius, 1), 0.5, 0.5, s);
        inside += rows[0].ratio >= 0.6 && rows[0].ratio <= 1.6;
    }
    EXPECT_GE(inside, 95);
}

TEST(Envelope, UpperEnvelopeInTwoDimensions)
{
    const std::int64_t radius = 1000;
    int holds = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        holds += envelope_check(2, std::span<const std::int64_t>(&radius, 1), 0.5, 0.5, s)[0].upper_holds;
    }
    EXPECT_GE(holds, 95);
}

TEST(Envelope, DomainGuard)
{
    const std::vector<std::int64_t> radii{19};
    EXPECT_THROW(envelope_check(1, radii, 0.5, 0.5, 1), DomainError);
}

TEST(OrderAsymptotics, OneDimension)
{
    const auto seeds = seed_range(100, 20);
    const auto v = order_asymptotics_check(1, 100'000, 0.5, seeds);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    EXPECT_NEAR(mean, 0.5, 0.15);
}

TEST(OrderAsymptotics, TwoDimensions)
{
    const auto seeds = seed_range(200, 20);
    const auto v = order_asymptotics_check(2, 10'000, 0.3, seeds);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    EXPECT_NEAR(mean, 1.7, 0.2);
}

TEST(OrderAsymptotics, SmallBetaApproachesMaximum)
{
    const auto seeds = seed_range(300, 20);
    const auto v = order_asymptotics_check(1, 100'000, 1e-3, seeds);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(v[i], ball_maximum(1, 100'000, seeds[i]) / std::log(1e5));
    }
}

TEST(GapProperty, FrequenciesIncreaseWithN)
{
    const std::vector<std::int64_t> ns{1000, 10'000, 100'000};
    const auto seeds = seed_range(0, 400);
    const auto rows = gap_property_check(1, ns, 0.25, 0.4, 0.1, seeds);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_GE(rows[i].freq_first, rows[i - 1].freq_first);
        EXPECT_GE(rows[i].freq_second, rows[i - 1].freq_second);
    }
}

TEST(Disconnected, AdjacencyDetection)
{
    const std::vector<LatticeSite> apart{{0, 0}, {1, 1}, {5, -2}};
    EXPECT_TRUE(totally_disconnected(apart));
    const std::vector<LatticeSite> planted{{0, 0}, {5, -2}, {5, -1}};
    EXPECT_FALSE(totally_disconnected(planted));
    const std::vector<LatticeSite> single{{3, 3}};
    EXPECT_TRUE(totally_disconnected(single));
}

} // namespace
} // namespace pam
