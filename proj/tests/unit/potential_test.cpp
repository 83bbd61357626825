// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "pam/field_io.hpp"
#include "pam/potential.hpp"

namespace pam {
namespace {

const DistributionSpec kExp = DistributionSpec::exponential();

TEST(Distribution, Guards)
{
    EXPECT_THROW(DistributionSpec::weibull(1.0), DomainError);
    EXPECT_THROW(DistributionSpec::weibull(0.0), DomainError);
    EXPECT_NO_THROW(DistributionSpec::weibull(0.5));
    EXPECT_THROW(DistributionSpec::pareto(2.0).validate(2), DomainError);
    EXPECT_NO_THROW(DistributionSpec::pareto(2.5).validate(2));
}

TEST(Distribution, ConditionalDrawsRespectBounds)
{
    for (const auto& spec : {kExp, DistributionSpec::weibull(0.5), DistributionSpec::pareto(3.0)}) {
        for (double u : {1e-12, 0.3, 0.7, 1 - 1e-12}) {
            EXPECT_GT(spec.draw_above(2.0, u), 2.0);
            EXPECT_LE(spec.draw_below(2.0, u), 2.0 * (1 + 1e-14));
            const double v = spec.draw_between(1.5, 2.5, u);
            EXPECT_GT(v, 1.5 * (1 - 1e-14));
            EXPECT_LE(v, 2.5 * (1 + 1e-14));
        }
        EXPECT_NEAR(spec.tail(spec.draw(std::exp(-1.0))), std::exp(-1.0), 1e-14);
    }
}

TEST(SampleDense, SmallFieldIsPositiveAndDeterministic)
{
    const auto a = sample_dense(1, 2, kExp, 12345);
    ASSERT_EQ(a.size(), 5u);
    for (const double v : a.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_TRUE(std::isfinite(v));
    }
    const auto b = sample_dense(1, 2, kExp, 12345);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    const auto c = sample_dense(1, 2, kExp, 12346);
    EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(SampleDense, SiteValueIndependentOfRadius)
{
    const auto small = sample_dense(2, 3, kExp, 7);
    const auto large = sample_dense(2, 9, kExp, 7);
    for_each_site(2, 3, [&](const LatticeSite& z, Count i) { EXPECT_EQ(small.value(i), large.value(z)); });
}

TEST(SampleDense, ExponentialMean)
{
    // 1e6 draws: 3 sigma of the mean is 0.003.
    const auto f = sample_dense(1, 500'000, kExp, 99);
    ASSERT_EQ(f.size(), 1'000'001u);
    double s = 0;
    for (const double v : f.values()) {
        s += v;
    }
    EXPECT_NEAR(s / static_cast<double>(f.size()), 1.0, 0.01);
}

TEST(SampleDense, MemoryBudget)
{
    SamplerLimits lim;
    lim.memory_bytes = 1000;
    EXPECT_THROW(sample_dense(2, 100, kExp, 1, lim), ResourceCapError);
}

TEST(SampleExceedances, ZeroThresholdReproducesDense)
{
    const auto dense = sample_dense(1, 50, kExp, 4242);
    const auto sparse = sample_exceedances(1, 50, 0.0, 4242);
    ASSERT_EQ(sparse.size(), 101u);
    for (const auto& rec : sparse.records()) {
        EXPECT_EQ(rec.value, dense.value(rec.site));
    }
}

TEST(SampleExceedances, HugeThresholdIsEmpty)
{
    EXPECT_EQ(sample_exceedances(2, 1000, 200.0, 1).size(), 0u);
}

TEST(SampleExceedances, RecordsAreDistinctAndAboveThreshold)
{
    const auto f = sample_exceedances(3, 200, 12.0, 17);
    EXPECT_GT(f.size(), 10u);
    std::set<LatticeSite> seen;
    for (const auto& rec : f.records()) {
        EXPECT_GT(rec.value, 12.0);
        EXPECT_LE(rec.site.norm1(), 200);
        EXPECT_TRUE(seen.insert(rec.site).second);
    }
}

TEST(SampleExceedances, CountMeanMatchesBinomial)
{
    const int reps = 10'000;
    const double p = std::exp(-3.0);
    double sum = 0;
    for (int s = 0; s < reps; ++s) {
        sum += static_cast<double>(sample_exceedances(1, 50, 3.0, static_cast<std::uint64_t>(s)).size());
    }
    const double mean = sum / reps;
    const double sigma = std::sqrt(101 * p * (1 - p) / reps);
    EXPECT_NEAR(mean, 101 * p, 3 * sigma);
}

TEST(SampleExceedances, RecordCap)
{
    SamplerLimits lim;
    lim.max_expected_records = 100;
    EXPECT_THROW(sample_exceedances(2, 1000, 1.0, 1, kExp, lim), ResourceCapError);
    EXPECT_THROW(sample_exceedances(1, 10, -1.0, 1), DomainError);
}

TEST(SampleExceedances, BandedThresholds)
{
    const std::vector<ThresholdBand> bands{{0, 9, 1.0}, {10, 39, 2.0}, {40, 100, 4.0}};
    const auto f = sample_exceedances(2, 100, bands, 3);
    for (const auto& rec : f.records()) {
        EXPECT_GT(rec.value, f.threshold_at(rec.site.norm1()));
    }
    const auto dense = densify(f);
    std::size_t expected = 0;
    for_each_site(2, 100, [&](const LatticeSite& z, Count i) {
        expected += dense.value(i) > f.threshold_at(z.norm1()) ? 1 : 0;
    });
    EXPECT_EQ(expected, f.size());
    EXPECT_THROW(sample_exceedances(2, 100, {{0, 9, 1.0}, {11, 100, 2.0}}, 3), DomainError);
}

// Chi-square upper tail for the count histogram, via the regularised gamma
// series (kept local so the test does not depend on the stats module).
double chi2_sf(double x, int dof)
{
    const double a = dof / 2.0;
    const double h = x / 2.0;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 2000; ++n) {
        term *= h / (a + n);
        sum += term;
    }
    return 1.0 - std::exp(a * std::log(h) - h - std::lgamma(a)) * sum;
}

TEST(SampleExceedances, JointLawMatchesDense)
{
    const int reps = 10'000;
    const double u = 3.0;
    std::vector<int> count_sparse;
    std::vector<int> count_dense;
    std::vector<double> max_sparse;
    std::vector<double> max_dense;
    for (int s = 0; s < reps; ++s) {
        // Different seed families so the two samples are independent.
        const auto sp = sample_exceedances(1, 50, u, 1'000'000 + s);
        const auto de = sample_dense(1, 50, kExp, 2'000'000 + s);
        count_sparse.push_back(static_cast<int>(sp.size()));
        int c = 0;
        for (const double v : de.values()) {
            c += v > u;
        }
        count_dense.push_back(c);
        if (sp.size() > 0) {
            double m = 0;
            for (const auto& rec : sp.records()) {
                m = std::max(m, rec.value);
            }
            max_sparse.push_back(m);
        }
        if (c > 0) {
            max_dense.push_back(de.max_value());
        }
    }
    // Count: chi-square homogeneity on cells 0..10 and >= 11.
    std::map<int, std::pair<double, double>> cells;
    for (int i = 0; i < reps; ++i) {
        cells[std::min(count_sparse[i], 11)].first += 1;
        cells[std::min(count_dense[i], 11)].second += 1;
    }
    double chi2 = 0;
    int dof = -1;
    for (const auto& [k, obs] : cells) {
        const double tot = obs.first + obs.second;
        if (tot < 10) {
            continue;
        }
        const double e = tot / 2;
        chi2 += (obs.first - e) * (obs.first - e) / e + (obs.second - e) * (obs.second - e) / e;
        ++dof;
    }
    EXPECT_GT(chi2_sf(chi2, dof), 1e-3) << chi2 << " dof " << dof;

    // Maximum given at least one exceedance: two-sample KS.
    std::sort(max_sparse.begin(), max_sparse.end());
    std::sort(max_dense.begin(), max_dense.end());
    double dmax = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    const double n1 = static_cast<double>(max_sparse.size());
    const double n2 = static_cast<double>(max_dense.size());
    while (i < max_sparse.size() && j < max_dense.size()) {
        if (max_sparse[i] <= max_dense[j]) {
            ++i;
        }
        else {
            ++j;
        }
        dmax = std::max(dmax, std::abs(i / n1 - j / n2));
    }
    const double ne = n1 * n2 / (n1 + n2);
    // Asymptotic KS p > 1e-3 corresponds to sqrt(ne) * D < 1.949.
    EXPECT_LT(std::sqrt(ne) * dmax, 1.949);
}

TEST(Refine, LowersThresholdExactly)
{
    const auto coarse = sample_exceedances(2, 60, 6.0, 77);
    const std::vector<double> lower{3.0};
    const auto fine = refine(coarse, lower, 1);
    EXPECT_GE(fine.size(), coarse.size());
    for (const auto& rec : fine.records()) {
        EXPECT_GT(rec.value, 3.0);
    }
    // The coarse records survive unchanged.
    std::map<LatticeSite, double> fine_map;
    for (const auto& rec : fine.records()) {
        fine_map[rec.site] = rec.value;
    }
    for (const auto& rec : coarse.records()) {
        ASSERT_TRUE(fine_map.count(rec.site));
        EXPECT_EQ(fine_map[rec.site], rec.value);
    }
    EXPECT_EQ(fine_map.size(), fine.size());
}

TEST(Refine, CountMeanMatchesDirectSampling)
{
    const int reps = 4000;
    const double p = std::exp(-2.0);
    double sum = 0;
    for (int s = 0; s < reps; ++s) {
        const auto coarse = sample_exceedances(1, 50, 5.0, s);
        const std::vector<double> lower{2.0};
        sum += static_cast<double>(refine(coarse, lower, 1).size());
    }
    const double sigma = std::sqrt(101 * p * (1 - p) / reps);
    EXPECT_NEAR(sum / reps, 101 * p, 3.5 * sigma);
}

TEST(OrderStats, DenseExample)
{
    // Lex order for d = 1, r = 1 is (-1, 0, +1).
    const PotentialField f(1, 1, kExp, 0, {1.0, 0.5, 2.0});
    const auto os = order_stats(f, 2);
    ASSERT_EQ(os.size(), 2u);
    EXPECT_EQ(os[0].rank, 1u);
    EXPECT_EQ(os[0].value, 2.0);
    EXPECT_EQ(os[0].site, LatticeSite{1});
    EXPECT_EQ(os[1].rank, 2u);
    EXPECT_EQ(os[1].value, 1.0);
    EXPECT_EQ(os[1].site, LatticeSite{-1});
    EXPECT_THROW(order_stats(f, 4), DomainError);
}

TEST(OrderStats, TiesGoToLexicographicallySmallerSite)
{
    const PotentialField f(1, 1, kExp, 0, {1.0, 1.0, 1.0});
    const auto os = order_stats(f, 3);
    EXPECT_EQ(os[0].site, LatticeSite{-1});
    EXPECT_EQ(os[1].site, LatticeSite{0});
    EXPECT_EQ(os[2].site, LatticeSite{1});
}

TEST(OrderStats, MatchesFullSort)
{
    const auto f = sample_dense(2, 30, kExp, 555);
    std::vector<std::pair<double, Count>> all;
    for (Count i = 0; i < f.size(); ++i) {
        all.emplace_back(f.value(i), i);
    }
    std::sort(all.begin(), all.end(), [](auto a, auto b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (const std::size_t k : {std::size_t{10}, f.size()}) {
        const auto os = order_stats(f, k);
        for (std::size_t i = 0; i < k; ++i) {
            ASSERT_EQ(os[i].value, all[i].first);
            ASSERT_EQ(os[i].site, f.site(all[i].second));
        }
    }
}

TEST(OrderStats, SparseAgreesWithCoupledDense)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sparse = sample_exceedances(2, 80, 5.0, seed);
        const auto dense = densify(sparse);
        const auto a = order_stats(sparse, sparse.size());
        const auto b = order_stats(dense, sparse.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            ASSERT_EQ(a[i].value, b[i].value);
            ASSERT_EQ(a[i].site, b[i].site);
        }
        EXPECT_THROW(order_stats(sparse, sparse.size() + 1), GuardFailure);
    }
}

TEST(Densify, ZeroThresholdCouplingIsTheDenseField)
{
    // With every band at threshold 0 the coupled field is sample_dense.
    const auto a = densify(sample_exceedances(2, 10, 0.0, 31));
    const auto b = sample_dense(2, 10, kExp, 31);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(FieldIo, TextRoundTrip)
{
    const auto f = sample_dense(2, 6, DistributionSpec::weibull(0.5), 8);
    std::stringstream ss;
    io::write_text(ss, f);
    const auto g = io::read_text_dense(ss, 2, 6, f.spec(), f.seed());
    EXPECT_TRUE(std::equal(f.values().begin(), f.values().end(), g.values().begin()));
}

TEST(FieldIo, BinaryRoundTrip)
{
    const auto f = sample_dense(3, 4, kExp, 9);
    std::stringstream ss;
    io::write_binary(ss, f);
    const auto back = io::read_binary(ss);
    const auto& g = std::get<PotentialField>(back.field);
    EXPECT_EQ(g.seed(), 9u);
    EXPECT_EQ(g.radius(), 4);
    EXPECT_TRUE(std::equal(f.values().begin(), f.values().end(), g.values().begin()));

    const auto s = sample_exceedances(2, 300, {{0, 99, 6.0}, {100, 300, 7.5}}, 10);
    std::stringstream ss2;
    io::write_binary(ss2, s);
    const auto back2 = io::read_binary(ss2);
    const auto& t = std::get<SparseExceedanceField>(back2.field);
    ASSERT_EQ(t.size(), s.size());
    EXPECT_TRUE(std::equal(s.bands().begin(), s.bands().end(), t.bands().begin()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(t.records()[i].site, s.records()[i].site);
        EXPECT_EQ(t.records()[i].value, s.records()[i].value);
    }
    std::stringstream bad("XXXX");
    EXPECT_THROW(io::read_binary(bad), DomainError);
}

} // namespace
} // namespace pam
