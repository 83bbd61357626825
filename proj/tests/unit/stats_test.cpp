// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pam/parallel.hpp"
#include "pam/rng.hpp"
#include "pam/stats.hpp"

using namespace pam;

namespace {

// Kolmogorov survival function by the plain alternating series in long
// double with a fixed, generous number of terms.
long double kolmogorov_reference(long double lambda)
{
    long double s = 0.0L;
    for (int k = 1; k <= 400; ++k) {
        const long double term = 2.0L * std::exp(-2.0L * k * k * lambda * lambda);
        s += (k % 2 ? term : -term);
    }
    return s;
}

} // namespace

TEST(LimitLaw, CdfExamples)
{
    for (int d = 1; d <= 3; ++d) {
        const auto g = LimitLaw::gumbel_pam(d);
        EXPECT_NEAR(g.cdf(2.0 * d + d * std::numbers::ln2), std::exp(-1.0), 1e-12);
        const auto c = LimitLaw::gumbel_pam_consistent(d);
        EXPECT_NEAR(c.cdf(-2.0 * d + d * std::numbers::ln2), std::exp(-1.0), 1e-12);
    }
    EXPECT_DOUBLE_EQ(LimitLaw::laplace_coordinate().cdf(0.0), 0.5);
    EXPECT_NEAR(LimitLaw::std_exponential().cdf(std::numbers::ln2), 0.5, 1e-15);
    EXPECT_EQ(LimitLaw::std_exponential().cdf(-1.0), 0.0);
}

TEST(LimitLaw, QuantileInvertsCdf)
{
    const std::vector<LimitLaw> laws{LimitLaw::gumbel_pam(1), LimitLaw::gumbel_pam(2), LimitLaw::std_exponential(),
                                     LimitLaw::laplace_coordinate(), LimitLaw::laplace_coordinate(2.5),
                                     LimitLaw::uniform01()};
    for (const auto& law : laws) {
        for (double q = 0.01; q < 1.0; q += 0.049) {
            EXPECT_NEAR(law.cdf(law.quantile(q)), q, 1e-12) << law.name();
        }
    }
    EXPECT_THROW((void)LimitLaw::uniform01().quantile(1.0), DomainError);
    EXPECT_THROW(LimitLaw::laplace_coordinate(0.0), DomainError);
}

TEST(KsTest, SinglePointAgainstUniform)
{
    const std::vector<double> x{0.5};
    EXPECT_DOUBLE_EQ(ks_test(x, LimitLaw::uniform01()).distance, 0.5);
}

TEST(KsTest, MidpointQuantiles)
{
    std::vector<double> x;
    for (int i = 1; i <= 100; ++i) {
        x.push_back((i - 0.5) / 100.0);
    }
    EXPECT_NEAR(ks_test(x, LimitLaw::uniform01()).distance, 0.005, 1e-12);
}

TEST(KsTest, RejectsBadSamples)
{
    EXPECT_THROW(ks_test(std::vector<double>{}, LimitLaw::uniform01()), DomainError);
    EXPECT_THROW(ks_test(std::vector<double>{0.1, NAN}, LimitLaw::uniform01()), DomainError);
}

TEST(KsTest, KolmogorovSurvivalMatchesSeries)
{
    // (D, N) reference points.
    const std::vector<std::pair<double, int>> pts{{0.05, 100},  {0.1, 100},   {0.02, 1000}, {0.03, 2000},
                                                  {0.15, 50},   {0.01, 3000}, {0.2, 30},    {0.04, 500},
                                                  {0.025, 5000}, {0.3, 20}};
    for (const auto& [d, n] : pts) {
        const double lambda = std::sqrt(static_cast<double>(n)) * d;
        EXPECT_NEAR(kolmogorov_survival(lambda), static_cast<double>(kolmogorov_reference(lambda)), 1e-8)
            << "lambda " << lambda;
    }
    EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
    EXPECT_NEAR(kolmogorov_survival(1.358), 0.05, 1e-3);
}

TEST(KsTest, GeneratorSelfTest)
{
    // Exp(1) draws from the counter engine, 100 meta-trials of 10^4.
    const auto law = LimitLaw::std_exponential();
    std::vector<double> p(100);
    parallel_for(p.size(), 4, [&](std::size_t trial) {
        rng::CounterEngine eng(2024, rng::Tag::test, static_cast<std::uint32_t>(trial));
        std::vector<double> x(10000);
        for (auto& v : x) {
            v = eng.exponential();
        }
        p[trial] = ks_test(x, law).p_value;
    });
    int passed = 0;
    for (const double v : p) {
        passed += v > 0.001;
    }
    EXPECT_GE(passed, 99);
}

TEST(KsTwoSample, IdenticalAndDisjoint)
{
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{6, 7, 8};
    EXPECT_DOUBLE_EQ(ks_two_sample(a, a).distance, 0.0);
    EXPECT_DOUBLE_EQ(ks_two_sample(a, b).distance, 1.0);
    const std::vector<double> c{1, 3, 5};
    EXPECT_NEAR(ks_two_sample(a, c).distance, 1.0 / 3 - 1.0 / 5, 1e-15);
}

TEST(ChiSquare, HandComputed)
{
    // 2x2 table (10, 20 / 20, 10): chi^2 = 4 * 25/15 = 6.666..., one dof.
    const std::vector<double> a{10, 20};
    const std::vector<double> b{20, 10};
    const auto r = chi_square_homogeneity(a, b);
    EXPECT_EQ(r.dof, 1);
    EXPECT_NEAR(r.statistic, 20.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(20.0 / 3.0 / 2.0)), 1e-12);
}

TEST(ChiSquare, MergesSparseCells)
{
    const std::vector<double> a{50, 50, 1, 1};
    const std::vector<double> b{50, 50, 2, 0};
    const auto r = chi_square_homogeneity(a, b, 10.0);
    EXPECT_EQ(r.dof, 1);
}

TEST(Summaries, MomentsAndQuantiles)
{
    const std::vector<double> x{4, 1, 3, 2, 5};
    const auto m = moments(x);
    EXPECT_DOUBLE_EQ(m.mean, 3.0);
    EXPECT_DOUBLE_EQ(m.variance, 2.5);
    EXPECT_DOUBLE_EQ(m.median, 3.0);
    EXPECT_DOUBLE_EQ(m.q1, 2.0);
    EXPECT_DOUBLE_EQ(m.q3, 4.0);
    const std::vector<double> y{2, 4, 6, 8, 10};
    EXPECT_NEAR(correlation(std::vector<double>{1, 2, 3, 4, 5}, y), 1.0, 1e-15);
}

TEST(Summaries, EcdfTableCollapsesTies)
{
    const std::vector<double> x{0.2, 0.2, 0.7};
    const auto rows = ecdf_table(x, LimitLaw::uniform01());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(rows[0].empirical, 2.0 / 3, 1e-15);
    EXPECT_DOUBLE_EQ(rows[1].model, 0.7);
}

TEST(Parallel, ResultsIndependentOfThreads)
{
    std::vector<double> a(257);
    std::vector<double> b(257);
    parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = std::sin(static_cast<double>(i)); });
    parallel_for(b.size(), 8, [&](std::size_t i) { b[i] = std::sin(static_cast<double>(i)); });
    EXPECT_EQ(a, b);
}

TEST(Parallel, RethrowsLowestIndex)
{
    try {
        parallel_for(100, 4, [](std::size_t i) {
            if (i == 17 || i == 80) {
                throw DomainError(std::to_string(i));
            }
        });
        FAIL();
    }
    catch (const DomainError& e) {
        EXPECT_STREQ(e.what(), "17");
    }
}
