// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pam/oracle.hpp"
#include "pam/rng.hpp"

namespace pam {
namespace {

const DistributionSpec kExp = DistributionSpec::exponential();

TEST(DenseOracle, SingleZeroSite)
{
    for (int d = 1; d <= 3; ++d) {
        const PotentialField f(d, 0, kExp, 0, {0.0});
        const auto o = dense_exponential_oracle(f, 1.0);
        EXPECT_NEAR(o.log_mass, -2.0 * d, 1e-14);
        EXPECT_EQ(o.weights[0], 1.0);
    }
}

TEST(DenseOracle, TimeZero)
{
    const auto f = sample_dense(2, 3, kExp, 1);
    const auto o = dense_exponential_oracle(f, 0.0);
    EXPECT_EQ(o.log_mass, 0.0);
    EXPECT_EQ(o.weights[lex_rank(LatticeSite::origin(2), 3)], 1.0);
    EXPECT_EQ(std::count(o.weights.begin(), o.weights.end(), 0.0), static_cast<long>(o.weights.size() - 1));
}

TEST(DenseOracle, SizeCap)
{
    const auto f = sample_dense(2, 10, kExp, 1);
    EXPECT_THROW(dense_exponential_oracle(f, 1.0), ResourceCapError);
}

TEST(DenseOracle, LargeTimeStaysFinite)
{
    const auto f = sample_dense(1, 20, kExp, 2);
    const auto o = dense_exponential_oracle(f, 500.0);
    EXPECT_TRUE(std::isfinite(o.log_mass));
    // Growth rate tends to the principal eigenvalue, below max xi.
    EXPECT_LT(o.log_mass / 500.0, f.max_value());
}

TEST(SimplexIntegral, TwoNodes)
{
    const std::vector<double> e{0.0, 1.0};
    EXPECT_NEAR(simplex_integral(e, 1.0), std::numbers::e - 1.0, 1e-12);
    const std::vector<double> z{0.0, 0.0};
    EXPECT_NEAR(simplex_integral(z, 1.0), 1.0, 1e-15);
    const std::vector<double> one{2.5};
    EXPECT_NEAR(simplex_integral(one, 0.7), std::exp(2.5 * 0.7), 1e-14);
}

TEST(SimplexIntegral, ConfluentTriple)
{
    // Nodes (a, a, a): t^2 e^{at} / 2.
    const std::vector<double> e{1.5, 1.5, 1.5};
    EXPECT_NEAR(simplex_integral(e, 2.0), 4.0 * std::exp(3.0) / 2.0, 1e-12 * std::exp(3.0));
}

// Composite Simpson on the unit square after the Duffy map
// t0 = u, t1 = (1 - u) v, with 1001 x 1001 nodes.
double quadrature_two_simplex(double e0, double e1, double e2)
{
    const int m = 1000;
    const double h = 1.0 / m;
    auto w = [m](int i) { return (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double s = 0;
    for (int i = 0; i <= m; ++i) {
        const double u = i * h;
        double inner = 0;
        for (int j = 0; j <= m; ++j) {
            const double v = j * h;
            const double t0 = u;
            const double t1 = (1 - u) * v;
            inner += w(j) * std::exp(e0 * t0 + e1 * t1 + e2 * (1 - t0 - t1));
        }
        s += w(i) * (1 - u) * inner * h / 3;
    }
    return s * h / 3;
}

TEST(SimplexIntegral, ThreeNodesAgainstQuadrature)
{
    const std::vector<double> e{0.0, 1.0, 2.0};
    const double q = quadrature_two_simplex(0.0, 1.0, 2.0);
    EXPECT_NEAR(simplex_integral(e, 1.0), q, 1e-6);
    EXPECT_NEAR(simplex_integral(e, 1.0), (std::numbers::e - 1) * (std::numbers::e - 1) / 2, 1e-13);
}

TEST(SimplexIntegral, PermutationInvariance)
{
    rng::CounterEngine eng(7, rng::Tag::test);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + eng.below(7);
        std::vector<double> e(n);
        for (auto& v : e) {
            v = 10.0 * eng.uniform() - 3.0;
        }
        const double t = 0.1 + 3.0 * eng.uniform();
        const double ref = simplex_integral(e, t);
        for (int p = 0; p < 5; ++p) {
            for (std::size_t i = n - 1; i > 0; --i) {
                std::swap(e[i], e[eng.below(i + 1)]);
            }
            EXPECT_NEAR(simplex_integral(e, t), ref, 1e-10 * ref);
        }
    }
}

TEST(SimplexIntegral, MonotoneInNodesAndTime)
{
    rng::CounterEngine eng(8, rng::Tag::test);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> e(1 + eng.below(6));
        for (auto& v : e) {
            v = 6.0 * eng.uniform();
        }
        const double t = 0.1 + 2.0 * eng.uniform();
        const double base = simplex_integral(e, t);
        auto up = e;
        up[eng.below(up.size())] += 0.5 * eng.uniform() + 1e-3;
        EXPECT_GT(simplex_integral(up, t), base);
        EXPECT_GT(simplex_integral(e, t * 1.01), base);
    }
}

TEST(SimplexIntegral, NearConfluentNodes)
{
    // (e^{tb} - e^{ta}) / (b - a) evaluated without cancellation.
    const double a = 0.7;
    const double delta = 1e-5;
    const double t = 1.3;
    const std::vector<double> e{a, a + delta};
    const double exact = std::exp(t * a) * std::expm1(t * delta) / delta;
    EXPECT_NEAR(simplex_integral(e, t), exact, 1e-8);
    // Confluent limit with its first-order correction.
    EXPECT_NEAR(simplex_integral(e, t), t * std::exp(t * a) * (1 + t * delta / 2), 1e-8);
}

TEST(SimplexIntegral, Guards)
{
    const std::vector<double> e{0.0, 1.0};
    EXPECT_THROW(simplex_integral(e, 0.0), DomainError);
    const std::vector<double> bad{0.0, std::nan("")};
    EXPECT_THROW(simplex_integral(bad, 1.0), DomainError);
}

TEST(UpperBound, Examples)
{
    const std::vector<double> a{0.0, 1.0};
    EXPECT_TRUE(uppb_bound_check(a, 1.0));
    const std::vector<double> b{0.0, 5.0};
    EXPECT_TRUE(uppb_bound_check(b, 2.0));
    const std::vector<double> tie{1.0, 1.0};
    EXPECT_THROW(uppb_bound_check(tie, 1.0), DomainError);
}

TEST(UpperBound, RandomisedInputs)
{
    rng::CounterEngine eng(9, rng::Tag::test);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> e(2 + eng.below(6));
        for (auto& v : e) {
            v = 8.0 * eng.uniform() - 2.0;
        }
        const double t = 3.0 * eng.uniform();
        EXPECT_TRUE(uppb_bound_check(e, t));
    }
}

TEST(PoissonTail, KnownValues)
{
    EXPECT_NEAR(poisson_tail_above(1.0, 0), 1 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(poisson_tail_above(2.0, 1), 1 - 3 * std::exp(-2.0), 1e-15);
    // Deep tail: dominated by the first term.
    const double first = std::exp(-1.0) / std::tgamma(20.0);
    EXPECT_GT(poisson_tail_above(1.0, 18), first);
    EXPECT_LT(poisson_tail_above(1.0, 18), first * 1.06);
}

TEST(PathSum, NoJumpTerm)
{
    const auto f = sample_dense(1, 3, kExp, 4);
    const auto v = path_sum_fk(f, 0.8, LatticeSite{0}, 0);
    EXPECT_NEAR(v.value, std::exp((f.value(LatticeSite{0}) - 2.0) * 0.8), 1e-15);
}

TEST(PathSum, ZeroPotentialGivesSurvivalProbability)
{
    const PotentialField f(2, 3, kExp, 0, std::vector<double>(ball_size(2, 3), 0.0));
    const auto all = path_sum_fk_all(f, 0.4, 10, {.parallel = false});
    double total = 0;
    for (const double v : all.values) {
        total += v;
    }
    const auto o = dense_exponential_oracle(f, 0.4);
    EXPECT_NEAR(total, std::exp(o.log_mass), all.tail_bound * all.values.size() + 1e-14);
    EXPECT_LT(total, 1.0);
}

TEST(PathSum, MatchesDenseOracle)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = sample_dense(1, 3, kExp, seed);
        for (const double t : {0.5, 1.0}) {
            const auto all = path_sum_fk_all(f, t, 18);
            EXPECT_LT(all.tail_bound, t == 0.5 ? 1e-10 : 1e-8);
            const auto o = dense_exponential_oracle(f, t);
            for (std::size_t i = 0; i < all.values.size(); ++i) {
                const double u = std::exp(o.log_mass) * o.weights[i];
                EXPECT_NEAR(all.values[i], u, 1e-8 * u) << seed << " " << t << " " << i;
            }
        }
    }
}

TEST(PathSum, TwoDimensionsAndSingleSiteQuery)
{
    const auto f = sample_dense(2, 2, kExp, 6);
    const auto all = path_sum_fk_all(f, 0.3, 9);
    const auto o = dense_exponential_oracle(f, 0.3);
    for (std::size_t i = 0; i < all.values.size(); ++i) {
        const double u = std::exp(o.log_mass) * o.weights[i];
        EXPECT_NEAR(all.values[i], u, all.tail_bound + 1e-12 * u);
    }
    const auto one = path_sum_fk(f, 0.3, LatticeSite{1, -1}, 9);
    EXPECT_EQ(one.value, all.values[f.index_of(LatticeSite{1, -1})]);
}

TEST(PathSum, ParallelReductionIsDeterministic)
{
    const auto f = sample_dense(1, 4, kExp, 12);
    const auto a = path_sum_fk_all(f, 0.5, 14, {.parallel = true});
    const auto b = path_sum_fk_all(f, 0.5, 14, {.parallel = false});
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.paths, b.paths);
}

TEST(PathSum, PruningKeepsTheBoundCertified)
{
    const auto f = sample_dense(1, 3, kExp, 2);
    const auto pruned = path_sum_fk_all(f, 0.5, 18, {.prune_target = 1e-6});
    const auto full = path_sum_fk_all(f, 0.5, 18);
    EXPECT_LT(pruned.paths, full.paths);
    const auto o = dense_exponential_oracle(f, 0.5);
    for (std::size_t i = 0; i < pruned.values.size(); ++i) {
        const double u = std::exp(o.log_mass) * o.weights[i];
        EXPECT_LE(pruned.values[i], u * (1 + 1e-12));
        EXPECT_GE(pruned.values[i] + pruned.tail_bound, u * (1 - 1e-12));
    }
}

TEST(PathSum, Budget)
{
    const auto f = sample_dense(3, 2, kExp, 2);
    EXPECT_THROW(path_sum_fk_all(f, 0.5, 30), ResourceCapError);
}

} // namespace
} // namespace pam
