// SPDX-License-Identifier: Apache-2.0
//! \file pam/stats.hpp
//! Limit laws and goodness-of-fit tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "pam/error.hpp"

namespace pam {

class LimitLaw {
  public:
    enum class Kind { gumbel, std_exponential, laplace_coordinate, uniform01 };

    //! P(X <= x) = exp(-2^d e^{-(x - location)}).
    static LimitLaw gumbel(int d, double location) { return {Kind::gumbel, d, location, "gumbel"}; }

    //! Growth-rate reference law exp{-2^d e^{-x+2d}} (location +2d).
    static LimitLaw gumbel_pam(int d) { return {Kind::gumbel, d, 2.0 * d, "gumbel_pam"}; }

    //! The same family centred where the lower index limit puts it:
    //! exp{-2^d e^{-x-2d}}.
    static LimitLaw gumbel_pam_consistent(int d) { return {Kind::gumbel, d, -2.0 * d, "gumbel_pam_consistent"}; }

    static LimitLaw std_exponential() { return {Kind::std_exponential, 1, 1.0, "std_exponential"}; }

    //! One coordinate of the location limit: density (rate/2) e^{-rate |x|}.
    static LimitLaw laplace_coordinate(double rate = 1.0)
    {
        if (!(rate > 0.0)) {
            throw DomainError("laplace rate must be positive");
        }
        return {Kind::laplace_coordinate, 1, rate, "laplace_coordinate"};
    }

    static LimitLaw uniform01() { return {Kind::uniform01, 1, 0.0, "uniform01"}; }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] double parameter() const noexcept { return p_; }

    [[nodiscard]] double cdf(double x) const
    {
        switch (kind_) {
        case Kind::gumbel:
            return std::exp(-std::exp(d_ * std::numbers::ln2 - (x - p_)));
        case Kind::std_exponential:
            return x <= 0.0 ? 0.0 : -std::expm1(-x);
        case Kind::laplace_coordinate:
            return x < 0.0 ? 0.5 * std::exp(p_ * x) : 1.0 - 0.5 * std::exp(-p_ * x);
        case Kind::uniform01:
            return std::clamp(x, 0.0, 1.0);
        }
        return 0.0;
    }

    [[nodiscard]] double quantile(double q) const
    {
        if (!(q > 0.0 && q < 1.0)) {
            throw DomainError("quantile level must lie in (0, 1)");
        }
        switch (kind_) {
        case Kind::gumbel:
            return p_ + d_ * std::numbers::ln2 - std::log(-std::log(q));
        case Kind::std_exponential:
            return -std::log1p(-q);
        case Kind::laplace_coordinate:
            return q < 0.5 ? std::log(2.0 * q) / p_ : -std::log(2.0 * (1.0 - q)) / p_;
        case Kind::uniform01:
            return q;
        }
        return 0.0;
    }

  private:
    LimitLaw(Kind k, int d, double p, std::string name) : kind_(k), d_(d), p_(p), name_(std::move(name)) {}

    Kind kind_;
    int d_;
    double p_;
    std::string name_;
};

//! P(sqrt(N) D > lambda) in the Kolmogorov limit.
inline double kolmogorov_survival(double lambda)
{
    if (!(lambda > 0.0)) {
        return 1.0;
    }
    if (lambda < 1.0) {
        // 1 - sqrt(2 pi)/lambda sum_k exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        const double a = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        double s = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * a);
            s += term;
            if (term < 1e-18) {
                break;
            }
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? term : -term);
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

//! One-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsResult ks_test(std::span<const double> samples, const LimitLaw& law)
{
    if (samples.empty()) {
        throw DomainError("KS test needs at least one sample");
    }
    std::vector<double> x(samples.begin(), samples.end());
    for (const double v : x) {
        if (!std::isfinite(v)) {
            throw DomainError("KS test needs finite samples");
        }
    }
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = law.cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_survival(std::sqrt(n) * d), x.size()};
}

//! Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) {
        throw DomainError("two-sample KS needs nonempty samples");
    }
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto n = static_cast<double>(x.size());
    const auto m = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) {
            ++i;
        }
        while (j < y.size() && y[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {d, kolmogorov_survival(std::sqrt(n * m / (n + m)) * d), x.size() + y.size()};
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

//! Homogeneity of two histograms over the same cells; cells whose pooled
//! count is below min_pooled are merged into their right neighbour.
inline ChiSquareResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b,
                                              double min_pooled = 10.0)
{
    if (a.size() != b.size()) {
        throw DomainError("histograms need the same cells");
    }
    std::vector<std::pair<double, double>> cells;
    std::pair<double, double> acc{0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc.first += a[i];
        acc.second += b[i];
        if (acc.first + acc.second >= min_pooled) {
            cells.push_back(acc);
            acc = {0, 0};
        }
    }
    if (acc.first + acc.second > 0) {
        if (cells.empty()) {
            cells.push_back(acc);
        }
        else {
            cells.back().first += acc.first;
            cells.back().second += acc.second;
        }
    }
    double na = 0;
    double nb = 0;
    for (const auto& c : cells) {
        na += c.first;
        nb += c.second;
    }
    ChiSquareResult r;
    r.dof = static_cast<int>(cells.size()) - 1;
    if (r.dof < 1) {
        return r;
    }
    const double total = na + nb;
    for (const auto& c : cells) {
        const double pooled = c.first + c.second;
        const double ea = pooled * na / total;
        const double eb = pooled * nb / total;
        r.statistic += (c.first - ea) * (c.first - ea) / ea + (c.second - eb) * (c.second - eb) / eb;
    }
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
    return r;
}

struct EcdfRow {
    double x = 0.0;
    double empirical = 0.0;
    double model = 0.0;
};

inline std::vector<EcdfRow> ecdf_table(std::span<const double> samples, const LimitLaw& law)
{
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    std::vector<EcdfRow> rows;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i + 1 < x.size() && x[i + 1] == x[i]) {
            continue;
        }
        rows.push_back({x[i], static_cast<double>(i + 1) / n, law.cdf(x[i])});
    }
    return rows;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

//! Sample quantile by linear interpolation between order statistics.
inline double sample_quantile(std::vector<double> x, double q)
{
    if (x.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline Moments moments(std::span<const double> s)
{
    Moments m;
    if (s.empty()) {
        return m;
    }
    for (const double v : s) {
        m.mean += v;
    }
    m.mean /= static_cast<double>(s.size());
    for (const double v : s) {
        m.variance += (v - m.mean) * (v - m.mean);
    }
    m.variance /= std::max<double>(1.0, static_cast<double>(s.size()) - 1.0);
    std::vector<double> x(s.begin(), s.end());
    m.median = sample_quantile(x, 0.5);
    m.q1 = sample_quantile(x, 0.25);
    m.q3 = sample_quantile(std::move(x), 0.75);
    return m;
}

inline double correlation(std::span<const double> a, std::span<const double> b)
{
    const auto ma = moments(a);
    const auto mb = moments(b);
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        c += (a[i] - ma.mean) * (b[i] - mb.mean);
    }
    c /= std::max<double>(1.0, static_cast<double>(a.size()) - 1.0);
    return c / std::sqrt(ma.variance * mb.variance);
}

} // namespace pam
