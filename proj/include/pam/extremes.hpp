// SPDX-License-Identifier: Apache-2.0
//! \file pam/extremes.hpp
//! Extreme order statistics of the potential on large balls, and the
//! empirical checks of their almost-sure envelopes.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pam/potential.hpp"

namespace pam {

//! Exact top-k of the potential on B_r without materialising the ball.
//!
//! Samples exceedances above a threshold with about k + 6 sqrt(k) + 30
//! expected records; when fewer than k arrive, the threshold is lowered by
//! an exact refinement until the sample holds k of them.
inline OrderStatistics top_k(int d, std::int64_t r, std::size_t k, std::uint64_t seed,
                             DistributionSpec spec = DistributionSpec::exponential(), const SamplerLimits& limits = {})
{
    const auto n = static_cast<double>(ball_size(d, r));
    if (static_cast<double>(k) > n) {
        throw DomainError("K exceeds the number of sites");
    }
    const double target = static_cast<double>(k) + 6.0 * std::sqrt(static_cast<double>(k)) + 30.0;
    double e = target >= n ? 0.0 : std::log(n / target);
    auto field = sample_exceedances(d, r, spec.from_exp(e), seed, spec, limits);
    std::uint32_t level = 0;
    while (field.size() < k) {
        e = std::max(0.0, e - 1.0);
        const double lower = spec.from_exp(e);
        field = refine(field, std::span<const double>(&lower, 1), ++level, limits);
    }
    return order_stats(field, k);
}

//! Maximum of the potential on B_r.
inline double ball_maximum(int d, std::int64_t r, std::uint64_t seed)
{
    return top_k(d, r, 1, seed).front().value;
}

//! floor(n^p) computed without the rounding of pow at exact powers.
inline std::size_t floor_pow(std::int64_t n, double p)
{
    auto k = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), p)));
    while (std::pow(static_cast<double>(k + 1), 1.0 / p) <= static_cast<double>(n) * (1 + 1e-15)) {
        ++k;
    }
    while (k > 0 && std::pow(static_cast<double>(k), 1.0 / p) > static_cast<double>(n) * (1 + 1e-15)) {
        --k;
    }
    return k;
}

struct EnvelopeRow {
    std::int64_t r = 0;
    double max_value = 0.0;
    double upper_envelope = 0.0; //!< d log r + log log r + (log log r)^delta
    double lower_envelope = 0.0; //!< d log r - (1 + c) log log log r
    bool upper_holds = false;
    bool lower_holds = false;
    double ratio = 0.0; //!< M_r / log r
};

//! Both almost-sure envelopes of M_r on one sampled field per radius.
inline std::vector<EnvelopeRow> envelope_check(int d, std::span<const std::int64_t> radii, double delta, double c,
                                               std::uint64_t seed)
{
    if (!(delta > 0.0 && delta < 1.0) || !(c > 0.0)) {
        throw DomainError("envelope check needs 0 < delta < 1 and c > 0");
    }
    std::vector<EnvelopeRow> rows;
    for (const auto r : radii) {
        if (r < 20) {
            throw DomainError("envelope check needs every radius >= 20");
        }
        const double lr = std::log(static_cast<double>(r));
        const double llr = std::log(lr);
        EnvelopeRow row;
        row.r = r;
        row.max_value = ball_maximum(d, r, seed);
        row.upper_envelope = d * lr + llr + std::pow(llr, delta);
        row.lower_envelope = d * lr - (1 + c) * std::log(llr);
        row.upper_holds = row.max_value <= row.upper_envelope;
        row.lower_holds = row.max_value >= row.lower_envelope;
        row.ratio = row.max_value / lr;
        rows.push_back(row);
    }
    return rows;
}

//! M_n^(floor(n^beta)) / log n for each seed.
inline std::vector<double> order_asymptotics_check(int d, std::int64_t n, double beta,
                                                   std::span<const std::uint64_t> seeds)
{
    if (!(beta > 0.0 && beta < 1.0) || n < 100) {
        throw DomainError("order asymptotics check needs 0 < beta < 1 and n >= 100");
    }
    const std::size_t k = std::max<std::size_t>(1, floor_pow(n, beta));
    std::vector<double> out;
    out.reserve(seeds.size());
    for (const auto s : seeds) {
        out.push_back(top_k(d, n, k, s).back().value / std::log(static_cast<double>(n)));
    }
    return out;
}

struct GapPropertyRow {
    std::int64_t n = 0;
    std::size_t k_n = 0;
    std::size_t m_n = 0;
    double freq_first = 0.0;  //!< M^(1) - M^(k_n) > (sigma - c) log n
    double freq_second = 0.0; //!< M^(k_n) - M^(m_n) > (rho - sigma - c) log n
};

//! Empirical frequencies of the two order-statistic gap events.
inline std::vector<GapPropertyRow> gap_property_check(int d, std::span<const std::int64_t> ns, double sigma,
                                                      double rho, double c, std::span<const std::uint64_t> seeds)
{
    if (!(0.0 < sigma && sigma < rho && rho < 0.5) || !(c > 0.0)) {
        throw DomainError("gap property check needs 0 < sigma < rho < 1/2 and c > 0");
    }
    std::vector<GapPropertyRow> rows;
    for (const auto n : ns) {
        GapPropertyRow row;
        row.n = n;
        row.k_n = std::max<std::size_t>(1, floor_pow(n, sigma));
        row.m_n = std::max<std::size_t>(1, floor_pow(n, rho));
        const double ln = std::log(static_cast<double>(n));
        std::size_t hit1 = 0;
        std::size_t hit2 = 0;
        for (const auto s : seeds) {
            const auto top = top_k(d, n, row.m_n, s);
            const double m1 = top.front().value;
            const double mk = top[row.k_n - 1].value;
            const double mm = top[row.m_n - 1].value;
            hit1 += m1 - mk > (sigma - c) * ln;
            hit2 += mk - mm > (rho - sigma - c) * ln;
        }
        row.freq_first = static_cast<double>(hit1) / static_cast<double>(seeds.size());
        row.freq_second = static_cast<double>(hit2) / static_cast<double>(seeds.size());
        rows.push_back(row);
    }
    return rows;
}

//! True if no two of the sites are l1-adjacent.
inline bool totally_disconnected(std::span<const LatticeSite> sites)
{
    for (std::size_t i = 0; i < sites.size(); ++i) {
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            if (l1_distance(sites[i], sites[j]) == 1) {
                return false;
            }
        }
    }
    return true;
}

} // namespace pam
