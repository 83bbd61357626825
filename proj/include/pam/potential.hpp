// SPDX-License-Identifier: Apache-2.0
//! \file pam/potential.hpp
//! Potential fields on l1 balls: dense i.i.d. sampling, exact sparse
//! exceedance sampling, the coupling between the two, and order statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pam/distribution.hpp"
#include "pam/error.hpp"
#include "pam/lattice.hpp"
#include "pam/rng.hpp"

namespace pam {

//! Desk-scale guard rails for the samplers.
struct SamplerLimits {
    std::uint64_t memory_bytes = std::uint64_t{2} << 30;
    double max_expected_records = 1e7;
};

//! Realisation of xi on the ball B_r, stored in lexicographic order.
class PotentialField {
  public:
    PotentialField(int dim, std::int64_t radius, DistributionSpec spec, std::uint64_t seed,
                   std::vector<double> values)
        : dim_(dim), radius_(radius), spec_(spec), seed_(seed), values_(std::move(values))
    {
        if (values_.size() != ball_size(dim, radius)) {
            throw DomainError("potential field needs exactly one value per site of the ball");
        }
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::int64_t radius() const noexcept { return radius_; }
    [[nodiscard]] const DistributionSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    [[nodiscard]] double value(const LatticeSite& z) const { return values_[index_of(z)]; }
    [[nodiscard]] double value(std::size_t index) const { return values_[index]; }

    [[nodiscard]] Count index_of(const LatticeSite& z) const
    {
        if (z.dim() != dim_ || z.norm1() > radius_) {
            throw DomainError("site " + z.to_string() + " outside the field's ball");
        }
        return lex_rank(z, radius_);
    }

    [[nodiscard]] LatticeSite site(Count index) const { return lex_unrank(dim_, radius_, index); }

    [[nodiscard]] double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

  private:
    int dim_;
    std::int64_t radius_;
    DistributionSpec spec_;
    std::uint64_t seed_;
    std::vector<double> values_;
};

//! Annulus lo <= |z| <= hi sampled above a common threshold.
struct ThresholdBand {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    double threshold = 0.0;

    friend bool operator==(const ThresholdBand&, const ThresholdBand&) = default;
};

struct ExceedanceRecord {
    LatticeSite site;
    double value = 0.0;
};

//! All sites of B_r whose potential exceeds the threshold of their band.
//! Bands are contiguous, ordered and cover 0..radius.
class SparseExceedanceField {
  public:
    SparseExceedanceField(int dim, std::int64_t radius, DistributionSpec spec, std::uint64_t seed,
                          std::vector<ThresholdBand> bands, std::vector<ExceedanceRecord> records)
        : dim_(dim), radius_(radius), spec_(spec), seed_(seed), bands_(std::move(bands)),
          records_(std::move(records))
    {
        std::sort(records_.begin(), records_.end(),
                  [](const auto& a, const auto& b) { return a.site < b.site; });
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::int64_t radius() const noexcept { return radius_; }
    [[nodiscard]] const DistributionSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::span<const ThresholdBand> bands() const noexcept { return bands_; }
    [[nodiscard]] std::span<const ExceedanceRecord> records() const noexcept { return records_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }

    [[nodiscard]] std::size_t band_of(std::int64_t norm) const
    {
        const auto it = std::lower_bound(bands_.begin(), bands_.end(), norm,
                                         [](const ThresholdBand& b, std::int64_t n) { return b.hi < n; });
        if (it == bands_.end() || norm < it->lo) {
            throw DomainError("norm outside the sampled ball");
        }
        return static_cast<std::size_t>(it - bands_.begin());
    }

    [[nodiscard]] double threshold_at(std::int64_t norm) const { return bands_[band_of(norm)].threshold; }

    [[nodiscard]] double max_threshold() const
    {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& b : bands_) {
            m = std::max(m, b.threshold);
        }
        return m;
    }

  private:
    int dim_;
    std::int64_t radius_;
    DistributionSpec spec_;
    std::uint64_t seed_;
    std::vector<ThresholdBand> bands_;
    std::vector<ExceedanceRecord> records_;
};

namespace detail {

inline void check_ball_request(int d, std::int64_t r)
{
    if (d < 1 || d > kMaxDim) {
        throw DomainError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (r < 0) {
        throw DomainError("radius must be nonnegative");
    }
}

//! k distinct integers from [0, n), sorted (Floyd's algorithm).
inline std::vector<Count> sample_without_replacement(Count n, Count k, rng::CounterEngine& eng)
{
    std::vector<Count> out;
    if (k == 0) {
        return out;
    }
    if (k == n) {
        out.resize(n);
        for (Count i = 0; i < n; ++i) {
            out[i] = i;
        }
        return out;
    }
    std::unordered_set<Count> chosen;
    chosen.reserve(static_cast<std::size_t>(k) * 2);
    for (Count j = n - k; j < n; ++j) {
        const Count r = eng.below(j + 1);
        if (!chosen.insert(r).second) {
            chosen.insert(j);
        }
    }
    out.assign(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::int64_t binomial_draw(Count n, double p, rng::CounterEngine& eng)
{
    if (n == 0 || p <= 0.0) {
        return 0;
    }
    if (p >= 1.0) {
        return static_cast<std::int64_t>(n);
    }
    if (n > static_cast<Count>(std::numeric_limits<std::int64_t>::max())) {
        throw ResourceCapError("band too large for binomial sampling");
    }
    std::binomial_distribution<std::int64_t> dist(static_cast<std::int64_t>(n), p);
    return dist(eng);
}

inline void check_bands(std::span<const ThresholdBand> bands, std::int64_t radius)
{
    if (bands.empty() || bands.front().lo != 0 || bands.back().hi != radius) {
        throw DomainError("threshold bands must cover 0..radius");
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
        if (bands[b].hi < bands[b].lo || (b > 0 && bands[b].lo != bands[b - 1].hi + 1)) {
            throw DomainError("threshold bands must be contiguous and ordered");
        }
        if (!(bands[b].threshold >= 0.0) || !std::isfinite(bands[b].threshold)) {
            throw DomainError("thresholds must be finite and nonnegative");
        }
    }
}

inline Count band_size(int d, const ThresholdBand& b) { return ball_size(d, b.hi) - ball_size(d, b.lo - 1); }

} // namespace detail

//! One i.i.d. draw per site, each from the site's own counter stream.
inline PotentialField sample_dense(int d, std::int64_t r, DistributionSpec spec, std::uint64_t seed,
                                   const SamplerLimits& limits = {})
{
    detail::check_ball_request(d, r);
    spec.validate(d);
    const Count n = ball_size(d, r);
    if (n > limits.memory_bytes / sizeof(double)) {
        throw ResourceCapError("dense field of " + std::to_string(n) + " sites exceeds the memory budget");
    }
    const auto key = rng::stream_key(seed, rng::Tag::site_value, static_cast<std::uint32_t>(d));
    std::vector<double> values(n);
    for_each_site(d, r, [&](const LatticeSite& z, Count i) {
        values[i] = spec.draw(rng::site_uniform(key, z.coords()));
    });
    return {d, r, spec, seed, std::move(values)};
}

//! Exact sampler for {(z, xi(z)) : xi(z) > threshold of |z|'s band}.
//!
//! Per band the exceedance count is Binomial(band size, tail), the sites
//! are uniform without replacement (norm-major unranking), and each value
//! is drawn from the conditional law above the threshold using the site's
//! own uniform, the same uniform sample_dense would use.
inline SparseExceedanceField sample_exceedances(int d, std::int64_t r, std::vector<ThresholdBand> bands,
                                                std::uint64_t seed, DistributionSpec spec = DistributionSpec::exponential(),
                                                const SamplerLimits& limits = {})
{
    detail::check_ball_request(d, r);
    spec.validate(d);
    detail::check_bands(bands, r);
    double expected = 0.0;
    for (const auto& b : bands) {
        expected += static_cast<double>(detail::band_size(d, b)) * spec.tail(b.threshold);
    }
    if (expected > limits.max_expected_records) {
        throw ResourceCapError("expected exceedance count " + std::to_string(expected) +
                               " exceeds the record cap; raise the threshold");
    }
    const auto key = rng::stream_key(seed, rng::Tag::site_value, static_cast<std::uint32_t>(d));
    std::vector<ExceedanceRecord> records;
    records.reserve(static_cast<std::size_t>(expected * 1.2 + 16));
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto& band = bands[b];
        rng::CounterEngine eng(seed, rng::Tag::sparse_band, static_cast<std::uint32_t>(d),
                               static_cast<std::uint32_t>(b), 0);
        const Count n = detail::band_size(d, band);
        const auto k = detail::binomial_draw(n, spec.tail(band.threshold), eng);
        const Count offset = ball_size(d, band.lo - 1);
        for (const Count j : detail::sample_without_replacement(n, static_cast<Count>(k), eng)) {
            LatticeSite z = norm_unrank(d, offset + j);
            const double v = spec.draw_above(band.threshold, rng::site_uniform(key, z.coords()));
            records.push_back({z, v});
        }
    }
    return {d, r, spec, seed, std::move(bands), std::move(records)};
}

//! Single-threshold convenience form.
inline SparseExceedanceField sample_exceedances(int d, std::int64_t r, double threshold, std::uint64_t seed,
                                                DistributionSpec spec = DistributionSpec::exponential(),
                                                const SamplerLimits& limits = {})
{
    if (!(threshold >= 0.0)) {
        throw DomainError("exceedance threshold must be >= 0");
    }
    return sample_exceedances(d, r, {ThresholdBand{0, r, threshold}}, seed, spec, limits);
}

//! Lowers band thresholds of an existing sparse field. The result is the
//! exceedance set of the same underlying field at the new thresholds: new
//! records are drawn among the former non-records with the conditional
//! probability of landing in (new, old].
inline SparseExceedanceField refine(const SparseExceedanceField& field, std::span<const double> new_thresholds,
                                    std::uint32_t level, const SamplerLimits& limits = {})
{
    const auto bands_in = field.bands();
    if (new_thresholds.size() != bands_in.size()) {
        throw DomainError("refine needs one threshold per band");
    }
    const int d = field.dim();
    const auto& spec = field.spec();
    std::vector<ThresholdBand> bands(bands_in.begin(), bands_in.end());
    double expected = 0.0;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        if (!(new_thresholds[b] >= 0.0) || new_thresholds[b] > bands[b].threshold) {
            throw DomainError("refined thresholds must be in [0, old threshold]");
        }
        expected += static_cast<double>(detail::band_size(d, bands[b])) * spec.tail(new_thresholds[b]);
    }
    if (expected > limits.max_expected_records) {
        throw ResourceCapError("expected exceedance count exceeds the record cap");
    }

    std::vector<std::vector<Count>> existing(bands.size());
    for (const auto& rec : field.records()) {
        const std::size_t b = field.band_of(rec.site.norm1());
        existing[b].push_back(norm_rank(rec.site) - ball_size(d, bands[b].lo - 1));
    }
    const auto key = rng::stream_key(field.seed(), rng::Tag::site_value, static_cast<std::uint32_t>(d));
    std::vector<ExceedanceRecord> records(field.records().begin(), field.records().end());
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const double hi = bands[b].threshold;
        const double lo = new_thresholds[b];
        bands[b].threshold = lo;
        if (lo == hi) {
            continue;
        }
        auto& taken = existing[b];
        std::sort(taken.begin(), taken.end());
        const double e_hi = spec.to_exp(hi);
        const double e_lo = spec.to_exp(lo);
        // P(lo < xi <= hi | xi <= hi)
        const double p = std::exp(-e_lo) * -std::expm1(-(e_hi - e_lo)) / -std::expm1(-e_hi);
        const Count n_free = detail::band_size(d, bands[b]) - taken.size();
        rng::CounterEngine eng(field.seed(), rng::Tag::sparse_refine, static_cast<std::uint32_t>(d),
                               static_cast<std::uint32_t>(b), level);
        const auto m = detail::binomial_draw(n_free, p, eng);
        const Count offset = ball_size(d, bands[b].lo - 1);
        std::size_t t = 0;
        for (const Count j : detail::sample_without_replacement(n_free, static_cast<Count>(m), eng)) {
            // j-th free index, skipping the sorted taken ones.
            Count idx = j + t;
            while (t < taken.size() && taken[t] <= idx) {
                ++t;
                idx = j + t;
            }
            LatticeSite z = norm_unrank(d, offset + idx);
            const double v = spec.draw_between(lo, hi, rng::site_uniform(key, z.coords()));
            records.push_back({z, v});
        }
    }
    return {d, field.radius(), spec, field.seed(), std::move(bands), std::move(records)};
}

//! Dense field coupled to a sparse one: records keep their values and every
//! other site draws from the law conditioned below its band threshold using
//! its own uniform. The result has the law of sample_dense.
inline PotentialField densify(const SparseExceedanceField& field, const SamplerLimits& limits = {})
{
    const int d = field.dim();
    const std::int64_t r = field.radius();
    const Count n = ball_size(d, r);
    if (n > limits.memory_bytes / sizeof(double)) {
        throw ResourceCapError("coupled dense field exceeds the memory budget");
    }
    const auto key = rng::stream_key(field.seed(), rng::Tag::site_value, static_cast<std::uint32_t>(d));
    std::vector<double> values(n, std::numeric_limits<double>::quiet_NaN());
    for (const auto& rec : field.records()) {
        values[lex_rank(rec.site, r)] = rec.value;
    }
    const auto& spec = field.spec();
    for_each_site(d, r, [&](const LatticeSite& z, Count i) {
        if (std::isnan(values[i])) {
            values[i] = spec.draw_below(field.threshold_at(z.norm1()), rng::site_uniform(key, z.coords()));
        }
    });
    return {d, r, spec, field.seed(), std::move(values)};
}

// Order statistics -------------------------------------------------------

struct OrderEntry {
    std::size_t rank = 0; //!< 1-based
    double value = 0.0;
    LatticeSite site;
};

using OrderStatistics = std::vector<OrderEntry>;

//! Top-K values, ties going to the lexicographically smaller site.
inline OrderStatistics order_stats(const PotentialField& field, std::size_t k)
{
    if (k > field.size()) {
        throw DomainError("K exceeds the number of sites");
    }
    const auto values = field.values();
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    // Lexicographic index order equals lexicographic site order.
    const auto before = [&](std::size_t a, std::size_t b) {
        return values[a] > values[b] || (values[a] == values[b] && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    OrderStatistics out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = {i + 1, values[idx[i]], field.site(idx[i])};
    }
    return out;
}

//! Top-K of a sparse field. Valid only for ranks whose value exceeds every
//! band threshold; otherwise the threshold must be lowered.
inline OrderStatistics order_stats(const SparseExceedanceField& field, std::size_t k)
{
    const auto recs = field.records();
    if (k > recs.size()) {
        throw GuardFailure("K exceeds the exceedance record count; lower the threshold");
    }
    std::vector<std::size_t> idx(recs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    const auto before = [&](std::size_t a, std::size_t b) {
        return recs[a].value > recs[b].value || (recs[a].value == recs[b].value && recs[a].site < recs[b].site);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    OrderStatistics out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = {i + 1, recs[idx[i]].value, recs[idx[i]].site};
    }
    if (k > 0 && field.bands().size() > 1 && !(out.back().value > field.max_threshold())) {
        throw GuardFailure("rank " + std::to_string(k) + " is not certified by the band thresholds");
    }
    return out;
}

} // namespace pam
