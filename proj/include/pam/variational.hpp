// SPDX-License-Identifier: Apache-2.0
//! \file pam/variational.hpp
//! Variational functionals of the potential that bound and locate the
//! solution: the lower and upper growth indices, the penalised potential
//! psi_t and its two largest values, and the scale functions.
//!
//! Every functional has a dense version (exhaustive scan of a field) and a
//! sparse version. The sparse sampler draws only sites above per-annulus
//! thresholds chosen so that no unseen site can beat a certified level; a
//! result is returned only when the maximiser clears that level.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pam/error.hpp"
#include "pam/potential.hpp"
#include "pam/solver.hpp"

namespace pam {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

//! e^e, below which log log log t is undefined.
inline const double kMinScaleTime = std::exp(std::numbers::e);

struct ScaleFunctions {
    double t = 0.0;
    int d = 1;
    double r_t = 0.0;
    //! d log t - d log log log t; no centering is known for Weibull.
    std::optional<double> centering;
    std::optional<double> gamma;
};

inline ScaleFunctions scale(double t, int d, const DistributionSpec& spec = DistributionSpec::exponential())
{
    if (!(t > kMinScaleTime) || !std::isfinite(t)) {
        throw DomainError("scale functions need t > e^e");
    }
    const double lt = std::log(t);
    const double llt = std::log(lt);
    ScaleFunctions s;
    s.t = t;
    s.d = d;
    switch (spec.family()) {
    case Family::exponential:
        s.r_t = t / llt;
        s.centering = d * lt - d * std::log(llt);
        break;
    case Family::weibull:
        s.gamma = spec.parameter();
        s.r_t = t * std::pow(lt, 1.0 / spec.parameter() - 1.0) / llt;
        break;
    case Family::pareto:
        throw DomainError("no scale functions for the pareto family");
    }
    return s;
}

//! d log t - (d + 1 + eps) log log log t.
inline double evlb_reference(double t, int d, double eps)
{
    if (!(t > kMinScaleTime)) {
        throw DomainError("reference curve needs t > e^e");
    }
    return d * std::log(t) - (d + 1 + eps) * std::log(std::log(std::log(t)));
}

//! (r / t) log log r for r >= 3, zero below.
inline double psi_penalty(std::int64_t r, double t)
{
    if (r < 3) {
        return 0.0;
    }
    const auto x = static_cast<double>(r);
    return x / t * std::log(std::log(x));
}

inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

//! xi - (|z|/t) log+ xi.
inline double lower_functional(double xi, std::int64_t norm, double t)
{
    return xi - static_cast<double>(norm) / t * log_plus(xi);
}

//! xi - (|z|/t)(log log |z| + c).
inline double upper_functional(double xi, std::int64_t norm, double t, double c)
{
    const auto x = static_cast<double>(norm);
    return xi - x / t * (std::log(std::log(x)) + c);
}

//! Annulus t/(log t)^2 <= |z| <= t log t with inner radius at least 3,
//! clipped to the scanned radius. Empty when lo > hi.
struct Annulus {
    std::int64_t lo = 0;
    std::int64_t hi = -1;
};

inline Annulus upper_annulus(double t, std::int64_t search_radius)
{
    if (!(t >= 20.0)) {
        throw DomainError("upper index needs t >= 20");
    }
    const double lt = std::log(t);
    Annulus a;
    a.lo = std::max<std::int64_t>(3, static_cast<std::int64_t>(std::ceil(t / (lt * lt))));
    a.hi = std::min<std::int64_t>(search_radius, static_cast<std::int64_t>(std::floor(t * lt)));
    return a;
}

struct PsiPoint {
    LatticeSite site;
    double value = kNegInf;
};

struct VariationalSummary {
    double t = 0.0;
    double lower_index = kNegInf;
    double upper_index = kNegInf;
    double c = 0.0;
    PsiPoint psi1;
    PsiPoint psi2;
    double gap = 0.0;
    std::int64_t search_radius = 0;
    std::optional<double> sparse_threshold; //!< certified psi level
    int retries = 0;
};

namespace detail {

// (value desc, site lexicographic asc).
inline bool psi_before(double va, const LatticeSite& a, double vb, const LatticeSite& b)
{
    return va > vb || (va == vb && a < b);
}

inline void push_top2(PsiPoint& p1, PsiPoint& p2, const LatticeSite& z, double v)
{
    if (p1.site.dim() == 0 || psi_before(v, z, p1.value, p1.site)) {
        p2 = p1;
        p1 = {z, v};
    }
    else if (p2.site.dim() == 0 || psi_before(v, z, p2.value, p2.site)) {
        p2 = {z, v};
    }
}

} // namespace detail

// Dense scans ------------------------------------------------------------

inline double lower_index(const PotentialField& f, double t)
{
    if (!(t > 0.0)) {
        throw DomainError("lower index needs t > 0");
    }
    double best = kNegInf;
    for_each_site(f.dim(), f.radius(), [&](const LatticeSite& z, Count i) {
        best = std::max(best, lower_functional(f.value(i), z.norm1(), t));
    });
    return best;
}

inline double upper_index(const PotentialField& f, double t, double c)
{
    const auto ann = upper_annulus(t, f.radius());
    double best = kNegInf;
    if (ann.lo > ann.hi) {
        return best;
    }
    for_each_site(f.dim(), f.radius(), [&](const LatticeSite& z, Count i) {
        const auto n = z.norm1();
        if (n >= ann.lo && n <= ann.hi) {
            best = std::max(best, upper_functional(f.value(i), n, t, c));
        }
    });
    return best;
}

struct PsiTop2 {
    PsiPoint first;
    PsiPoint second;
    double gap = 0.0;
};

inline PsiTop2 psi_top2(const PotentialField& f, double t)
{
    if (!(t > 0.0)) {
        throw DomainError("psi needs t > 0");
    }
    if (f.size() < 2) {
        throw DomainError("psi top-2 needs at least two sites");
    }
    PsiTop2 out;
    for_each_site(f.dim(), f.radius(), [&](const LatticeSite& z, Count i) {
        detail::push_top2(out.first, out.second, z, f.value(i) - psi_penalty(z.norm1(), t));
    });
    out.gap = out.first.value - out.second.value;
    return out;
}

inline VariationalSummary variational_summary(const PotentialField& f, double t, double c)
{
    VariationalSummary s;
    s.t = t;
    s.c = c;
    s.search_radius = f.radius();
    s.lower_index = lower_index(f, t);
    s.upper_index = t >= 20.0 ? upper_index(f, t, c) : kNegInf;
    const auto top = psi_top2(f, t);
    s.psi1 = top.first;
    s.psi2 = top.second;
    s.gap = top.gap;
    return s;
}

// Sparse evaluation ---------------------------------------------------------

//! Which functionals a sparse sample must certify, and at which levels.
struct VariationalRequest {
    bool psi = true;
    bool lower = true;
    bool upper = true;
    double c = 1.0;
    std::optional<double> psi_level;   //!< default d log r_t - 5
    std::optional<double> lower_level; //!< default d log t - d log log log t - 4
    std::optional<double> upper_level; //!< default as lower
    std::optional<std::int64_t> search_radius; //!< default choose_box_radius
    int max_retries = 5;
    double retry_step = 2.0;
    SamplerLimits limits;
};

namespace detail {

//! Largest root of x - a log x = u for u >= 1, a >= 0.
inline double lower_threshold(double a, double u)
{
    if (a == 0.0) {
        return u;
    }
    auto g = [&](double x) { return x - a * std::log(x) - u; };
    double lo = std::max(1.0, a);
    double hi = std::max(2.0 * lo, u + a * std::log(std::max(u, a)) + a + 1.0);
    while (g(hi) < 0.0) {
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

//! Bound on xi - (r/t) log+ xi over xi <= thr and |z| >= r.
inline double lower_unseen_bound(double thr, std::int64_t r, double t)
{
    return std::max(std::min(thr, 1.0), lower_functional(thr, r, t));
}

struct Levels {
    double psi = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline std::vector<ThresholdBand> make_bands(double t, std::int64_t radius)
{
    const double width_scale = t > kMinScaleTime ? t / std::log(std::log(t)) : t;
    const std::int64_t width = std::max<std::int64_t>(1, static_cast<std::int64_t>(0.25 * width_scale));
    std::vector<ThresholdBand> bands;
    for (std::int64_t lo = 0; lo <= radius; lo += width) {
        bands.push_back({lo, std::min(radius, lo + width - 1), 0.0});
    }
    return bands;
}

inline double band_threshold(const ThresholdBand& b, double t, const VariationalRequest& req, const Levels& lv,
                             const Annulus& ann, const DistributionSpec& spec)
{
    double thr = std::numeric_limits<double>::infinity();
    if (req.psi) {
        thr = std::min(thr, lv.psi + psi_penalty(b.lo, t));
    }
    if (req.lower) {
        thr = std::min(thr, lower_threshold(static_cast<double>(b.lo) / t, std::max(lv.lower, 1.0)));
    }
    if (req.upper && ann.lo <= ann.hi && b.hi >= ann.lo && b.lo <= ann.hi) {
        const std::int64_t r = std::max(b.lo, ann.lo);
        thr = std::min(thr, lv.upper + static_cast<double>(r) / t * (std::log(std::log(static_cast<double>(r))) + req.c));
    }
    // Bands no functional looks at get a threshold nothing exceeds.
    if (!std::isfinite(thr)) {
        thr = 1e300;
    }
    (void)spec;
    return std::max(thr, 0.0);
}

} // namespace detail

//! Result of a sparse variational evaluation: the summary and the sample it
//! was certified on.
struct SparseVariational {
    VariationalSummary summary;
    SparseExceedanceField field;
};

//! Evaluates the requested functionals on B_R from threshold-banded sparse
//! samples. Unseen sites are bounded per band:
//!   psi:    xi <= thr, so psi <= thr - pen(lo);
//!   lower:  xi -> xi - (r/t) log+ xi is convex on [1, thr], so unseen
//!           values are at most max(min(thr, 1), thr - (lo/t) log+ thr);
//!   upper:  thr - (r'/t)(log log r' + c) with r' the band's inner radius
//!           clipped to the annulus.
//! A functional is accepted once its maximiser (for psi, its runner-up)
//! beats every unseen bound; otherwise all levels drop by retry_step and
//! the sample is refined exactly, at most max_retries times.
inline SparseVariational sample_variational(int d, double t, std::uint64_t seed, const VariationalRequest& req = {},
                                            DistributionSpec spec = DistributionSpec::exponential())
{
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("variational sample needs finite t > 0");
    }
    if (req.upper && !(req.c >= 0.0)) {
        throw DomainError("sparse upper index needs c >= 0");
    }
    const std::int64_t radius = req.search_radius.value_or(choose_box_radius(t, d));
    const Annulus ann = req.upper ? upper_annulus(t, radius) : Annulus{};

    detail::Levels lv;
    if (spec.family() == Family::exponential && t > kMinScaleTime) {
        const auto sc = scale(t, d, spec);
        lv.psi = req.psi_level.value_or(d * std::log(sc.r_t) - 5.0);
        lv.lower = req.lower_level.value_or(*sc.centering - 4.0);
        lv.upper = req.upper_level.value_or(*sc.centering - 4.0);
    }
    else {
        if ((req.psi && !req.psi_level) || (req.lower && !req.lower_level) || (req.upper && !req.upper_level)) {
            throw DomainError("explicit sparse levels are required outside the exponential, t > e^e case");
        }
        lv.psi = req.psi_level.value_or(0.0);
        lv.lower = req.lower_level.value_or(0.0);
        lv.upper = req.upper_level.value_or(0.0);
    }

    auto bands = detail::make_bands(t, radius);
    auto thresholds_for = [&](const detail::Levels& l) {
        std::vector<double> thr(bands.size());
        for (std::size_t b = 0; b < bands.size(); ++b) {
            thr[b] = detail::band_threshold(bands[b], t, req, l, ann, spec);
        }
        return thr;
    };
    {
        const auto thr = thresholds_for(lv);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            bands[b].threshold = thr[b];
        }
    }
    auto field = sample_exceedances(d, radius, bands, seed, spec, req.limits);

    for (int attempt = 0;; ++attempt) {
        VariationalSummary s;
        s.t = t;
        s.c = req.c;
        s.search_radius = radius;
        s.retries = attempt;
        double psi_bound = kNegInf;
        double lower_bound = kNegInf;
        double upper_bound = kNegInf;
        for (const auto& b : field.bands()) {
            if (req.psi) {
                psi_bound = std::max(psi_bound, b.threshold - psi_penalty(b.lo, t));
            }
            if (req.lower) {
                lower_bound = std::max(lower_bound, detail::lower_unseen_bound(b.threshold, b.lo, t));
            }
            if (req.upper && ann.lo <= ann.hi && b.hi >= ann.lo && b.lo <= ann.hi) {
                const std::int64_t r = std::max(b.lo, ann.lo);
                upper_bound = std::max(upper_bound, upper_functional(b.threshold, r, t, req.c));
            }
        }
        for (const auto& rec : field.records()) {
            const auto n = rec.site.norm1();
            if (req.psi) {
                detail::push_top2(s.psi1, s.psi2, rec.site, rec.value - psi_penalty(n, t));
            }
            if (req.lower) {
                s.lower_index = std::max(s.lower_index, lower_functional(rec.value, n, t));
            }
            if (req.upper && n >= ann.lo && n <= ann.hi) {
                s.upper_index = std::max(s.upper_index, upper_functional(rec.value, n, t, req.c));
            }
        }
        bool ok = true;
        if (req.psi) {
            s.sparse_threshold = psi_bound;
            ok = ok && s.psi2.site.dim() != 0 && s.psi2.value > psi_bound;
            s.gap = s.psi1.value - s.psi2.value;
        }
        if (req.lower) {
            ok = ok && s.lower_index > lower_bound;
        }
        if (req.upper && ann.lo <= ann.hi) {
            ok = ok && s.upper_index > upper_bound;
        }
        if (ok) {
            return {s, std::move(field)};
        }
        if (attempt == req.max_retries) {
            throw GuardFailure("sparse variational sample not certified after " + std::to_string(attempt) +
                               " retries; lower the sparse levels");
        }
        lv.psi -= req.retry_step;
        lv.lower -= req.retry_step;
        lv.upper -= req.retry_step;
        auto thr = thresholds_for(lv);
        for (std::size_t b = 0; b < thr.size(); ++b) {
            thr[b] = std::min(thr[b], field.bands()[b].threshold);
        }
        field = refine(field, thr, static_cast<std::uint32_t>(attempt + 1), req.limits);
    }
}

} // namespace pam
