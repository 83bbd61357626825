// SPDX-License-Identifier: Apache-2.0
//! \file pam/ensembles.hpp
//! Monte-Carlo ensembles over potential realisations and their limit-law
//! tests. Seed i of an ensemble is derive_seed(master, i), and every
//! per-seed result lands in its own slot, so records are identical for
//! any thread count.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pam/extremes.hpp"
#include "pam/parallel.hpp"
#include "pam/rng.hpp"
#include "pam/solver.hpp"
#include "pam/stats.hpp"
#include "pam/variational.hpp"

namespace pam {

enum class Sampler { dense, sparse };

inline std::string to_string(Sampler s) { return s == Sampler::dense ? "dense" : "sparse"; }

struct EnsembleConfig {
    std::uint64_t master_seed = 1;
    std::size_t seeds = 100;
    unsigned threads = 1;
    Sampler sampler = Sampler::sparse;
    VariationalRequest request;   //!< sparse sampler settings
    BoxPolicy box;                //!< dense and solver boxes
    double tol = 1e-8;            //!< solver tolerance
};

struct EnsembleRecord {
    std::string statistic;
    std::string reference;        //!< the limit statement under test
    std::string law;              //!< name of the reference law
    double t = 0.0;
    int d = 1;
    Sampler sampler = Sampler::sparse;
    std::vector<std::uint64_t> seeds;
    std::vector<double> samples;
    std::vector<std::vector<double>> vectors; //!< per-seed coordinates, if any
    std::vector<double> thresholds;           //!< per-seed certified sparse level
    std::optional<KsResult> ks;
    std::map<std::string, double> metrics;
    std::string note;
};

inline std::vector<std::uint64_t> ensemble_seeds(std::uint64_t master, std::size_t n)
{
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng::derive_seed(master, i);
    }
    return s;
}

namespace detail {

inline void check_ensemble(std::size_t n)
{
    if (n < 1) {
        throw DomainError("ensemble needs at least one seed");
    }
}

struct PsiSample {
    PsiPoint first;
    double gap = 0.0;
    double threshold = kNegInf;
};

inline PsiSample psi_sample(int d, double t, std::uint64_t seed, const EnsembleConfig& cfg)
{
    if (cfg.sampler == Sampler::dense) {
        const auto f = sample_dense(d, choose_box_radius(t, d, cfg.box), DistributionSpec::exponential(), seed,
                                    cfg.request.limits);
        const auto top = psi_top2(f, t);
        return {top.first, top.gap, kNegInf};
    }
    VariationalRequest req = cfg.request;
    req.psi = true;
    req.lower = false;
    req.upper = false;
    const auto sv = sample_variational(d, t, seed, req);
    return {sv.summary.psi1, sv.summary.gap, *sv.summary.sparse_threshold};
}

inline EnsembleRecord start_record(std::string statistic, std::string reference, int d, double t,
                                   const EnsembleConfig& cfg)
{
    check_ensemble(cfg.seeds);
    EnsembleRecord r;
    r.statistic = std::move(statistic);
    r.reference = std::move(reference);
    r.d = d;
    r.t = t;
    r.sampler = cfg.sampler;
    r.seeds = ensemble_seeds(cfg.master_seed, cfg.seeds);
    return r;
}

} // namespace detail

//! psi_t(X^(1)) - psi_t(X^(2)) per seed against Exp(1).
inline EnsembleRecord gap_ensemble(int d, double t, const EnsembleConfig& cfg)
{
    if (!(t > kMinScaleTime)) {
        throw DomainError("gap ensemble needs t > e^e");
    }
    auto rec = detail::start_record("psi_gap", "psi gap converges to a standard exponential", d, t, cfg);
    rec.samples.resize(cfg.seeds);
    rec.thresholds.resize(cfg.seeds);
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t i) {
        const auto s = detail::psi_sample(d, t, rec.seeds[i], cfg);
        rec.samples[i] = s.gap;
        rec.thresholds[i] = s.threshold;
    });
    const auto law = LimitLaw::std_exponential();
    rec.law = law.name();
    rec.ks = ks_test(rec.samples, law);
    const auto m = moments(rec.samples);
    rec.metrics["mean"] = m.mean;
    rec.metrics["median"] = m.median;
    rec.metrics["min"] = *std::min_element(rec.samples.begin(), rec.samples.end());
    return rec;
}

//! X^(1) / r_t per seed; each coordinate against density e^{-|x|}/2.
inline EnsembleRecord location_ensemble(int d, double t, const EnsembleConfig& cfg)
{
    const auto sc = scale(t, d);
    auto rec = detail::start_record("psi_location", "X^(1)/r_t converges to independent signed exponentials", d, t,
                                    cfg);
    rec.vectors.resize(cfg.seeds);
    rec.thresholds.resize(cfg.seeds);
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t i) {
        const auto s = detail::psi_sample(d, t, rec.seeds[i], cfg);
        std::vector<double> x(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            x[k] = static_cast<double>(s.first.site[k]) / sc.r_t;
        }
        rec.vectors[i] = std::move(x);
        rec.thresholds[i] = s.threshold;
    });
    const auto law = LimitLaw::laplace_coordinate();
    rec.law = law.name();
    double worst = -1.0;
    std::size_t positive = 0;
    std::size_t signed_count = 0;
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(d));
    for (const auto& v : rec.vectors) {
        double norm = 0.0;
        for (int k = 0; k < d; ++k) {
            coords[k].push_back(v[k]);
            positive += v[k] > 0.0;
            signed_count += v[k] != 0.0;
            norm += std::abs(v[k]);
        }
        rec.samples.push_back(norm);
    }
    for (int k = 0; k < d; ++k) {
        const auto ks = ks_test(coords[k], law);
        rec.metrics["ks_coord" + std::to_string(k)] = ks.distance;
        rec.metrics["p_coord" + std::to_string(k)] = ks.p_value;
        if (ks.distance > worst) {
            worst = ks.distance;
            rec.ks = ks;
        }
    }
    rec.metrics["positive_fraction"] = signed_count ? static_cast<double>(positive) / static_cast<double>(signed_count) : 0.5;
    rec.metrics["mean_norm"] = moments(rec.samples).mean;
    if (d >= 2) {
        rec.metrics["correlation01"] = correlation(coords[0], coords[1]);
    }
    return rec;
}

enum class GumbelProxy { solver, variational };

//! Centred growth rate per seed against the Gumbel law. The variational
//! proxy replaces L_t by lower_index - 2d.
inline EnsembleRecord gumbel_ensemble(int d, double t, GumbelProxy proxy, const EnsembleConfig& cfg)
{
    const auto sc = scale(t, d);
    if (proxy == GumbelProxy::solver && t > 200.0) {
        throw DomainError("solver proxy is limited to t <= 200");
    }
    auto rec = detail::start_record(proxy == GumbelProxy::solver ? "centred_growth_rate" : "centred_lower_index",
                                    "L_t - d log t + d log log log t converges to a Gumbel law", d, t, cfg);
    rec.samples.resize(cfg.seeds);
    rec.thresholds.resize(cfg.seeds, kNegInf);
    const double centre = *sc.centering;
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t i) {
        const auto seed = rec.seeds[i];
        if (proxy == GumbelProxy::solver) {
            const auto f = sample_dense(d, choose_box_radius(t, d, cfg.box), DistributionSpec::exponential(), seed,
                                        cfg.request.limits);
            IntegratorOptions opt;
            opt.tol = cfg.tol;
            rec.samples[i] = growth_rate(integrate(f, t, {t}, opt).profiles.back()) - centre;
            return;
        }
        if (cfg.sampler == Sampler::dense) {
            const auto f = sample_dense(d, choose_box_radius(t, d, cfg.box), DistributionSpec::exponential(), seed,
                                        cfg.request.limits);
            rec.samples[i] = lower_index(f, t) - 2.0 * d - centre;
            return;
        }
        VariationalRequest req = cfg.request;
        req.psi = false;
        req.lower = true;
        req.upper = false;
        const auto sv = sample_variational(d, t, seed, req);
        rec.samples[i] = sv.summary.lower_index - 2.0 * d - centre;
    });
    const auto law = LimitLaw::gumbel_pam(d);
    rec.law = law.name();
    rec.ks = ks_test(rec.samples, law);
    const auto alt = ks_test(rec.samples, LimitLaw::gumbel_pam_consistent(d));
    rec.metrics["ks_consistent"] = alt.distance;
    rec.metrics["p_consistent"] = alt.p_value;
    const auto m = moments(rec.samples);
    rec.metrics["mean"] = m.mean;
    rec.metrics["variance"] = m.variance;
    rec.metrics["median"] = m.median;
    rec.metrics["law_median"] = law.quantile(0.5);
    rec.note = "finite-t, logloglog-rate convergence - qualitative";
    return rec;
}

//! nu_t{|z - X^(1)| <= delta r_t} per seed, one record per time.
inline std::vector<EnsembleRecord> concentration_ensemble(int d, std::span<const double> t_grid, double delta,
                                                          const EnsembleConfig& cfg)
{
    if (!(delta > 0.0)) {
        throw DomainError("concentration needs delta > 0");
    }
    for (const double t : t_grid) {
        if (!(t > kMinScaleTime) || (d == 1 && t > 100.0) || (d == 2 && t > 40.0) || d > 2) {
            throw DomainError("concentration needs a solver-feasible time (d=1: t <= 100, d=2: t <= 40)");
        }
    }
    std::vector<EnsembleRecord> out;
    for (const double t : t_grid) {
        auto rec = detail::start_record("concentration", "nu_t concentrates within delta r_t of X^(1)", d, t, cfg);
        rec.samples.resize(cfg.seeds);
        const double radius = delta * scale(t, d).r_t;
        parallel_for(cfg.seeds, cfg.threads, [&](std::size_t i) {
            const auto f = sample_dense(d, choose_box_radius(t, d, cfg.box), DistributionSpec::exponential(),
                                        rec.seeds[i], cfg.request.limits);
            IntegratorOptions opt;
            opt.tol = cfg.tol;
            const auto p = integrate(f, t, {t}, opt).profiles.back();
            rec.samples[i] = mass_within(p, psi_top2(f, t).first.site, radius);
        });
        const auto m = moments(rec.samples);
        rec.metrics["median"] = m.median;
        rec.metrics["q1"] = m.q1;
        rec.metrics["q3"] = m.q3;
        rec.metrics["delta"] = delta;
        rec.metrics["radius"] = radius;
        out.push_back(std::move(rec));
    }
    return out;
}

//! Fraction of seeds whose top floor(n^rho) sites in B_n are pairwise
//! non-adjacent.
inline EnsembleRecord disconnected_check(int d, std::int64_t n, double rho, const EnsembleConfig& cfg)
{
    if (!(rho > 0.0 && rho < 0.5)) {
        throw DomainError("disconnectedness check needs 0 < rho < 1/2");
    }
    auto rec = detail::start_record("disconnected", "the top sites G_n are totally disconnected", d, 0.0, cfg);
    const std::size_t m = std::max<std::size_t>(1, floor_pow(n, rho));
    rec.samples.resize(cfg.seeds);
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t i) {
        const auto top = top_k(d, n, m, rec.seeds[i], DistributionSpec::exponential(), cfg.request.limits);
        std::vector<LatticeSite> sites;
        for (const auto& e : top) {
            sites.push_back(e.site);
        }
        rec.samples[i] = totally_disconnected(sites) ? 1.0 : 0.0;
    });
    rec.metrics["n"] = static_cast<double>(n);
    rec.metrics["m_n"] = static_cast<double>(m);
    rec.metrics["frequency"] = moments(rec.samples).mean;
    return rec;
}

} // namespace pam
