// SPDX-License-Identifier: Apache-2.0
//! \file pam/solver.hpp
//! Adaptive solution of u' = (Delta + xi) u, u(0) = 1_0, on a Dirichlet box.
//!
//! The total mass U(t) grows like exp(t d log t), so the solver tracks the
//! normalised profile w = u / U together with log U:
//!
//!     w' = A w - lambda w,   (log U)' = lambda,   lambda = 1^T A w.
//!
//! The system is advanced with the Dormand-Prince 5(4) pair under a PI step
//! controller, and w is renormalised to unit sum after every accepted step.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pam/error.hpp"
#include "pam/generator.hpp"

namespace pam {

struct SolutionProfile {
    double t = 0.0;
    double log_mass = 0.0;
    int dim = 1;
    std::int64_t radius = 0;
    std::vector<double> weights; //!< lexicographic site order
    double boundary_mass_bound = 0.0; //!< integral of the boundary leak up to t
};

struct StepStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t clamped = 0;     //!< negative weights reset to zero
    double largest_clamp = 0.0;    //!< largest magnitude among them
};

struct Trajectory {
    std::vector<SolutionProfile> profiles;
    StepStats stats;
    double boundary_mass_bound = 0.0;
};

struct IntegratorOptions {
    double tol = 1e-8;
    double initial_step = 0.0;     //!< 0 selects a default
    double min_step = 1e-14;
    std::uint64_t max_steps = 50'000'000;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DP5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // Fifth minus fourth order weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

class NormalisedSystem {
  public:
    explicit NormalisedSystem(const GeneratorOperator& op) : op_(op), aw_(op.size()) {}

    // dw = A w - lambda w; returns lambda, writes the boundary leak rate.
    double operator()(std::span<const double> w, std::span<double> dw, double& leak)
    {
        op_.apply(w, aw_);
        double lambda = 0.0;
        double out = 0.0;
        const auto xi = op_.potential();
        const auto deg = op_.out_degree();
        for (std::size_t i = 0; i < w.size(); ++i) {
            lambda += w[i] * (xi[i] - deg[i]);
            out += deg[i] * w[i];
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            dw[i] = aw_[i] - lambda * w[i];
        }
        leak = out;
        return lambda;
    }

  private:
    const GeneratorOperator& op_;
    std::vector<double> aw_;
};

} // namespace detail

//! Solves on the field's own ball and records profiles at output_times.
//! Steps land exactly on every output time.
inline Trajectory integrate(const GeneratorOperator& op, double t_end, std::vector<double> output_times,
                            const IntegratorOptions& opt = {})
{
    if (!(opt.tol >= 1e-12 && opt.tol <= 1e-4)) {
        throw DomainError("tolerance must lie in [1e-12, 1e-4]");
    }
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
        throw DomainError("t_end must be finite and nonnegative");
    }
    std::sort(output_times.begin(), output_times.end());
    output_times.erase(std::unique(output_times.begin(), output_times.end()), output_times.end());
    for (const double t : output_times) {
        if (!(t >= 0.0 && t <= t_end)) {
            throw DomainError("output times must lie in [0, t_end]");
        }
    }
    using T = detail::DP5;
    const std::size_t n = op.size();
    double max_xi = 0.0;
    for (const double x : op.potential()) {
        max_xi = std::max(max_xi, x);
    }
    const double ceiling = 0.5 / (max_xi + 2.0 * op.dim());

    std::vector<double> w(n, 0.0);
    w[lex_rank(LatticeSite::origin(op.dim()), op.radius())] = 1.0;
    double log_u = 0.0;
    double leak_integral = 0.0;
    double t = 0.0;

    Trajectory traj;
    auto record = [&](double at) {
        traj.profiles.push_back({at, log_u, op.dim(), op.radius(), w, leak_integral});
    };

    detail::NormalisedSystem f(op);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), y5(n);
    double l1, l3, l4, l5, l6, l7;
    double q1, q2, q3, q4, q5, q6, q7;

    constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0, beta = 0.04, alpha = 0.2 - 0.75 * beta;
    double h = opt.initial_step > 0 ? opt.initial_step : std::min(ceiling, 1e-3);
    double err_prev = 1e-4;
    std::size_t next_out = 0;

    auto stage = [&](std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = w[i];
            for (const auto& [a, k] : terms) {
                s += h * a * (*k)[i];
            }
            y[i] = s;
        }
    };

    while (next_out < output_times.size() && output_times[next_out] == 0.0) {
        record(0.0);
        ++next_out;
    }
    while (t < t_end) {
        if (traj.stats.accepted + traj.stats.rejected >= opt.max_steps) {
            throw NumericalError("step budget exhausted at t = " + std::to_string(t));
        }
        const double target = next_out < output_times.size() ? output_times[next_out] : t_end;
        h = std::min(h, ceiling);
        const double h_free = h;
        bool lands = false;
        if (t + 1.01 * h >= target) {
            h = target - t;
            lands = true;
        }

        l1 = f(w, k1, q1);
        stage({{T::a21, &k1}});
        f(y, k2, q2);
        stage({{T::a31, &k1}, {T::a32, &k2}});
        l3 = f(y, k3, q3);
        stage({{T::a41, &k1}, {T::a42, &k2}, {T::a43, &k3}});
        l4 = f(y, k4, q4);
        stage({{T::a51, &k1}, {T::a52, &k2}, {T::a53, &k3}, {T::a54, &k4}});
        l5 = f(y, k5, q5);
        stage({{T::a61, &k1}, {T::a62, &k2}, {T::a63, &k3}, {T::a64, &k4}, {T::a65, &k5}});
        l6 = f(y, k6, q6);
        for (std::size_t i = 0; i < n; ++i) {
            y5[i] = w[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] + T::b6 * k6[i]);
        }
        l7 = f(y5, k7, q7);

        const double log_u_new = log_u + h * (T::b1 * l1 + T::b3 * l3 + T::b4 * l4 + T::b5 * l5 + T::b6 * l6);
        double err = std::abs(h * (T::e1 * l1 + T::e3 * l3 + T::e4 * l4 + T::e5 * l5 + T::e6 * l6 + T::e7 * l7)) /
                     (opt.tol * (1.0 + std::max(std::abs(log_u), std::abs(log_u_new))));
        bool finite = std::isfinite(log_u_new);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] + T::e6 * k6[i] +
                                  T::e7 * k7[i]);
            const double scale = opt.tol * (1.0 + std::max(std::abs(w[i]), std::abs(y5[i])));
            err = std::max(err, std::abs(e) / scale);
            finite = finite && std::isfinite(y5[i]);
        }
        if (!finite || !std::isfinite(err)) {
            if (h <= opt.min_step) {
                throw NumericalError("non-finite state at t = " + std::to_string(t));
            }
            h *= 0.25;
            ++traj.stats.rejected;
            continue;
        }

        if (err <= 1.0) {
            // Accept.
            t = lands ? target : t + h;
            log_u = log_u_new;
            leak_integral += h * (T::b1 * q1 + T::b3 * q3 + T::b4 * q4 + T::b5 * q5 + T::b6 * q6);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double v = y5[i];
                if (v < 0.0) {
                    ++traj.stats.clamped;
                    traj.stats.largest_clamp = std::max(traj.stats.largest_clamp, -v);
                    v = 0.0;
                }
                else if (v < 1e-300) {
                    v = 0.0;
                }
                w[i] = v;
                sum += v;
            }
            if (!(sum > 0.0)) {
                throw NumericalError("profile vanished at t = " + std::to_string(t));
            }
            for (auto& v : w) {
                v /= sum;
            }
            ++traj.stats.accepted;
            const double e = std::max(err, 1e-10);
            const double fac = std::clamp(safety * std::pow(e, -alpha) * std::pow(err_prev, beta), fac_min, fac_max);
            err_prev = e;
            // A step clipped onto an output time does not shrink the next one.
            h = lands ? std::max(h * fac, h_free) : h * fac;
            while (next_out < output_times.size() && output_times[next_out] <= t) {
                record(output_times[next_out]);
                ++next_out;
            }
        }
        else {
            ++traj.stats.rejected;
            h *= std::max(fac_min, safety * std::pow(err, -alpha));
        }
        if (h < opt.min_step && t < t_end) {
            throw NumericalError("step size underflow at t = " + std::to_string(t));
        }
    }
    while (next_out < output_times.size()) {
        record(output_times[next_out]);
        ++next_out;
    }
    traj.boundary_mass_bound = leak_integral;
    return traj;
}

inline Trajectory integrate(const PotentialField& field, double t_end, std::vector<double> output_times,
                            const IntegratorOptions& opt = {})
{
    return integrate(GeneratorOperator(field), t_end, std::move(output_times), opt);
}

//! L_t = log U(t) / t.
inline double growth_rate(const SolutionProfile& p)
{
    if (!(p.t > 0.0)) {
        throw DomainError("growth rate needs t > 0");
    }
    return p.log_mass / p.t;
}

//! Site of the largest weight; the lexicographically smallest wins ties.
inline LatticeSite localization_site(const SolutionProfile& p)
{
    const auto it = std::max_element(p.weights.begin(), p.weights.end());
    return lex_unrank(p.dim, p.radius, static_cast<Count>(it - p.weights.begin()));
}

//! Weight of the sites within l1 distance `radius` of `center`.
inline double mass_within(const SolutionProfile& p, const LatticeSite& center, double radius)
{
    if (!(radius >= 0.0)) {
        throw DomainError("mass_within radius must be >= 0");
    }
    double s = 0.0;
    for_each_site(p.dim, p.radius, [&](const LatticeSite& z, Count i) {
        if (static_cast<double>(l1_distance(z, center)) <= radius) {
            s += p.weights[i];
        }
    });
    return std::min(s, 1.0);
}

struct BoxPolicy {
    enum class Kind { automatic, fixed } kind = Kind::automatic;
    std::int64_t radius = 0;

    static BoxPolicy fixed_radius(std::int64_t r) { return {Kind::fixed, r}; }
};

//! Default: ceil(max(t log max(t, 3), 2dt + 10 sqrt(2dt) + 20)), i.e. beyond
//! both the t log t jump window and a ten-sigma Poisson excursion.
inline std::int64_t choose_box_radius(double t, int d, const BoxPolicy& policy = {})
{
    if (policy.kind == BoxPolicy::Kind::fixed) {
        if (policy.radius < 0) {
            throw DomainError("fixed box radius must be >= 0");
        }
        return policy.radius;
    }
    if (!(t > 0.0)) {
        throw DomainError("box radius needs t > 0");
    }
    const double jumps = 2.0 * d * t;
    const double r = std::max(t * std::log(std::max(t, 3.0)), jumps + 10.0 * std::sqrt(jumps) + 20.0);
    return static_cast<std::int64_t>(std::ceil(r));
}

} // namespace pam
