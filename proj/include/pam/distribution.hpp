// SPDX-License-Identifier: Apache-2.0
//! \file pam/distribution.hpp
//! Laws of the i.i.d. potential.
#pragma once

#include <cmath>
#include <string>

#include "pam/error.hpp"

namespace pam {

enum class Family { exponential, weibull, pareto };

//! Law of xi(0). Each family is a monotone image of a standard exponential
//! E via xi = from_exp(E), which lets all samplers work in "exponential
//! space" where tails are e^{-e} and conditional laws are shifts.
//!
//!   exponential  P(xi > x) = e^{-x}             xi = E
//!   weibull      P(xi > x) = e^{-x^gamma}        xi = E^{1/gamma}
//!   pareto       P(xi > x) = x^{-alpha}, x >= 1  xi = e^{E/alpha}
class DistributionSpec {
  public:
    static DistributionSpec exponential() { return {Family::exponential, 0.0}; }

    static DistributionSpec weibull(double gamma)
    {
        if (!(gamma > 0.0 && gamma < 1.0)) {
            throw DomainError("weibull potential requires 0 < gamma < 1");
        }
        return {Family::weibull, gamma};
    }

    static DistributionSpec pareto(double alpha)
    {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw DomainError("pareto potential requires alpha > 0");
        }
        return {Family::pareto, alpha};
    }

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] double parameter() const noexcept { return parameter_; }

    //! Dimension-dependent guard: pareto needs alpha > d.
    void validate(int d) const
    {
        if (family_ == Family::pareto && !(parameter_ > d)) {
            throw DomainError("pareto potential requires alpha > d");
        }
    }

    //! Map of the potential value to exponential space (nondecreasing).
    [[nodiscard]] double to_exp(double x) const noexcept
    {
        switch (family_) {
        case Family::exponential:
            return x > 0.0 ? x : 0.0;
        case Family::weibull:
            return x > 0.0 ? std::pow(x, parameter_) : 0.0;
        case Family::pareto:
            return x > 1.0 ? parameter_ * std::log(x) : 0.0;
        }
        return 0.0;
    }

    [[nodiscard]] double from_exp(double e) const noexcept
    {
        switch (family_) {
        case Family::exponential:
            return e;
        case Family::weibull:
            return std::pow(e, 1.0 / parameter_);
        case Family::pareto:
            return std::exp(e / parameter_);
        }
        return e;
    }

    //! P(xi > x).
    [[nodiscard]] double tail(double x) const noexcept { return std::exp(-to_exp(x)); }

    //! Draw from the full law.
    [[nodiscard]] double draw(double uniform) const noexcept { return from_exp(-std::log(uniform)); }

    //! Draw conditioned on xi > threshold.
    [[nodiscard]] double draw_above(double threshold, double uniform) const noexcept
    {
        return from_exp(to_exp(threshold) - std::log(uniform));
    }

    //! Draw conditioned on xi <= threshold.
    [[nodiscard]] double draw_below(double threshold, double uniform) const noexcept
    {
        const double e = to_exp(threshold);
        return from_exp(-std::log1p(uniform * std::expm1(-e)));
    }

    //! Draw conditioned on lo < xi <= hi.
    [[nodiscard]] double draw_between(double lo, double hi, double uniform) const noexcept
    {
        const double a = to_exp(lo);
        const double b = to_exp(hi);
        return from_exp(a - std::log1p(uniform * std::expm1(-(b - a))));
    }

    [[nodiscard]] std::string name() const
    {
        switch (family_) {
        case Family::exponential:
            return "exponential";
        case Family::weibull:
            return "weibull";
        case Family::pareto:
            return "pareto";
        }
        return "?";
    }

    friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

  private:
    DistributionSpec(Family f, double p) : family_(f), parameter_(p) {}

    Family family_ = Family::exponential;
    double parameter_ = 0.0;
};

} // namespace pam
