// SPDX-License-Identifier: Apache-2.0
//! \file pam/generator.hpp
//! The operator Delta + xi on an l1 ball with zero boundary values.
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pam/potential.hpp"

namespace pam {

//! Sparse generator of the Dirichlet problem on B_R in lexicographic site
//! order. Row i acts as (Af)_i = (xi_i - 2d) f_i + sum of f over in-box
//! neighbours; each missing neighbour is a unit leak through the boundary.
class GeneratorOperator {
  public:
    static constexpr std::int32_t kOutside = -1;

    explicit GeneratorOperator(const PotentialField& field)
        : dim_(field.dim()), radius_(field.radius()), diagonal_(field.size()), potential_(field.values().begin(), field.values().end()),
          out_degree_(field.size(), 0), neighbours_(field.size() * 2 * static_cast<std::size_t>(field.dim()))
    {
        if (field.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
            throw ResourceCapError("box too large for 32-bit neighbour indices");
        }
        const int deg = 2 * dim_;
        for_each_site(dim_, radius_, [&](const LatticeSite& z, Count i) {
            diagonal_[i] = potential_[i] - deg;
            const auto nb = neighbours(z);
            for (int k = 0; k < deg; ++k) {
                std::int32_t j = kOutside;
                if (nb[k].norm1() <= radius_) {
                    j = static_cast<std::int32_t>(lex_rank(nb[k], radius_));
                }
                else {
                    ++out_degree_[i];
                }
                neighbours_[i * deg + k] = j;
            }
        });
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::int64_t radius() const noexcept { return radius_; }
    [[nodiscard]] std::size_t size() const noexcept { return diagonal_.size(); }
    [[nodiscard]] std::span<const double> diagonal() const noexcept { return diagonal_; }
    [[nodiscard]] std::span<const double> potential() const noexcept { return potential_; }
    [[nodiscard]] std::span<const int> out_degree() const noexcept { return out_degree_; }

    //! In-box neighbour indices of site i (kOutside for missing ones).
    [[nodiscard]] std::span<const std::int32_t> neighbours_of(std::size_t i) const noexcept
    {
        const auto deg = static_cast<std::size_t>(2 * dim_);
        return {neighbours_.data() + i * deg, deg};
    }

    //! y = A x.
    void apply(std::span<const double> x, std::span<double> y) const noexcept
    {
        const auto deg = static_cast<std::size_t>(2 * dim_);
        for (std::size_t i = 0; i < diagonal_.size(); ++i) {
            double s = diagonal_[i] * x[i];
            const std::int32_t* nb = neighbours_.data() + i * deg;
            for (std::size_t k = 0; k < deg; ++k) {
                if (nb[k] != kOutside) {
                    s += x[static_cast<std::size_t>(nb[k])];
                }
            }
            y[i] = s;
        }
    }

    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const
    {
        std::vector<double> y(x.size());
        apply(x, y);
        return y;
    }

  private:
    int dim_;
    std::int64_t radius_;
    std::vector<double> diagonal_;
    std::vector<double> potential_;
    std::vector<int> out_degree_;
    std::vector<std::int32_t> neighbours_;
};

inline GeneratorOperator build_generator(const PotentialField& field) { return GeneratorOperator(field); }

} // namespace pam
