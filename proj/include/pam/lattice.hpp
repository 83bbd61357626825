// SPDX-License-Identifier: Apache-2.0
//! \file pam/lattice.hpp
//! Geometry of l1 balls in Z^d: exact site counts, ranking and unranking in
//! two orders, and ordered iteration.
//!
//! Lexicographic order (coordinate 0 most significant) is the storage order
//! of dense fields. Norm-major order (by |z|, then lexicographic inside each
//! sphere) makes every annulus r_lo <= |z| <= r_hi a contiguous index range,
//! which the sparse samplers rely on.
#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pam/error.hpp"

namespace pam {

using Count = std::uint64_t;

inline constexpr int kMaxDim = 8;

class LatticeSite {
  public:
    LatticeSite() = default;

    explicit LatticeSite(int dim) : dim_(dim)
    {
        if (dim < 1 || dim > kMaxDim) {
            throw DomainError("lattice dimension must be in [1, " + std::to_string(kMaxDim) + "]");
        }
    }

    explicit LatticeSite(std::span<const std::int64_t> coords) : LatticeSite(static_cast<int>(coords.size()))
    {
        std::copy(coords.begin(), coords.end(), coords_.begin());
    }

    LatticeSite(std::initializer_list<std::int64_t> coords)
        : LatticeSite(std::span<const std::int64_t>(coords.begin(), coords.size()))
    {
    }

    static LatticeSite origin(int dim) { return LatticeSite(dim); }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::int64_t operator[](int i) const noexcept { return coords_[i]; }
    std::int64_t& operator[](int i) noexcept { return coords_[i]; }
    [[nodiscard]] std::span<const std::int64_t> coords() const noexcept { return {coords_.data(), static_cast<std::size_t>(dim_)}; }

    [[nodiscard]] std::int64_t norm1() const noexcept
    {
        std::int64_t n = 0;
        for (int i = 0; i < dim_; ++i) {
            n += std::abs(coords_[i]);
        }
        return n;
    }

    //! Lexicographic; sites of different dimension order by dimension.
    friend std::strong_ordering operator<=>(const LatticeSite& a, const LatticeSite& b) noexcept
    {
        if (a.dim_ != b.dim_) {
            return a.dim_ <=> b.dim_;
        }
        for (int i = 0; i < a.dim_; ++i) {
            if (a.coords_[i] != b.coords_[i]) {
                return a.coords_[i] <=> b.coords_[i];
            }
        }
        return std::strong_ordering::equal;
    }
    friend bool operator==(const LatticeSite& a, const LatticeSite& b) noexcept { return (a <=> b) == 0; }

    [[nodiscard]] std::string to_string() const
    {
        std::string s = "(";
        for (int i = 0; i < dim_; ++i) {
            s += (i ? "," : "") + std::to_string(coords_[i]);
        }
        return s + ")";
    }

  private:
    std::array<std::int64_t, kMaxDim> coords_{};
    int dim_ = 0;
};

inline std::int64_t l1_distance(const LatticeSite& a, const LatticeSite& b) noexcept
{
    std::int64_t n = 0;
    for (int i = 0; i < a.dim(); ++i) {
        n += std::abs(a[i] - b[i]);
    }
    return n;
}

namespace detail {

using Wide = unsigned __int128;

inline constexpr Wide kCountMax = std::numeric_limits<Count>::max();

[[noreturn]] inline void count_overflow()
{
    throw ResourceCapError("lattice count overflows 64 bits; radius too large for this dimension");
}

//! C(n, k) for n >= 0; throws when the result exceeds 64 bits.
inline Count binomial(std::int64_t n, int k)
{
    if (k < 0 || n < k) {
        return 0;
    }
    Wide c = 1;
    for (int i = 0; i < k; ++i) {
        c = c * static_cast<Wide>(n - i) / static_cast<Wide>(i + 1);
        if (c > kCountMax) {
            count_overflow();
        }
    }
    return static_cast<Count>(c);
}

inline Count checked_add(Count a, Count b)
{
    if (a > std::numeric_limits<Count>::max() - b) {
        count_overflow();
    }
    return a + b;
}

inline void check_dim(int d)
{
    if (d < 0 || d > kMaxDim) {
        throw DomainError("lattice dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
}

} // namespace detail

//! |{z in Z^d : |z| <= r}|; zero for r < 0, one for d = 0.
inline Count ball_size(int d, std::int64_t r)
{
    detail::check_dim(d);
    if (r < 0) {
        return 0;
    }
    Count total = 0;
    for (int k = 0; k <= d && k <= r; ++k) {
        const detail::Wide term = (detail::Wide{1} << k) * detail::binomial(d, k) *
                                  static_cast<detail::Wide>(detail::binomial(r, k));
        if (term > detail::kCountMax) {
            detail::count_overflow();
        }
        total = detail::checked_add(total, static_cast<Count>(term));
    }
    return total;
}

//! Number of sites with |z| = r.
inline Count sphere_size(int d, std::int64_t r)
{
    return ball_size(d, r) - ball_size(d, r - 1);
}

//! sum_{j=0}^{m} ball_size(d, j), via the hockey-stick identity.
inline Count cumulative_ball_size(int d, std::int64_t m)
{
    detail::check_dim(d);
    if (m < 0) {
        return 0;
    }
    Count total = 0;
    for (int k = 0; k <= d && k <= m; ++k) {
        const detail::Wide term = (detail::Wide{1} << k) * detail::binomial(d, k) *
                                  static_cast<detail::Wide>(detail::binomial(m + 1, k + 1));
        if (term > detail::kCountMax) {
            detail::count_overflow();
        }
        total = detail::checked_add(total, static_cast<Count>(term));
    }
    return total;
}

namespace detail {

// Sites of the (tail_dim + 1)-dimensional ball of radius r whose leading
// coordinate is < x.
inline Count ball_prefix(int tail_dim, std::int64_t r, std::int64_t x)
{
    if (x <= 0) {
        return cumulative_ball_size(tail_dim, r + x - 1);
    }
    return cumulative_ball_size(tail_dim, r) + cumulative_ball_size(tail_dim, r - 1) -
           cumulative_ball_size(tail_dim, r - x);
}

// Same for the sphere of radius r.
inline Count sphere_prefix(int tail_dim, std::int64_t r, std::int64_t x)
{
    if (x <= 0) {
        return ball_size(tail_dim, r + x - 1);
    }
    return ball_size(tail_dim, r) + ball_size(tail_dim, r - 1) - ball_size(tail_dim, r - x);
}

// Largest x in [-r, r] with prefix(x) <= index.
template <class Prefix>
std::int64_t search_leading(std::int64_t r, Count index, Prefix&& prefix)
{
    std::int64_t lo = -r;
    std::int64_t hi = r;
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo + 1) / 2;
        if (prefix(mid) <= index) {
            lo = mid;
        }
        else {
            hi = mid - 1;
        }
    }
    return lo;
}

} // namespace detail

//! Position of z in the lexicographic enumeration of B_r.
inline Count lex_rank(const LatticeSite& z, std::int64_t r)
{
    const int d = z.dim();
    Count idx = 0;
    std::int64_t rem = r;
    for (int i = 0; i < d; ++i) {
        idx += detail::ball_prefix(d - 1 - i, rem, z[i]);
        rem -= std::abs(z[i]);
    }
    return idx;
}

inline LatticeSite lex_unrank(int d, std::int64_t r, Count index)
{
    LatticeSite z(d);
    std::int64_t rem = r;
    for (int i = 0; i < d; ++i) {
        const int tail = d - 1 - i;
        const std::int64_t x = tail == 0
                                   ? static_cast<std::int64_t>(index) - rem
                                   : detail::search_leading(rem, index, [&](std::int64_t v) {
                                         return detail::ball_prefix(tail, rem, v);
                                     });
        index -= detail::ball_prefix(tail, rem, x);
        z[i] = x;
        rem -= std::abs(x);
    }
    return z;
}

//! Position of z in the norm-major enumeration of Z^d (all of B_{|z|-1}
//! first, then lexicographic inside the sphere of radius |z|).
inline Count norm_rank(const LatticeSite& z)
{
    const int d = z.dim();
    const std::int64_t k = z.norm1();
    Count idx = ball_size(d, k - 1);
    std::int64_t rem = k;
    for (int i = 0; i < d; ++i) {
        idx += detail::sphere_prefix(d - 1 - i, rem, z[i]);
        rem -= std::abs(z[i]);
    }
    return idx;
}

inline LatticeSite norm_unrank(int d, Count index)
{
    // Smallest k with ball_size(d, k) > index.
    std::int64_t lo = 0;
    std::int64_t hi = 1;
    while (ball_size(d, hi) <= index) {
        hi *= 2;
    }
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (ball_size(d, mid) > index) {
            hi = mid;
        }
        else {
            lo = mid + 1;
        }
    }
    const std::int64_t k = lo;
    index -= ball_size(d, k - 1);
    LatticeSite z(d);
    std::int64_t rem = k;
    for (int i = 0; i < d; ++i) {
        const int tail = d - 1 - i;
        std::int64_t x = 0;
        if (tail == 0) {
            x = rem == 0 ? 0 : (index == 0 ? -rem : rem);
        }
        else {
            x = detail::search_leading(rem, index, [&](std::int64_t v) {
                return detail::sphere_prefix(tail, rem, v);
            });
        }
        index -= detail::sphere_prefix(tail, rem, x);
        z[i] = x;
        rem -= std::abs(x);
    }
    return z;
}

//! Calls fn(site, lexicographic index) for every site of B_r in order.
template <class Fn>
void for_each_site(int d, std::int64_t r, Fn&& fn)
{
    if (r < 0) {
        return;
    }
    LatticeSite z(d);
    std::array<std::int64_t, kMaxDim> rem{};
    // rem[i] is the radius available to coordinates i.. (inclusive).
    rem[0] = r;
    for (int i = 0; i < d; ++i) {
        z[i] = -rem[i];
        if (i + 1 < d) {
            rem[i + 1] = rem[i] - std::abs(z[i]);
        }
    }
    Count idx = 0;
    while (true) {
        fn(static_cast<const LatticeSite&>(z), idx++);
        int i = d - 1;
        while (i >= 0 && z[i] == rem[i]) {
            --i;
        }
        if (i < 0) {
            return;
        }
        ++z[i];
        for (int j = i + 1; j < d; ++j) {
            rem[j] = rem[j - 1] - std::abs(z[j - 1]);
            z[j] = -rem[j];
        }
    }
}

//! All 2d nearest neighbours, ordered (-e_0, +e_0, -e_1, +e_1, ...).
inline std::array<LatticeSite, 2 * kMaxDim> neighbours(const LatticeSite& z)
{
    std::array<LatticeSite, 2 * kMaxDim> out{};
    for (int i = 0; i < z.dim(); ++i) {
        out[2 * i] = z;
        out[2 * i][i] -= 1;
        out[2 * i + 1] = z;
        out[2 * i + 1][i] += 1;
    }
    return out;
}

} // namespace pam
