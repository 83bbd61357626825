// SPDX-License-Identifier: Apache-2.0
//! \file pam/rng.hpp
//! Counter-based random streams (Philox4x32-10).
//!
//! Every random quantity in the library is a pure function of
//! (seed, stream tag, identity words, draw index). Per-site potential values
//! use the site coordinates as identity, so a field is reproducible
//! regardless of iteration order or thread count, and dense and sparse
//! samplers can share the per-site uniforms.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace pam::rng {

struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter generate(Counter ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

//! Stream domains. Values are part of the stream key and must never change,
//! otherwise previously written fields can no longer be regenerated.
enum class Tag : std::uint32_t {
    site_value = 1,
    sparse_band = 2,
    sparse_refine = 3,
    ensemble_seed = 4,
    meta_trial = 5,
    test = 99,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr Philox4x32::Key seed_key(std::uint64_t seed) noexcept
{
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

//! Key of the stream family (seed, tag, dimension).
constexpr Philox4x32::Key stream_key(std::uint64_t seed, Tag tag, std::uint32_t dim = 0) noexcept
{
    const auto out = Philox4x32::generate({static_cast<std::uint32_t>(tag), dim, 0x5EEDu, 0u},
                                          seed_key(seed));
    return {out[0], out[1]};
}

//! Uniform on the open interval (0, 1) with 52 random bits; exact in double
//! precision, so neither endpoint is reachable.
constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept
{
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

//! Child seed number `index` of a master seed; used to split ensembles.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, Tag tag = Tag::ensemble_seed) noexcept
{
    const auto out = Philox4x32::generate({static_cast<std::uint32_t>(index),
                                           static_cast<std::uint32_t>(index >> 32),
                                           static_cast<std::uint32_t>(tag), 0xC0FFEEu},
                                          seed_key(master));
    return (std::uint64_t{out[0]} << 32) | out[1];
}

//! Identity words of a lattice site: exact packing for d <= 3 with 32-bit
//! coordinates, otherwise a 96-bit mix of all coordinates.
inline std::array<std::uint32_t, 3> site_identity(std::span<const std::int64_t> coords) noexcept
{
    bool packable = coords.size() <= 3;
    for (const auto c : coords) {
        packable = packable && c >= std::numeric_limits<std::int32_t>::min() &&
                   c <= std::numeric_limits<std::int32_t>::max();
    }
    std::array<std::uint32_t, 3> id{0, 0, 0};
    if (packable) {
        for (std::size_t i = 0; i < coords.size() && i < id.size(); ++i) {
            id[i] = static_cast<std::uint32_t>(static_cast<std::int32_t>(coords[i]));
        }
        return id;
    }
    std::uint64_t a = 0x243F6A8885A308D3ull;
    std::uint64_t b = 0x13198A2E03707344ull;
    for (const auto c : coords) {
        a = splitmix64(a ^ static_cast<std::uint64_t>(c));
        b = splitmix64(b + static_cast<std::uint64_t>(c) * 0x9E3779B97F4A7C15ull);
    }
    return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
            static_cast<std::uint32_t>(b) ^ 0x80000000u};
}

//! The uniform attached to one lattice site of one field.
inline double site_uniform(const Philox4x32::Key& key, std::span<const std::int64_t> coords,
                           std::uint32_t draw = 0) noexcept
{
    const auto id = site_identity(coords);
    const auto out = Philox4x32::generate({draw, id[0], id[1], id[2]}, key);
    return to_open_unit(out[0], out[1]);
}

//! Sequential counter stream; satisfies UniformRandomBitGenerator so it can
//! drive standard distributions.
class CounterEngine {
  public:
    using result_type = std::uint32_t;

    CounterEngine(std::uint64_t seed, Tag tag, std::uint32_t id0 = 0, std::uint32_t id1 = 0,
                  std::uint32_t id2 = 0) noexcept
        : key_(stream_key(seed, tag)), id_{id0, id1, id2}
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        if (pos_ == 4) {
            buffer_ = Philox4x32::generate({block_++, id_[0], id_[1], id_[2]}, key_);
            pos_ = 0;
        }
        return buffer_[pos_++];
    }

    std::uint64_t next_u64() noexcept
    {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    double uniform() noexcept
    {
        const auto hi = (*this)();
        return to_open_unit(hi, (*this)());
    }

    double exponential() noexcept { return -std::log(uniform()); }

    //! Uniform integer in [0, n), n > 0, without modulo bias.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

  private:
    Philox4x32::Key key_;
    std::array<std::uint32_t, 3> id_;
    std::array<std::uint32_t, 4> buffer_{};
    std::uint32_t block_ = 0;
    int pos_ = 4;
};

} // namespace pam::rng
