// SPDX-License-Identifier: Apache-2.0
//! \file pam/field_io.hpp
//! Field serialisation.
//!
//! Text format: one line per site, `c_0 ... c_{d-1} value`, value printed
//! with 17 significant digits; dense fields in lexicographic site order,
//! sparse fields in lexicographic record order. No header.
//!
//! Binary format (all integers and doubles little-endian):
//!
//!     char[4]  magic "PAMF"
//!     u32      version (1)
//!     u32      kind (0 dense potential, 1 sparse exceedances, 2 weights)
//!     u32      dimension d
//!     i64      radius
//!     u64      seed
//!     u32      family (0 exponential, 1 weibull, 2 pareto)
//!     f64      family parameter
//!     u64      band count B, then B x (i64 lo, i64 hi, f64 threshold)
//!     u64      entry count N
//!     dense/weights: N x f64 in lexicographic order
//!     sparse:        N x (d x i64 coordinate, f64 value)
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pam/potential.hpp"

namespace pam::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

enum class FieldKind : std::uint32_t { dense = 0, sparse = 1, weights = 2 };

namespace detail {

template <class T>
void put(std::ostream& os, T v)
{
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &v, sizeof(T));
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    }
    os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        throw DomainError("truncated field file");
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<U>(buf[i]) << (8 * i);
    }
    T v;
    std::memcpy(&v, &bits, sizeof(T));
    return v;
}

inline std::uint32_t family_code(const DistributionSpec& s) { return static_cast<std::uint32_t>(s.family()); }

inline DistributionSpec family_from(std::uint32_t code, double p)
{
    switch (code) {
    case 0:
        return DistributionSpec::exponential();
    case 1:
        return DistributionSpec::weibull(p);
    case 2:
        return DistributionSpec::pareto(p);
    default:
        throw DomainError("unknown distribution family in field file");
    }
}

inline void write_header(std::ostream& os, FieldKind kind, int d, std::int64_t r, std::uint64_t seed,
                         const DistributionSpec& spec, std::span<const ThresholdBand> bands, std::uint64_t n)
{
    os.write("PAMF", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(kind));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    put<std::int64_t>(os, r);
    put<std::uint64_t>(os, seed);
    put<std::uint32_t>(os, family_code(spec));
    put<double>(os, spec.parameter());
    put<std::uint64_t>(os, bands.size());
    for (const auto& b : bands) {
        put<std::int64_t>(os, b.lo);
        put<std::int64_t>(os, b.hi);
        put<double>(os, b.threshold);
    }
    put<std::uint64_t>(os, n);
}

} // namespace detail

//! Shortest text that round-trips a double (17 significant digits).
inline std::string format_value(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_site_line(std::ostream& os, const LatticeSite& z, double v)
{
    for (int i = 0; i < z.dim(); ++i) {
        os << z[i] << ' ';
    }
    os << format_value(v) << '\n';
}

inline void write_text(std::ostream& os, const PotentialField& f)
{
    for_each_site(f.dim(), f.radius(), [&](const LatticeSite& z, Count i) { write_site_line(os, z, f.value(i)); });
}

inline void write_text(std::ostream& os, const SparseExceedanceField& f)
{
    for (const auto& rec : f.records()) {
        write_site_line(os, rec.site, rec.value);
    }
}

//! Parses text lines into (site, value) pairs of dimension d.
inline std::vector<ExceedanceRecord> read_text_records(std::istream& is, int d)
{
    std::vector<ExceedanceRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        LatticeSite z(d);
        for (int i = 0; i < d; ++i) {
            if (!(ls >> z[i])) {
                throw DomainError("malformed field line: " + line);
            }
        }
        std::string tok;
        if (!(ls >> tok)) {
            throw DomainError("malformed field line: " + line);
        }
        out.push_back({z, std::strtod(tok.c_str(), nullptr)});
    }
    return out;
}

inline PotentialField read_text_dense(std::istream& is, int d, std::int64_t r, const DistributionSpec& spec,
                                      std::uint64_t seed)
{
    const auto recs = read_text_records(is, d);
    std::vector<double> values(ball_size(d, r));
    if (recs.size() != values.size()) {
        throw DomainError("dense field text has the wrong number of lines");
    }
    for (const auto& rec : recs) {
        values[lex_rank(rec.site, r)] = rec.value;
    }
    return {d, r, spec, seed, std::move(values)};
}

inline void write_binary(std::ostream& os, const PotentialField& f, FieldKind kind = FieldKind::dense)
{
    const ThresholdBand all{0, f.radius(), 0.0};
    detail::write_header(os, kind, f.dim(), f.radius(), f.seed(), f.spec(), {&all, 1}, f.size());
    for (const double v : f.values()) {
        detail::put<double>(os, v);
    }
}

inline void write_binary(std::ostream& os, const SparseExceedanceField& f)
{
    detail::write_header(os, FieldKind::sparse, f.dim(), f.radius(), f.seed(), f.spec(), f.bands(), f.size());
    for (const auto& rec : f.records()) {
        for (int i = 0; i < f.dim(); ++i) {
            detail::put<std::int64_t>(os, rec.site[i]);
        }
        detail::put<double>(os, rec.value);
    }
}

struct BinaryField {
    FieldKind kind;
    std::variant<PotentialField, SparseExceedanceField> field;
};

inline BinaryField read_binary(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "PAMF", 4) != 0) {
        throw DomainError("not a PAMF field file");
    }
    if (detail::get<std::uint32_t>(is) != 1) {
        throw DomainError("unsupported field file version");
    }
    const auto kind = static_cast<FieldKind>(detail::get<std::uint32_t>(is));
    const int d = static_cast<int>(detail::get<std::uint32_t>(is));
    const auto r = detail::get<std::int64_t>(is);
    const auto seed = detail::get<std::uint64_t>(is);
    const auto fam = detail::get<std::uint32_t>(is);
    const auto param = detail::get<double>(is);
    const auto spec = detail::family_from(fam, param);
    std::vector<ThresholdBand> bands(detail::get<std::uint64_t>(is));
    for (auto& b : bands) {
        b.lo = detail::get<std::int64_t>(is);
        b.hi = detail::get<std::int64_t>(is);
        b.threshold = detail::get<double>(is);
    }
    const auto n = detail::get<std::uint64_t>(is);
    if (kind == FieldKind::sparse) {
        std::vector<ExceedanceRecord> recs(n);
        for (auto& rec : recs) {
            rec.site = LatticeSite(d);
            for (int i = 0; i < d; ++i) {
                rec.site[i] = detail::get<std::int64_t>(is);
            }
            rec.value = detail::get<double>(is);
        }
        return {kind, SparseExceedanceField(d, r, spec, seed, std::move(bands), std::move(recs))};
    }
    std::vector<double> values(n);
    for (auto& v : values) {
        v = detail::get<double>(is);
    }
    return {kind, PotentialField(d, r, spec, seed, std::move(values))};
}

} // namespace pam::io
