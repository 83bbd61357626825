// SPDX-License-Identifier: Apache-2.0
//! \file pam/config.hpp
//! Experiment configuration: INI text in, typed struct, canonical text out.
//!
//! The canonical form lists every key of every section in a fixed order with
//! numbers printed in shortest round-trip form, so two files that differ only
//! in key order, whitespace, comments or number spelling canonicalise to the
//! same text. The config hash is the SHA-256 of the canonical text without
//! the execution-only keys (run.output, run.threads).
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "pam/distribution.hpp"
#include "pam/ensembles.hpp"
#include "pam/error.hpp"
#include "pam/potential.hpp"
#include "pam/solver.hpp"

namespace pam {

enum class EnsembleKind { gap, location, gumbel, concentration, disconnected };

struct ExperimentConfig {
    // [model]
    int dimension = 1;
    DistributionSpec distribution = DistributionSpec::exponential();
    bool zero_potential = false;
    // [grid]
    std::vector<double> times{10.0};
    BoxPolicy box;
    double tolerance = 1e-8;
    // [sample]
    bool sample_sparse = false;
    std::int64_t sample_radius = 100;
    double sample_threshold = 5.0;
    std::size_t sample_top = 10;
    bool sample_binary = false;
    // [solve]
    std::vector<double> radii{0.0, 1.0, 2.0, 5.0};
    std::vector<double> deltas{0.1, 0.5};
    bool oracle_check = false;
    bool dump_weights = false;
    // [variational]
    double c = 1.0;
    std::size_t variational_seeds = 1;
    Sampler variational_sampler = Sampler::sparse;
    std::optional<double> psi_level;
    std::optional<double> lower_level;
    std::optional<double> upper_level;
    int max_retries = 5;
    // [ensemble]
    EnsembleKind kind = EnsembleKind::gap;
    std::size_t seeds = 100;
    Sampler sampler = Sampler::sparse;
    GumbelProxy proxy = GumbelProxy::variational;
    double delta = 0.5;
    std::int64_t n = 10000;
    double rho = 0.4;
    double ks_tolerance = 0.05;
    double sign_tolerance = 0.03;
    double correlation_tolerance = 0.06;
    double concentration_min = 0.9;
    double frequency_min = 0.99;
    // [run]
    std::uint64_t seed = 1;
    std::string output;
    unsigned threads = 1;
    // [limits]
    SamplerLimits limits;
};

namespace detail {

//! Shortest of %.15g, %.16g, %.17g that reads back as v.
inline std::string fmt_double(double v)
{
    char buf[40];
    for (const int digits : {15, 16, 17}) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v)
{
    const auto s = trim(v);
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    }
    catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
    if (used != s.size() || !std::isfinite(x)) {
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    }
    return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    const auto s = trim(v);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        // Also accept integral values in floating notation, e.g. 1e6.
        const double x = parse_double(key, s);
        if (x < 0.0 || x != std::floor(x) || x > 1.8e19) {
            throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
        }
        return static_cast<std::uint64_t>(x);
    }
    try {
        return std::stoull(s);
    }
    catch (const std::exception&) {
        throw ConfigError(key, "integer out of range: '" + v + "'");
    }
}

inline std::int64_t parse_i64(const std::string& key, const std::string& v)
{
    const auto u = parse_u64(key, v);
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw ConfigError(key, "integer out of range: '" + v + "'");
    }
    return static_cast<std::int64_t>(u);
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    auto s = trim(v);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
        return true;
    }
    if (s == "false" || s == "no" || s == "off" || s == "0") {
        return false;
    }
    throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) {
        throw ConfigError(key, "expected a comma-separated list of numbers");
    }
    return out;
}

inline std::string join(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + fmt_double(v[i]);
    }
    return s;
}

template <class E>
E parse_enum(const std::string& key, const std::string& v, const std::vector<std::pair<std::string, E>>& names)
{
    const auto s = trim(v);
    for (const auto& [name, e] : names) {
        if (s == name) {
            return e;
        }
    }
    std::string allowed;
    for (const auto& [name, e] : names) {
        allowed += (allowed.empty() ? "" : "|") + name;
    }
    throw ConfigError(key, "expected one of " + allowed + ", got '" + v + "'");
}

template <class E>
std::string enum_name(E e, const std::vector<std::pair<std::string, E>>& names)
{
    for (const auto& [name, x] : names) {
        if (x == e) {
            return name;
        }
    }
    return "?";
}

inline const std::vector<std::pair<std::string, Sampler>> kSamplers{{"dense", Sampler::dense},
                                                                     {"sparse", Sampler::sparse}};
inline const std::vector<std::pair<std::string, EnsembleKind>> kKinds{
    {"gap", EnsembleKind::gap},
    {"location", EnsembleKind::location},
    {"gumbel", EnsembleKind::gumbel},
    {"concentration", EnsembleKind::concentration},
    {"disconnected", EnsembleKind::disconnected}};
inline const std::vector<std::pair<std::string, GumbelProxy>> kProxies{{"solver", GumbelProxy::solver},
                                                                        {"variational", GumbelProxy::variational}};

//! One key of the schema: how to read it into and write it out of the struct.
struct Field {
    std::string section;
    std::string name;
    bool execution_only = false;
    std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> read;
    std::function<std::string(const ExperimentConfig&)> write;
};

inline std::optional<double> parse_level(const std::string& key, const std::string& v)
{
    if (trim(v) == "auto") {
        return std::nullopt;
    }
    return parse_double(key, v);
}

inline std::string level_text(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("auto"); }

inline std::string family_name(const DistributionSpec& s) { return s.name(); }

inline const std::vector<Field>& schema()
{
    using C = ExperimentConfig;
    static const std::vector<Field> fields{
        {"model", "dimension", false,
         [](C& c, const std::string& k, const std::string& v) {
             const auto d = parse_i64(k, v);
             if (d < 1 || d > kMaxDim) {
                 throw ConfigError(k, "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
             }
             c.dimension = static_cast<int>(d);
         },
         [](const C& c) { return std::to_string(c.dimension); }},
        // distribution and parameter are read together in finish().
        {"model", "distribution", false, nullptr, [](const C& c) { return family_name(c.distribution); }},
        {"model", "parameter", false, nullptr, [](const C& c) { return fmt_double(c.distribution.parameter()); }},
        {"model", "zero_potential", false,
         [](C& c, const std::string& k, const std::string& v) { c.zero_potential = parse_bool(k, v); },
         [](const C& c) { return std::string(c.zero_potential ? "true" : "false"); }},
        {"grid", "times", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.times = parse_list(k, v);
             for (const double t : c.times) {
                 if (!(t > 0.0)) {
                     throw ConfigError(k, "times must be positive");
                 }
             }
             if (!std::is_sorted(c.times.begin(), c.times.end())) {
                 throw ConfigError(k, "time grid must be sorted");
             }
         },
         [](const C& c) { return join(c.times); }},
        {"grid", "box", false,
         [](C& c, const std::string& k, const std::string& v) {
             if (trim(v) == "auto") {
                 c.box = {};
             }
             else {
                 c.box = BoxPolicy::fixed_radius(parse_i64(k, v));
             }
         },
         [](const C& c) {
             return c.box.kind == BoxPolicy::Kind::automatic ? std::string("auto") : std::to_string(c.box.radius);
         }},
        {"grid", "tolerance", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.tolerance = parse_double(k, v);
             if (!(c.tolerance >= 1e-12 && c.tolerance <= 1e-4)) {
                 throw ConfigError(k, "tolerance must lie in [1e-12, 1e-4]");
             }
         },
         [](const C& c) { return fmt_double(c.tolerance); }},
        {"sample", "mode", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.sample_sparse = parse_enum(k, v, kSamplers) == Sampler::sparse;
         },
         [](const C& c) { return std::string(c.sample_sparse ? "sparse" : "dense"); }},
        {"sample", "radius", false,
         [](C& c, const std::string& k, const std::string& v) { c.sample_radius = parse_i64(k, v); },
         [](const C& c) { return std::to_string(c.sample_radius); }},
        {"sample", "threshold", false,
         [](C& c, const std::string& k, const std::string& v) { c.sample_threshold = parse_double(k, v); },
         [](const C& c) { return fmt_double(c.sample_threshold); }},
        {"sample", "top", false,
         [](C& c, const std::string& k, const std::string& v) { c.sample_top = parse_u64(k, v); },
         [](const C& c) { return std::to_string(c.sample_top); }},
        {"sample", "format", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.sample_binary = parse_enum<int>(k, v, {{"text", 0}, {"binary", 1}}) == 1;
         },
         [](const C& c) { return std::string(c.sample_binary ? "binary" : "text"); }},
        {"solve", "radii", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.radii = parse_list(k, v);
             for (const double r : c.radii) {
                 if (r < 0.0) {
                     throw ConfigError(k, "radii must be nonnegative");
                 }
             }
         },
         [](const C& c) { return join(c.radii); }},
        {"solve", "deltas", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.deltas = parse_list(k, v);
             for (const double r : c.deltas) {
                 if (!(r > 0.0)) {
                     throw ConfigError(k, "deltas must be positive");
                 }
             }
         },
         [](const C& c) { return join(c.deltas); }},
        {"solve", "oracle_check", false,
         [](C& c, const std::string& k, const std::string& v) { c.oracle_check = parse_bool(k, v); },
         [](const C& c) { return std::string(c.oracle_check ? "true" : "false"); }},
        {"solve", "dump_weights", false,
         [](C& c, const std::string& k, const std::string& v) { c.dump_weights = parse_bool(k, v); },
         [](const C& c) { return std::string(c.dump_weights ? "true" : "false"); }},
        {"variational", "c", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.c = parse_double(k, v);
             if (c.c < 0.0) {
                 throw ConfigError(k, "c must be nonnegative");
             }
         },
         [](const C& c) { return fmt_double(c.c); }},
        {"variational", "seeds", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.variational_seeds = parse_u64(k, v);
             if (c.variational_seeds < 1) {
                 throw ConfigError(k, "seeds must be positive");
             }
         },
         [](const C& c) { return std::to_string(c.variational_seeds); }},
        {"variational", "sampler", false,
         [](C& c, const std::string& k, const std::string& v) { c.variational_sampler = parse_enum(k, v, kSamplers); },
         [](const C& c) { return enum_name(c.variational_sampler, kSamplers); }},
        {"variational", "psi_level", false,
         [](C& c, const std::string& k, const std::string& v) { c.psi_level = parse_level(k, v); },
         [](const C& c) { return level_text(c.psi_level); }},
        {"variational", "lower_level", false,
         [](C& c, const std::string& k, const std::string& v) { c.lower_level = parse_level(k, v); },
         [](const C& c) { return level_text(c.lower_level); }},
        {"variational", "upper_level", false,
         [](C& c, const std::string& k, const std::string& v) { c.upper_level = parse_level(k, v); },
         [](const C& c) { return level_text(c.upper_level); }},
        {"variational", "max_retries", false,
         [](C& c, const std::string& k, const std::string& v) {
             const auto n = parse_u64(k, v);
             if (n > 100) {
                 throw ConfigError(k, "max_retries must be at most 100");
             }
             c.max_retries = static_cast<int>(n);
         },
         [](const C& c) { return std::to_string(c.max_retries); }},
        {"ensemble", "kind", false,
         [](C& c, const std::string& k, const std::string& v) { c.kind = parse_enum(k, v, kKinds); },
         [](const C& c) { return enum_name(c.kind, kKinds); }},
        {"ensemble", "seeds", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.seeds = parse_u64(k, v);
             if (c.seeds < 1) {
                 throw ConfigError(k, "seeds must be positive");
             }
         },
         [](const C& c) { return std::to_string(c.seeds); }},
        {"ensemble", "sampler", false,
         [](C& c, const std::string& k, const std::string& v) { c.sampler = parse_enum(k, v, kSamplers); },
         [](const C& c) { return enum_name(c.sampler, kSamplers); }},
        {"ensemble", "proxy", false,
         [](C& c, const std::string& k, const std::string& v) { c.proxy = parse_enum(k, v, kProxies); },
         [](const C& c) { return enum_name(c.proxy, kProxies); }},
        {"ensemble", "delta", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.delta = parse_double(k, v);
             if (!(c.delta > 0.0)) {
                 throw ConfigError(k, "delta must be positive");
             }
         },
         [](const C& c) { return fmt_double(c.delta); }},
        {"ensemble", "n", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.n = parse_i64(k, v);
             if (c.n < 1) {
                 throw ConfigError(k, "n must be positive");
             }
         },
         [](const C& c) { return std::to_string(c.n); }},
        {"ensemble", "rho", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.rho = parse_double(k, v);
             if (!(c.rho > 0.0 && c.rho < 0.5)) {
                 throw ConfigError(k, "rho must lie in (0, 1/2)");
             }
         },
         [](const C& c) { return fmt_double(c.rho); }},
        {"ensemble", "ks_tolerance", false,
         [](C& c, const std::string& k, const std::string& v) { c.ks_tolerance = parse_double(k, v); },
         [](const C& c) { return fmt_double(c.ks_tolerance); }},
        {"ensemble", "sign_tolerance", false,
         [](C& c, const std::string& k, const std::string& v) { c.sign_tolerance = parse_double(k, v); },
         [](const C& c) { return fmt_double(c.sign_tolerance); }},
        {"ensemble", "correlation_tolerance", false,
         [](C& c, const std::string& k, const std::string& v) { c.correlation_tolerance = parse_double(k, v); },
         [](const C& c) { return fmt_double(c.correlation_tolerance); }},
        {"ensemble", "concentration_min", false,
         [](C& c, const std::string& k, const std::string& v) { c.concentration_min = parse_double(k, v); },
         [](const C& c) { return fmt_double(c.concentration_min); }},
        {"ensemble", "frequency_min", false,
         [](C& c, const std::string& k, const std::string& v) { c.frequency_min = parse_double(k, v); },
         [](const C& c) { return fmt_double(c.frequency_min); }},
        {"run", "seed", false,
         [](C& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
         [](const C& c) { return std::to_string(c.seed); }},
        {"run", "output", true, [](C& c, const std::string&, const std::string& v) { c.output = trim(v); },
         [](const C& c) { return c.output; }},
        {"run", "threads", true,
         [](C& c, const std::string& k, const std::string& v) {
             const auto n = parse_u64(k, v);
             if (n < 1 || n > 1024) {
                 throw ConfigError(k, "threads must be in [1, 1024]");
             }
             c.threads = static_cast<unsigned>(n);
         },
         [](const C& c) { return std::to_string(c.threads); }},
        {"limits", "memory_bytes", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.limits.memory_bytes = parse_u64(k, v);
             if (c.limits.memory_bytes == 0) {
                 throw ConfigError(k, "caps must be positive");
             }
         },
         [](const C& c) { return std::to_string(c.limits.memory_bytes); }},
        {"limits", "max_records", false,
         [](C& c, const std::string& k, const std::string& v) {
             c.limits.max_expected_records = parse_double(k, v);
             if (!(c.limits.max_expected_records > 0.0)) {
                 throw ConfigError(k, "caps must be positive");
             }
         },
         [](const C& c) { return fmt_double(c.limits.max_expected_records); }},
    };
    return fields;
}

inline const Field& find_field(const std::string& dotted)
{
    for (const auto& f : schema()) {
        if (f.section + "." + f.name == dotted) {
            return f;
        }
    }
    throw ConfigError(dotted, "unknown key");
}

} // namespace detail

//! Flat map "section.key" -> raw value, the stage where overrides apply.
using ConfigValues = std::map<std::string, std::string>;

inline ConfigValues read_ini(std::istream& is)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    }
    catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    ConfigValues out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError(section, "key outside of any section");
        }
        for (const auto& [key, value] : body) {
            const auto dotted = section + "." + key;
            detail::find_field(dotted);
            out[dotted] = value.data();
        }
    }
    return out;
}

//! Applies "section.key=value".
inline void apply_override(ConfigValues& values, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError(assignment, "override must have the form section.key=value");
    }
    const auto key = detail::trim(assignment.substr(0, eq));
    detail::find_field(key);
    values[key] = assignment.substr(eq + 1);
}

inline ExperimentConfig build_config(const ConfigValues& values)
{
    ExperimentConfig c;
    for (const auto& f : detail::schema()) {
        const auto dotted = f.section + "." + f.name;
        const auto it = values.find(dotted);
        if (it != values.end() && f.read) {
            f.read(c, dotted, it->second);
        }
    }
    const auto fam = values.count("model.distribution") ? values.at("model.distribution") : "exponential";
    const double param =
        values.count("model.parameter") ? detail::parse_double("model.parameter", values.at("model.parameter")) : 0.0;
    const auto family = detail::parse_enum<Family>("model.distribution", fam,
                                                   {{"exponential", Family::exponential},
                                                    {"weibull", Family::weibull},
                                                    {"pareto", Family::pareto}});
    try {
        if (family == Family::weibull) {
            c.distribution = DistributionSpec::weibull(param);
        }
        else if (family == Family::pareto) {
            c.distribution = DistributionSpec::pareto(param);
            c.distribution.validate(c.dimension);
        }
    }
    catch (const DomainError& e) {
        throw ConfigError("model.parameter", e.what());
    }
    if (c.box.kind == BoxPolicy::Kind::fixed && c.box.radius < 0) {
        throw ConfigError("grid.box", "radius must be nonnegative");
    }
    return c;
}

inline ExperimentConfig parse_config(std::istream& is) { return build_config(read_ini(is)); }

inline ExperimentConfig parse_config(const std::string& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

//! Canonical INI text; with semantic_only, the execution-only keys are left
//! out.
inline std::string canonical_text(const ExperimentConfig& c, bool semantic_only = false)
{
    std::string out;
    std::string section;
    for (const auto& f : detail::schema()) {
        if (semantic_only && f.execution_only) {
            continue;
        }
        if (f.section != section) {
            section = f.section;
            out += (out.empty() ? "" : "\n") + std::string("[") + section + "]\n";
        }
        out += f.name + " = " + f.write(c) + "\n";
    }
    return out;
}

inline std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_text(c, true)); }

} // namespace pam
