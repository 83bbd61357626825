// SPDX-License-Identifier: Apache-2.0
//! \file pam/experiment.hpp
//! Batch commands behind the `pam` executable: sample, solve, variational,
//! ensemble and report. Each command writes its data files into one output
//! directory and finishes with run.json, the record listing every file.
//!
//! Data files depend only on the config (never on timestamps or thread
//! count); run.json holds the wall-clock metadata.
#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pam/config.hpp"
#include "pam/ensembles.hpp"
#include "pam/field_io.hpp"
#include "pam/oracle.hpp"
#include "pam/solver.hpp"
#include "pam/variational.hpp"

namespace pam::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr const char* kOutputRootVariable = "PAM_OUTPUT_ROOT";

inline json site_json(const LatticeSite& z)
{
    json a = json::array();
    for (const auto c : z.coords()) {
        a.push_back(c);
    }
    return a;
}

//! Finite doubles as numbers, the rest as null (JSON has no infinities).
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

//! Output directory plus the list of files written into it. config.ini
//! holds the semantic config only, so it is identical across thread counts
//! and output locations.
class RunWriter {
  public:
    RunWriter(fs::path dir, std::string command, const ExperimentConfig& cfg)
        : dir_(std::move(dir)), command_(std::move(command)), cfg_(cfg), started_(std::chrono::system_clock::now())
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw ConfigError("run.output", "cannot create output directory " + dir_.string() + ": " + ec.message());
        }
        write("config.ini", canonical_text(cfg_, true));
    }

    [[nodiscard]] const fs::path& dir() const noexcept { return dir_; }

    std::ofstream open(const std::string& name, bool binary = false)
    {
        files_.push_back(name);
        std::ofstream os(dir_ / name, binary ? std::ios::binary : std::ios::out);
        if (!os) {
            throw ConfigError("run.output", "cannot write " + (dir_ / name).string());
        }
        return os;
    }

    void write(const std::string& name, const std::string& content)
    {
        auto os = open(name, true);
        os << content;
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    //! Writes run.json.
    void finish()
    {
        const auto finished = std::chrono::system_clock::now();
        json files = json::array();
        for (const auto& name : files_) {
            std::ifstream is(dir_ / name, std::ios::binary);
            std::stringstream ss;
            ss << is.rdbuf();
            const auto data = ss.str();
            files.push_back({{"path", name}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
        }
        json rec{{"artifact_version", kArtifactVersion},
                 {"command", command_},
                 {"config_hash", config_hash(cfg_)},
                 {"threads", cfg_.threads},
                 {"output", dir_.string()},
                 {"started_utc", utc(started_)},
                 {"finished_utc", utc(finished)},
                 {"wall_seconds", std::chrono::duration<double>(finished - started_).count()},
                 {"files", files}};
        std::ofstream os(dir_ / "run.json");
        os << rec.dump(2) << "\n";
    }

  private:
    static std::string utc(std::chrono::system_clock::time_point tp)
    {
        const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
        std::tm tm{};
        gmtime_r(&tt, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    fs::path dir_;
    std::string command_;
    ExperimentConfig cfg_;
    std::chrono::system_clock::time_point started_;
    std::vector<std::string> files_;
};

//! --out, then run.output, then $PAM_OUTPUT_ROOT/<command>-<hash>, then
//! ./runs/<command>-<hash>.
inline fs::path resolve_output(const std::string& command, const ExperimentConfig& cfg)
{
    if (!cfg.output.empty()) {
        return cfg.output;
    }
    const char* root = std::getenv(kOutputRootVariable);
    const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
    return base / (command + "-" + config_hash(cfg).substr(0, 12));
}

inline PotentialField model_field(const ExperimentConfig& cfg, std::int64_t radius, std::uint64_t seed)
{
    if (cfg.zero_potential) {
        if (ball_size(cfg.dimension, radius) > cfg.limits.memory_bytes / sizeof(double)) {
            throw ResourceCapError("dense field exceeds the memory budget");
        }
        return {cfg.dimension, radius, cfg.distribution, seed,
                std::vector<double>(ball_size(cfg.dimension, radius), 0.0)};
    }
    return sample_dense(cfg.dimension, radius, cfg.distribution, seed, cfg.limits);
}

inline json order_table(const OrderStatistics& top)
{
    json rows = json::array();
    for (const auto& e : top) {
        rows.push_back({{"rank", e.rank}, {"site", site_json(e.site)}, {"value", e.value}});
    }
    return rows;
}

// sample --------------------------------------------------------------------

inline void cmd_sample(const ExperimentConfig& cfg, RunWriter& out, std::ostream& log)
{
    const int d = cfg.dimension;
    json summary{{"dimension", d}, {"radius", cfg.sample_radius}, {"seed", cfg.seed},
                 {"distribution", cfg.distribution.name()}, {"parameter", cfg.distribution.parameter()}};
    OrderStatistics top;
    std::size_t count = 0;
    if (cfg.sample_sparse) {
        const auto field = sample_exceedances(d, cfg.sample_radius, cfg.sample_threshold, cfg.seed, cfg.distribution,
                                              cfg.limits);
        count = field.size();
        top = order_stats(field, std::min(cfg.sample_top, field.size()));
        if (cfg.sample_binary) {
            auto os = out.open("exceedances.bin", true);
            io::write_binary(os, field);
        }
        else {
            auto os = out.open("exceedances.txt");
            io::write_text(os, field);
        }
        summary["mode"] = "sparse";
        summary["threshold"] = cfg.sample_threshold;
        summary["expected_count"] = static_cast<double>(ball_size(d, cfg.sample_radius)) *
                                    cfg.distribution.tail(cfg.sample_threshold);
    }
    else {
        const auto field = model_field(cfg, cfg.sample_radius, cfg.seed);
        count = field.size();
        top = order_stats(field, std::min(cfg.sample_top, field.size()));
        if (cfg.sample_binary) {
            auto os = out.open("field.bin", true);
            io::write_binary(os, field);
        }
        else {
            auto os = out.open("field.txt");
            io::write_text(os, field);
        }
        summary["mode"] = "dense";
    }
    summary["count"] = count;
    summary["max"] = top.empty() ? json(nullptr) : json(top.front().value);
    summary["order_statistics"] = order_table(top);
    out.write_json("summary.json", summary);

    log << "sites/records " << count << "\n";
    if (!top.empty()) {
        log << "max " << io::format_value(top.front().value) << " at " << top.front().site.to_string() << "\n";
    }
    log << "rank  value  site\n";
    for (const auto& e : top) {
        log << e.rank << "  " << io::format_value(e.value) << "  " << e.site.to_string() << "\n";
    }
}

// solve ---------------------------------------------------------------------

inline void cmd_solve(const ExperimentConfig& cfg, RunWriter& out, std::ostream& log)
{
    const int d = cfg.dimension;
    const double t_end = cfg.times.back();
    const auto radius = choose_box_radius(t_end, d, cfg.box);
    const auto field = model_field(cfg, radius, cfg.seed);
    if (cfg.oracle_check && field.size() > kOracleMaxSites) {
        throw ConfigError("solve.oracle_check", "the dense oracle needs a box of at most " +
                                                    std::to_string(kOracleMaxSites) + " sites");
    }
    IntegratorOptions opt;
    opt.tol = cfg.tolerance;
    const auto traj = integrate(field, t_end, cfg.times, opt);

    json summary{{"dimension", d},
                 {"radius", radius},
                 {"seed", cfg.seed},
                 {"zero_potential", cfg.zero_potential},
                 {"steps_accepted", traj.stats.accepted},
                 {"steps_rejected", traj.stats.rejected},
                 {"clamped", traj.stats.clamped},
                 {"boundary_mass_bound", traj.boundary_mass_bound}};
    auto lines = out.open("trajectory.jsonl");
    json times = json::array();
    double residual = 0.0;
    for (std::size_t k = 0; k < traj.profiles.size(); ++k) {
        const auto& p = traj.profiles[k];
        const auto arg = localization_site(p);
        json within = json::object();
        for (const double r : cfg.radii) {
            within[io::format_value(r)] = mass_within(p, arg, r);
        }
        lines << json{{"t", p.t}, {"logMass", p.log_mass}, {"argmax", site_json(arg)}, {"mass_within", within}}.dump()
              << "\n";

        json row{{"t", p.t}, {"L_t", growth_rate(p)}, {"argmax", site_json(arg)}};
        if (p.t > kMinScaleTime) {
            const double r_t = scale(p.t, d, cfg.distribution).r_t;
            const auto x1 = psi_top2(field, p.t).first.site;
            json conc = json::object();
            for (const double delta : cfg.deltas) {
                conc[io::format_value(delta)] = mass_within(p, x1, delta * r_t);
            }
            row["x1"] = site_json(x1);
            row["concentration"] = conc;
        }
        if (cfg.oracle_check) {
            const auto o = dense_exponential_oracle(field, p.t);
            double wnum = 0.0;
            double wden = 0.0;
            for (std::size_t i = 0; i < o.weights.size(); ++i) {
                wnum = std::max(wnum, std::abs(p.weights[i] - o.weights[i]));
                wden = std::max(wden, std::abs(o.weights[i]));
            }
            const double res = std::max(std::abs(p.log_mass - o.log_mass) / std::max(1.0, std::abs(o.log_mass)),
                                        wnum / wden);
            row["oracle_residual"] = res;
            residual = std::max(residual, res);
        }
        if (cfg.dump_weights) {
            const PotentialField w(d, radius, cfg.distribution, cfg.seed, p.weights);
            auto os = out.open("weights_" + std::to_string(k) + ".bin", true);
            io::write_binary(os, w, io::FieldKind::weights);
        }
        log << "t " << io::format_value(p.t) << "  L_t " << io::format_value(growth_rate(p)) << "  argmax "
            << arg.to_string() << "\n";
        times.push_back(row);
    }
    lines.close();
    summary["times"] = times;

    if (radius == 0) {
        // U(t) = exp(t (xi(0) - 2d)) on a single site.
        const double expected = field.value(std::size_t{0}) - 2.0 * d;
        double worst = 0.0;
        for (const auto& p : traj.profiles) {
            worst = std::max(worst, std::abs(growth_rate(p) - expected));
        }
        summary["closed_form"] = {{"expected_L_t", expected}, {"max_error", worst}};
        log << "closed form L_t = xi(0) - 2d = " << io::format_value(expected) << ", max error "
            << io::format_value(worst) << "\n";
        if (!(worst <= 1e-9)) {
            out.write_json("summary.json", summary);
            throw NumericalError("single-site closed form check failed");
        }
    }
    if (cfg.oracle_check) {
        summary["oracle_residual"] = residual;
        log << "oracle residual " << io::format_value(residual) << "\n";
        if (!(residual <= 1e-6)) {
            out.write_json("summary.json", summary);
            throw NumericalError("solver disagrees with the dense oracle");
        }
    }
    out.write_json("summary.json", summary);
}

// variational ---------------------------------------------------------------

inline json summary_json(const VariationalSummary& s)
{
    return {{"t", s.t},
            {"lower_index", num(s.lower_index)},
            {"upper_index", num(s.upper_index)},
            {"c", s.c},
            {"psi1", {{"site", site_json(s.psi1.site)}, {"value", num(s.psi1.value)}}},
            {"psi2", {{"site", site_json(s.psi2.site)}, {"value", num(s.psi2.value)}}},
            {"gap", num(s.gap)},
            {"search_radius", s.search_radius},
            {"sparse_threshold", s.sparse_threshold ? num(*s.sparse_threshold) : json(nullptr)},
            {"retries", s.retries}};
}

inline VariationalRequest variational_request(const ExperimentConfig& cfg)
{
    VariationalRequest req;
    req.c = cfg.c;
    req.limits = cfg.limits;
    req.psi_level = cfg.psi_level;
    req.lower_level = cfg.lower_level;
    req.upper_level = cfg.upper_level;
    req.max_retries = cfg.max_retries;
    return req;
}

inline void cmd_variational(const ExperimentConfig& cfg, RunWriter& out, std::ostream& log)
{
    const int d = cfg.dimension;
    if (cfg.variational_sampler == Sampler::sparse && cfg.distribution.family() != Family::exponential &&
        !(cfg.psi_level && cfg.lower_level && cfg.upper_level)) {
        throw ConfigError("variational.sampler", "outside the exponential family the sparse sampler needs "
                                                 "psi_level, lower_level and upper_level; or use sampler = dense");
    }
    const std::size_t n = cfg.variational_seeds;
    const std::size_t nt = cfg.times.size();
    std::vector<VariationalSummary> results(n * nt);
    std::vector<std::uint64_t> seeds(n);
    for (std::size_t i = 0; i < n; ++i) {
        seeds[i] = n == 1 ? cfg.seed : rng::derive_seed(cfg.seed, i);
    }
    parallel_for(n * nt, cfg.threads, [&](std::size_t job) {
        const auto i = job / nt;
        const double t = cfg.times[job % nt];
        if (cfg.variational_sampler == Sampler::dense) {
            const auto f = sample_dense(d, choose_box_radius(t, d, cfg.box), cfg.distribution, seeds[i], cfg.limits);
            results[job] = variational_summary(f, t, cfg.c);
            return;
        }
        VariationalRequest req = variational_request(cfg);
        if (cfg.box.kind == BoxPolicy::Kind::fixed) {
            req.search_radius = cfg.box.radius;
        }
        results[job] = sample_variational(d, t, seeds[i], req, cfg.distribution).summary;
    });

    auto csv = out.open("variational.csv");
    csv << "seed,t,N_lower,N_upper,psi1,psi2,gap";
    for (int k = 0; k < d; ++k) {
        csv << ",x1_" << k;
    }
    csv << ",searchRadius\n";
    auto jl = out.open("variational.jsonl");
    auto diag = out.open("diagnostics.csv");
    diag << "seed,t,lower_over_logloglog\n";
    for (std::size_t job = 0; job < results.size(); ++job) {
        const auto& s = results[job];
        const auto seed = seeds[job / nt];
        csv << seed << ',' << io::format_value(s.t) << ',' << io::format_value(s.lower_index) << ','
            << io::format_value(s.upper_index) << ',' << io::format_value(s.psi1.value) << ','
            << io::format_value(s.psi2.value) << ',' << io::format_value(s.gap);
        for (int k = 0; k < d; ++k) {
            csv << ',' << s.psi1.site[k];
        }
        csv << ',' << s.search_radius << '\n';
        auto j = summary_json(s);
        j["seed"] = seed;
        jl << j.dump() << '\n';
        if (s.t > kMinScaleTime) {
            // (N_lower - d log t) / log log log t, the almost-sure diagnostic.
            const double lll = std::log(std::log(std::log(s.t)));
            diag << seed << ',' << io::format_value(s.t) << ','
                 << io::format_value((s.lower_index - d * std::log(s.t)) / lll) << '\n';
        }
        log << "seed " << seed << " t " << io::format_value(s.t) << "  N_lower " << io::format_value(s.lower_index)
            << "  N_upper " << io::format_value(s.upper_index) << "  X1 " << s.psi1.site.to_string() << "  gap "
            << io::format_value(s.gap) << "\n";
    }
}

// ensemble ------------------------------------------------------------------

inline EnsembleConfig ensemble_config(const ExperimentConfig& cfg)
{
    EnsembleConfig e;
    e.master_seed = cfg.seed;
    e.seeds = cfg.seeds;
    e.threads = cfg.threads;
    e.sampler = cfg.sampler;
    e.box = cfg.box;
    e.tol = cfg.tolerance;
    e.request = variational_request(cfg);
    return e;
}

inline json record_json(const EnsembleRecord& r)
{
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) {
        metrics[k] = num(v);
    }
    return {{"statistic", r.statistic},
            {"reference", r.reference},
            {"law", r.law},
            {"t", r.t},
            {"d", r.d},
            {"sampler", to_string(r.sampler)},
            {"n", r.seeds.size()},
            {"ks", r.ks ? json{{"distance", r.ks->distance}, {"p_value", r.ks->p_value}} : json(nullptr)},
            {"metrics", metrics},
            {"note", r.note}};
}

inline void write_samples(std::ostream& os, const EnsembleRecord& r)
{
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        json j{{"statistic", r.statistic}, {"t", r.t}, {"index", i}, {"seed", r.seeds[i]}};
        if (!r.vectors.empty()) {
            j["coords"] = r.vectors[i];
        }
        if (i < r.samples.size()) {
            j["value"] = num(r.samples[i]);
        }
        if (i < r.thresholds.size()) {
            j["threshold"] = num(r.thresholds[i]);
        }
        os << j.dump() << '\n';
    }
}

inline void write_ecdf(RunWriter& out, const std::string& name, std::span<const double> x, const LimitLaw& law)
{
    auto os = out.open(name);
    os << "x,F_N,F\n";
    for (const auto& row : ecdf_table(x, law)) {
        os << io::format_value(row.x) << ',' << io::format_value(row.empirical) << ',' << io::format_value(row.model)
           << '\n';
    }
}

inline json row_json(const std::string& key, const EnsembleRecord& r, double value, double tolerance,
                      std::optional<bool> pass, const std::string& criterion)
{
    return {{"key", key},
            {"statistic", r.statistic},
            {"t", r.t},
            {"d", r.d},
            {"n", r.seeds.size()},
            {"value", num(value)},
            {"tolerance", tolerance},
            {"criterion", criterion},
            {"ks_distance", r.ks ? json(r.ks->distance) : json(nullptr)},
            {"p_value", r.ks ? json(r.ks->p_value) : json(nullptr)},
            {"pass", pass ? json(*pass) : json(nullptr)},
            {"note", r.note}};
}

inline void cmd_ensemble(const ExperimentConfig& cfg, RunWriter& out, std::ostream& log)
{
    if (cfg.distribution.family() != Family::exponential) {
        throw ConfigError("model.distribution", "ensembles are defined for the exponential potential");
    }
    const int d = cfg.dimension;
    const auto ecfg = ensemble_config(cfg);
    std::vector<EnsembleRecord> records;
    json rows = json::array();

    switch (cfg.kind) {
    case EnsembleKind::gap:
        for (const double t : cfg.times) {
            records.push_back(gap_ensemble(d, t, ecfg));
            const auto& r = records.back();
            rows.push_back(row_json("psi_gap_exponential", r, r.ks->distance, cfg.ks_tolerance,
                                    r.ks->distance <= cfg.ks_tolerance, "ks_distance <= tolerance"));
        }
        break;
    case EnsembleKind::location:
        for (const double t : cfg.times) {
            records.push_back(location_ensemble(d, t, ecfg));
            const auto& r = records.back();
            const double pos = r.metrics.at("positive_fraction");
            bool ok = r.ks->distance <= cfg.ks_tolerance;
            rows.push_back(row_json("psi_location_laplace", r, r.ks->distance, cfg.ks_tolerance, ok,
                                    "max coordinate ks_distance <= tolerance"));
            rows.push_back(row_json("psi_location_sign_balance", r, pos, cfg.sign_tolerance,
                                    std::abs(pos - 0.5) <= cfg.sign_tolerance, "|positive_fraction - 1/2| <= tolerance"));
            if (d >= 2) {
                const double rho = r.metrics.at("correlation01");
                rows.push_back(row_json("psi_location_correlation", r, rho, cfg.correlation_tolerance,
                                        std::abs(rho) <= cfg.correlation_tolerance, "|correlation| <= tolerance"));
            }
        }
        break;
    case EnsembleKind::gumbel:
        for (std::size_t k = 0; k < cfg.times.size(); ++k) {
            records.push_back(gumbel_ensemble(d, cfg.times[k], cfg.proxy, ecfg));
            const auto& r = records.back();
            std::optional<bool> pass;
            if (k > 0) {
                pass = r.ks->distance <= records[k - 1].ks->distance;
            }
            rows.push_back(row_json("growth_rate_gumbel", r, r.ks->distance, 0.0, pass,
                                    "ks_distance nonincreasing in t (qualitative)"));
            std::optional<bool> pass_c;
            if (k > 0) {
                pass_c = r.metrics.at("ks_consistent") <= records[k - 1].metrics.at("ks_consistent");
            }
            rows.push_back(row_json("growth_rate_gumbel_consistent", r, r.metrics.at("ks_consistent"), 0.0, pass_c,
                                    "ks_distance to the -2d location law nonincreasing in t (qualitative)"));
        }
        break;
    case EnsembleKind::concentration: {
        records = concentration_ensemble(d, cfg.times, cfg.delta, ecfg);
        for (std::size_t k = 0; k < records.size(); ++k) {
            const auto& r = records[k];
            const double med = r.metrics.at("median");
            bool ok = k == 0 || med >= records[k - 1].metrics.at("median");
            std::string crit = "median nondecreasing in t";
            if (k + 1 == records.size()) {
                ok = ok && med >= cfg.concentration_min;
                crit += " and >= tolerance at the last t";
            }
            rows.push_back(row_json("mass_concentration", r, med, cfg.concentration_min, ok, crit));
        }
        break;
    }
    case EnsembleKind::disconnected: {
        records.push_back(disconnected_check(d, cfg.n, cfg.rho, ecfg));
        const auto& r = records.back();
        const double f = r.metrics.at("frequency");
        rows.push_back(row_json("top_sites_disconnected", r, f, cfg.frequency_min, f >= cfg.frequency_min,
                                "frequency >= tolerance"));
        break;
    }
    }

    auto samples = out.open("samples.jsonl");
    for (const auto& r : records) {
        write_samples(samples, r);
    }
    samples.close();
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        const auto stem = "ecdf_t" + std::to_string(k);
        if (cfg.kind == EnsembleKind::gap) {
            write_ecdf(out, stem + ".csv", r.samples, LimitLaw::std_exponential());
        }
        else if (cfg.kind == EnsembleKind::location) {
            for (int c = 0; c < d; ++c) {
                std::vector<double> x;
                for (const auto& v : r.vectors) {
                    x.push_back(v[c]);
                }
                write_ecdf(out, stem + "_coord" + std::to_string(c) + ".csv", x, LimitLaw::laplace_coordinate());
            }
        }
        else if (cfg.kind == EnsembleKind::gumbel) {
            write_ecdf(out, stem + ".csv", r.samples, LimitLaw::gumbel_pam(d));
            write_ecdf(out, stem + "_consistent.csv", r.samples, LimitLaw::gumbel_pam_consistent(d));
        }
    }
    json recs = json::array();
    for (const auto& r : records) {
        recs.push_back(record_json(r));
    }
    out.write_json("summary.json", {{"kind", detail::enum_name(cfg.kind, detail::kKinds)}, {"rows", rows},
                                    {"records", recs}});
    for (const auto& row : rows) {
        log << row["key"].get<std::string>() << "  t " << row["t"].dump() << "  value " << row["value"].dump()
            << "  pass " << row["pass"].dump() << "\n";
    }
}

// report --------------------------------------------------------------------

struct ReportResult {
    json rows = json::array();
};

inline ReportResult collect_report(const fs::path& run_dir)
{
    if (!fs::is_directory(run_dir)) {
        throw ConfigError("report", "run directory " + run_dir.string() + " does not exist");
    }
    std::vector<fs::path> summaries;
    for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
        if (e.is_regular_file() && e.path().filename() == "summary.json") {
            summaries.push_back(e.path());
        }
    }
    std::sort(summaries.begin(), summaries.end());
    ReportResult rep;
    for (const auto& p : summaries) {
        std::ifstream is(p);
        json j = json::parse(is, nullptr, false);
        if (j.is_discarded() || !j.contains("rows")) {
            continue;
        }
        for (auto row : j["rows"]) {
            row["source"] = fs::relative(p.parent_path(), run_dir).generic_string();
            rep.rows.push_back(row);
        }
    }
    return rep;
}

inline void cmd_report(const fs::path& run_dir, RunWriter& out, std::ostream& log)
{
    const auto rep = collect_report(run_dir);
    std::size_t passed = 0;
    std::size_t failed = 0;
    auto csv = out.open("report.csv");
    csv << "key,source,statistic,t,d,n,value,tolerance,pass,criterion\n";
    for (const auto& r : rep.rows) {
        passed += r["pass"].is_boolean() && r["pass"].get<bool>();
        failed += r["pass"].is_boolean() && !r["pass"].get<bool>();
        csv << r["key"].get<std::string>() << ',' << r["source"].get<std::string>() << ','
            << r["statistic"].get<std::string>() << ',' << r["t"].dump() << ',' << r["d"].dump() << ','
            << r["n"].dump() << ',' << r["value"].dump() << ',' << r["tolerance"].dump() << ',' << r["pass"].dump()
            << ",\"" << r["criterion"].get<std::string>() << "\"\n";
        log << r["key"].get<std::string>() << "  " << r["source"].get<std::string>() << "  t " << r["t"].dump()
            << "  value " << r["value"].dump() << "  pass " << r["pass"].dump() << "\n";
    }
    csv.close();
    out.write_json("report.json",
                   {{"rows", rep.rows}, {"count", rep.rows.size()}, {"passed", passed}, {"failed", failed}});
    log << rep.rows.size() << " rows, " << passed << " passed, " << failed << " failed\n";
}

} // namespace pam::experiment
