// SPDX-License-Identifier: Apache-2.0
// pam: batch front-end for sampling, solving and the limit-law ensembles.
//
// Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
// 4 numerical failure (integration, closed-form check, sparse guard).

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pam/config.hpp"
#include "pam/experiment.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kResource = 3, kNumerical = 4 };

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string out;
    std::string threads;
    std::string kind;
    std::string run_dir;
};

pam::ExperimentConfig load(const Options& o)
{
    pam::ConfigValues values;
    if (!o.config_path.empty()) {
        std::ifstream is(o.config_path);
        if (!is) {
            throw pam::ConfigError("--config", "cannot open " + o.config_path);
        }
        values = pam::read_ini(is);
    }
    for (const auto& ov : o.overrides) {
        pam::apply_override(values, ov);
    }
    if (!o.seed.empty()) {
        pam::apply_override(values, "run.seed=" + o.seed);
    }
    if (!o.out.empty()) {
        pam::apply_override(values, "run.output=" + o.out);
    }
    if (!o.threads.empty()) {
        pam::apply_override(values, "run.threads=" + o.threads);
    }
    if (!o.kind.empty()) {
        pam::apply_override(values, "ensemble.kind=" + o.kind);
    }
    return pam::build_config(values);
}

int run(const std::string& command, const Options& o)
{
    namespace ex = pam::experiment;
    const auto cfg = load(o);
    if (command == "report") {
        const auto dir = std::filesystem::path(o.run_dir);
        const auto out = o.out.empty() ? dir / "report" : std::filesystem::path(o.out);
        if (!std::filesystem::is_directory(dir)) {
            throw pam::ConfigError("report", "run directory " + dir.string() + " does not exist");
        }
        ex::RunWriter w(out, command, cfg);
        ex::cmd_report(dir, w, std::cout);
        w.finish();
        return kOk;
    }
    ex::RunWriter w(ex::resolve_output(command, cfg), command, cfg);
    if (command == "sample") {
        ex::cmd_sample(cfg, w, std::cout);
    }
    else if (command == "solve") {
        ex::cmd_solve(cfg, w, std::cout);
    }
    else if (command == "variational") {
        ex::cmd_variational(cfg, w, std::cout);
    }
    else {
        ex::cmd_ensemble(cfg, w, std::cout);
    }
    w.finish();
    std::cout << "output " << w.dir().string() << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parabolic Anderson model experiments"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "INI experiment config");
        sub->add_option("--seed", o.seed, "master seed (run.seed)");
        sub->add_option("--out", o.out, "output directory (run.output)");
        sub->add_option("--threads", o.threads, "worker threads (run.threads)");
        sub->add_option("--override", o.overrides, "section.key=value, repeatable");
    };
    auto* sample = app.add_subcommand("sample", "materialise a dense or sparse potential field");
    auto* solve = app.add_subcommand("solve", "integrate the PAM over the configured time grid");
    auto* variational = app.add_subcommand("variational", "variational indices and psi maximisers");
    auto* ensemble = app.add_subcommand("ensemble", "Monte-Carlo ensemble of a limit statistic");
    auto* report = app.add_subcommand("report", "aggregate ensemble summaries under a run directory");
    for (auto* sub : {sample, solve, variational, ensemble, report}) {
        common(sub);
    }
    ensemble->add_option("kind", o.kind, "gap|location|gumbel|concentration|disconnected");
    report->add_option("run_dir", o.run_dir, "directory to scan")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, o);
    }
    catch (const pam::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    catch (const pam::DomainError& e) {
        std::cerr << "error: invalid parameter: " << e.what() << "\n";
        return kConfig;
    }
    catch (const pam::ResourceCapError& e) {
        std::cerr << "error: resource cap: " << e.what() << "\n";
        return kResource;
    }
    catch (const pam::NumericalError& e) {
        std::cerr << "error: numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    catch (const pam::GuardFailure& e) {
        std::cerr << "error: sparse guard failure: " << e.what() << "\n";
        return kNumerical;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
