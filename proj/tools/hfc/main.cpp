// hfc: symbol analysis, probe suites and report merging.
//
// Exit codes: 0 all checks pass, 1 some check failed, 2 bad arguments or configuration.

#include "hfc/suites.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace hfc;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

void print_summary(const SuiteReport& s) {
    std::fprintf(stderr, "%-14s %-6s %9s  %s\n", "probe", "result", "seconds", "failed checks");
    for (const auto& p : s.probes) {
        std::string failed;
        for (const auto& c : p.checks)
            if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
        if (p.error_kind) failed = *p.error_kind + ": " + *p.error_message;
        std::fprintf(stderr, "%-14s %-6s %9.2f  %s\n", p.probe.c_str(), p.pass() ? "PASS" : "FAIL", p.seconds,
                     failed.c_str());
    }
    std::fprintf(stderr, "suite %s: %s\n", s.suite.c_str(), s.pass() ? "PASS" : "FAIL");
}

void write_plots(const SuiteReport& s, const fs::path& dir) {
    for (const auto& p : s.probes)
        for (const auto& ser : p.series) {
            const std::string stem = (dir / (p.probe + "_" + ser.name)).string();
            write_text(stem + ".csv", series_csv(ser));
            write_text(stem + ".svg", series_svg(ser));
        }
}

int cmd_suite(const std::string& name, const std::string& config, const std::string& out,
              std::optional<std::uint64_t> seed, bool plots) {
    const SuiteReport s = run_suite(name, config, seed, thread_count());
    if (out.empty()) {
        std::cout << dump(to_json(s));
        if (plots) write_plots(s, fs::current_path());
    } else {
        fs::create_directories(out);
        for (const auto& p : s.probes) {
            ojson j{{"schema", "hfc.probe/1"}, {"suite", s.suite}, {"inputs_digest", s.digest}};
            j.update(to_json(p));
            write_text((fs::path(out) / (p.probe + ".json")).string(), dump(j));
        }
        if (plots) write_plots(s, out);
    }
    print_summary(s);
    return s.pass() ? kExitPass : kExitFail;
}

int cmd_analyze(const std::string& file, int grid, int samples, std::uint64_t seed, const std::string& out) {
    if (!fs::exists(file)) throw ConfigError("no such file: " + file);
    ProbeReport r;
    try {
        r = analyze_symbol(file, {samples, grid, seed});
    } catch (const Error& e) {
        // anything thrown while reading or validating the symbol is a malformed input
        throw ConfigError(e.what());
    }
    ojson j{{"schema", "hfc.probe/1"}};
    j.update(to_json(r));
    if (out.empty())
        std::cout << dump(j);
    else
        write_text(out, dump(j));
    std::fprintf(stderr, "%s: %s\n", file.c_str(), r.pass() ? "PASS" : "FAIL");
    return r.pass() ? kExitPass : kExitFail;
}

int cmd_merge(const std::string& dir, const std::string& out) {
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    ojson reports = ojson::array();
    bool pass = true;
    for (const auto& f : files) {
        ojson j;
        try {
            j = ojson::parse(read_text(f.string()));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(f.string() + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("pass") || !j["pass"].is_boolean()) continue;
        if (!out.empty() && fs::absolute(f) == fs::absolute(fs::path(out))) continue;
        pass = pass && j["pass"].get<bool>();
        reports.push_back(j);
    }
    if (reports.empty()) throw ConfigError("no reports found in " + dir);
    const ojson merged{{"schema", "hfc.merged/1"}, {"count", reports.size()}, {"reports", reports}, {"pass", pass}};
    if (out.empty())
        std::cout << dump(merged);
    else
        write_text(out, dump(merged));
    std::fprintf(stderr, "merged %zu reports: %s\n", reports.size(), pass ? "PASS" : "FAIL");
    return pass ? kExitPass : kExitFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hodge-Dirac functional calculus probes"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze-symbol", "check a symbol or Hodge-Dirac pair file");
    std::string sym_file, out_file;
    int grid = 0, samples = 2048;
    std::uint64_t seed = 0;
    analyze->add_option("file", sym_file, "symbol JSON")->required();
    analyze->add_option("--grid", grid, "also check lattice directions of a g^n grid")->check(CLI::Range(2, 4096));
    analyze->add_option("--sphere-samples", samples, "sphere sample size")->check(CLI::Range(1, 1 << 20));
    analyze->add_option("--seed", seed, "seed for n > 3 sphere samples");
    analyze->add_option("--out", out_file, "write the report here instead of stdout");

    auto* suite = app.add_subcommand("suite", "run a named probe suite");
    std::string suite_name, config, out_dir;
    std::uint64_t suite_seed = 0;
    bool plots = false;
    suite->add_option("name", suite_name, "smoke, hodge-const, hodge-var, perturb, quadest, reproducing, schur, block, holomorphy or lipschitz")
        ->required();
    suite->add_option("--config", config, "probe configuration JSON")->required();
    suite->add_option("--out", out_dir, "directory for per-probe reports");
    auto* seed_opt = suite->add_option("--seed", suite_seed, "override the config seed");
    suite->add_flag("--plots", plots, "write CSV and SVG for each series");

    auto* report = app.add_subcommand("report", "merge per-probe reports");
    std::string merge_dir, merge_out;
    report->add_option("--merge", merge_dir, "directory of reports")->required();
    report->add_option("--out", merge_out, "merged output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitConfig;
    }

    try {
        if (*analyze) return cmd_analyze(sym_file, grid, samples, seed, out_file);
        if (*suite)
            return cmd_suite(suite_name, config, out_dir,
                             seed_opt->count() ? std::optional<std::uint64_t>(suite_seed) : std::nullopt, plots);
        if (*report) return cmd_merge(merge_dir, merge_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s\n", kind_name(e.kind()), e.what());
        return kExitFail;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
