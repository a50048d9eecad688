// Command-line front end.
//
//   noiselock run <preset|config-file> [--seed N] [--out DIR] [--scale F]
//   noiselock selftest
//
// Exit status: 0 on success, 1 when a run's verdicts fail (including a
// failed lock where one is required) or a simulation invariant trips, 2 on
// configuration errors (unknown preset, unreadable or invalid config,
// out-of-range values, bad usage).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "noiselock/noiselock.hpp"

namespace fs = std::filesystem;
using namespace noiselock;

namespace {

int run_command(const std::string& target, bool seed_set, std::uint64_t seed, bool scale_set,
                double scale, std::string out_dir) {
    std::string name;
    config::ConfigDoc doc;
    if (fs::exists(target) && fs::is_regular_file(target)) {
        doc = config::parse_config_file(target);
        name = fs::path(target).stem().string();
    } else if (const char* text = presets::find(target)) {
        doc = config::parse_config_text(text, "preset:" + target);
        name = target;
    } else {
        std::string known;
        for (const auto& n : presets::names()) known += "\n  " + n;
        throw config::ConfigError("'" + target +
                                  "' is neither a readable config file nor a preset; presets:" +
                                  known);
    }
    if (seed_set) doc.seed = seed;
    if (scale_set) doc.scale = scale;

    const config::Resolved cfg = config::resolve(doc, name);
    const fs::path out = out_dir.empty() ? fs::path("out") / name : fs::path(out_dir);
    const auto outcome = experiments::run_experiment(cfg, out);

    std::cout << "run " << name << " (" << config::experiment_kind_name(cfg.kind)
              << "), seed " << cfg.seed << ", scale " << io::format_double(cfg.scale)
              << ", config " << cfg.canonical.size() << " bytes\n";
    for (const auto& v : outcome.verdicts) {
        std::cout << "  " << (v.pass ? "PASS" : "FAIL") << "  " << v.name << " = "
                  << io::format_double(v.value) << "  (require " << v.cmp << " "
                  << io::format_double(v.limit) << ")\n";
    }
    std::cout << "artifacts: " << out.string() << "\n";
    std::cout << "overall: " << (outcome.pass ? "PASS" : "FAIL") << "\n";
    return outcome.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noiselock: deterministic simulator of noise-locked interferometer phase "
                 "control"};
    app.require_subcommand(1);

    std::string target;
    std::string out_dir;
    std::uint64_t seed = 0;
    double scale = 0.0;

    auto* run = app.add_subcommand("run", "Run an experiment from a preset name or a config file");
    run->add_option("target", target, "Preset name or path to a config file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the random seed");
    auto* scale_opt =
        run->add_option("--scale", scale, "Override the frequency scale factor");
    run->add_option("--out", out_dir, "Output directory (default: out/<name>)");

    auto* self = app.add_subcommand("selftest", "Run built-in self-consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad usage is a configuration error
    }

    try {
        if (self->parsed()) return selftest::run(std::cout) ? 0 : 1;
        return run_command(target, seed_opt->count() > 0, seed, scale_opt->count() > 0, scale,
                           out_dir);
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
