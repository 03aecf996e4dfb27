#include <iostream>
#include <utility>

#include <CLI11.hpp>

#include "fracmfg/cli.hpp"

using namespace fracmfg;

int main(int argc, char** argv) {
    CLI::App app{"Time-fractional mean field game solver"};
    app.footer("Config keys and defaults:\n" + cli::documented_defaults() +
               "\nEnvironment: FRACMFG_LOG={error,warn,info,debug}\n"
               "Exit codes: 0 ok, 2 completed with warnings, 1 error");
    app.require_subcommand(0, 1);

    std::string config_path, out_dir, format;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "sectioned key = value file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "RNG seed (run.seed)");
    app.add_option("--out", out_dir, "output directory (run.out)");
    app.add_option("--threads", threads, "worker thread cap (run.threads)")->check(CLI::PositiveNumber);
    app.add_option("--format", format, "output format (run.format)")->check(CLI::IsMember({"csv", "bin", "both"}));
    app.add_option("--set", overrides, "override a key, section.key=value");
    app.set_version_flag("--version", cli::version());
    app.fallthrough();

    bool against_mc = false;
    std::string command;
    const std::pair<const char*, const char*> subs[] = {
        {"simulate", "Monte Carlo ensemble of the time-changed diffusion"},
        {"solve-fp", "fractional Fokker-Planck solve with a constant drift"},
        {"solve-hjb", "backward HJB solve against the coupling of m0"},
        {"solve-mfg", "coupled system by damped Picard iteration"},
        {"validate", "operator and special-function battery as CSV"},
        {"compare", "FP density against a Monte Carlo histogram (needs --against-mc)"},
    };
    for (const auto& [name, help] : subs) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([&command, name] { command = name; });
        if (std::string(name) == "compare")
            sub->add_flag("--against-mc", against_mc, "Monte Carlo reference for the FP solve");
    }
    auto* hidden = app.add_subcommand("validate-fracops");
    hidden->group("");
    hidden->callback([&command] { command = "validate-fracops"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    cli::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = cli::parse_config_file(config_path);
        if (!command.empty()) cfg.command = cli::parse_command(command);
        if (against_mc) cfg.against_mc = true;
        if (app.count("--seed")) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out = out_dir;
        if (threads) cfg.threads = threads;
        if (!format.empty()) cfg.format = cli::parse_format(format);
        for (const auto& o : overrides) {
            auto eq = o.find('=');
            if (eq == std::string::npos) throw cli::ConfigError("--set expects section.key=value, got '" + o + "'");
            cli::set_value(cfg, o.substr(0, eq), o.substr(eq + 1));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return cli::run(cfg, std::cout, std::cerr);
}
