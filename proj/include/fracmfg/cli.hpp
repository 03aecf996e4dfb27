#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracmfg/errors.hpp"

namespace fracmfg::cli {

enum class Command { simulate, solve_fp, solve_hjb, solve_mfg, validate, compare, validate_fracops };
enum class OutputFormat { csv, bin, both };

/// Parse or constraint failure; the message carries the line and key.
struct ConfigError : ParameterError {
    using ParameterError::ParameterError;
};

struct RunConfig {
    Command command = Command::solve_mfg;
    bool against_mc = false;

    // [problem]
    double beta = 0.7;
    double nu = 0.05;
    double T = 1.0;
    std::uint64_t n_steps = 100;
    std::uint64_t n_cells = 128;
    double x_min = 0.0;
    double x_max = 1.0;

    // [hamiltonian]
    std::string hamiltonian = "truncated_quadratic";  // or zero
    double u_max = 5.0;

    // [coupling]
    std::string coupling = "smoothed_local";  // or fractional_integral_local
    double kappa = 0.5;
    double epsilon = 0.0;

    // [costs]
    double terminal_amplitude = 0.2;  // g = a cos(2 pi (x - x_min) / length)
    std::string terminal_file;        // x,value CSV; overrides the amplitude
    double initial_center = 0.3;
    double initial_width = 0.08;
    std::string initial_file;  // x,density CSV

    // [fp]
    double fp_drift = 0.0;
    bool clip_negative = false;

    // [mfg]
    double damping = 0.5;
    double tolerance = 1e-6;
    std::uint64_t max_iters = 60;

    // [simulate]
    std::uint64_t n_paths = 10000;
    double x0 = 0.5;
    double sim_drift = 0.0;

    // [run]
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    unsigned threads = 1;
    OutputFormat format = OutputFormat::csv;
};

Command parse_command(const std::string& name);
std::string command_name(Command c);
OutputFormat parse_format(const std::string& name);

/// Sectioned key = value text. Unknown sections or keys are rejected.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
RunConfig parse_config_file(const std::filesystem::path& path);
/// Apply a "section.key" = value override on top of a parsed config.
void set_value(RunConfig& cfg, const std::string& dotted_key, const std::string& value);
/// Check every module precondition; throws ConfigError naming the failed one.
void validate(const RunConfig& cfg);

std::vector<std::string> known_keys();
/// Closest known key by edit distance.
std::string nearest_key(const std::string& key);
/// One line per key with its default, for --help.
std::string documented_defaults();

nlohmann::json to_json(const RunConfig& cfg);

struct BatteryRow {
    std::string check;
    std::string params;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Closed-form checks behind `validate`: power rules with convergence rates,
/// stencil adjointness, Mittag-Leffler identities and exact W1 values.
std::vector<BatteryRow> validation_battery(bool fracops_only = false);

/// Execute the configured pipeline. 0 = converged and all monitors passed,
/// 2 = completed with warnings, 1 = error (diagnostics on `err` and in the manifest).
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace fracmfg::cli
