#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include "fracmfg/cli.hpp"
#include "fracmfg/fracops.hpp"
#include "fracmfg/grid.hpp"
#include "fracmfg/io.hpp"

namespace fracmfg::cli {

namespace {

using Member = std::variant<double RunConfig::*, std::uint64_t RunConfig::*,
                            unsigned RunConfig::*, bool RunConfig::*, std::string RunConfig::*>;

struct Entry {
    std::string key;  // section.name
    std::string doc;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
    std::function<nlohmann::json(const RunConfig&)> json;  // typed value; empty means the string form
};

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("expected a number, got '" + s + "'");
    return v;
}

template <class U>
U to_unsigned(const std::string& s) {
    U v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("expected a nonnegative integer, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("expected true or false, got '" + s + "'");
}

Entry member(std::string key, std::string doc, Member m) {
    Entry e{std::move(key), std::move(doc), {}, {}, {}};
    e.set = [m](RunConfig& c, const std::string& s) {
        std::visit(
            [&](auto ptr) {
                using T = std::remove_reference_t<decltype(c.*ptr)>;
                if constexpr (std::is_same_v<T, double>) c.*ptr = to_double(s);
                else if constexpr (std::is_same_v<T, bool>) c.*ptr = to_bool(s);
                else if constexpr (std::is_same_v<T, std::string>) c.*ptr = s;
                else c.*ptr = to_unsigned<T>(s);
            },
            m);
    };
    e.get = [m](const RunConfig& c) {
        return std::visit(
            [&](auto ptr) -> std::string {
                using T = std::remove_cv_t<std::remove_reference_t<decltype(c.*ptr)>>;
                if constexpr (std::is_same_v<T, double>) return io::format_double(c.*ptr);
                else if constexpr (std::is_same_v<T, bool>) return c.*ptr ? "true" : "false";
                else if constexpr (std::is_same_v<T, std::string>) return c.*ptr;
                else return std::to_string(c.*ptr);
            },
            m);
    };
    e.json = [m](const RunConfig& c) { return std::visit([&](auto ptr) { return nlohmann::json(c.*ptr); }, m); };
    return e;
}

const std::vector<Entry>& schema() {
    static const std::vector<Entry> s = [] {
        std::vector<Entry> v{
            member("problem.beta", "fractional order in (0,1]", &RunConfig::beta),
            member("problem.nu", "diffusion coefficient", &RunConfig::nu),
            member("problem.T", "horizon", &RunConfig::T),
            member("problem.n_steps", "time steps", &RunConfig::n_steps),
            member("problem.n_cells", "spatial cells (periodic)", &RunConfig::n_cells),
            member("problem.x_min", "left end of the periodic domain", &RunConfig::x_min),
            member("problem.x_max", "right end of the periodic domain", &RunConfig::x_max),
            member("hamiltonian.kind", "truncated_quadratic or zero", &RunConfig::hamiltonian),
            member("hamiltonian.u_max", "control bound", &RunConfig::u_max),
            member("coupling.kind", "smoothed_local or fractional_integral_local", &RunConfig::coupling),
            member("coupling.kappa", "coupling strength", &RunConfig::kappa),
            member("coupling.epsilon", "mollifier width, 0 means 4 dx", &RunConfig::epsilon),
            member("costs.terminal_amplitude", "g = a cos(2 pi x / length)", &RunConfig::terminal_amplitude),
            member("costs.terminal_file", "x,value CSV for g", &RunConfig::terminal_file),
            member("costs.initial_center", "centre of the Gaussian m0", &RunConfig::initial_center),
            member("costs.initial_width", "width of the Gaussian m0", &RunConfig::initial_width),
            member("costs.initial_file", "x,density CSV for m0", &RunConfig::initial_file),
            member("fp.drift", "constant agent velocity for solve-fp and compare", &RunConfig::fp_drift),
            member("fp.clip_negative", "clip and renormalize negative densities", &RunConfig::clip_negative),
            member("mfg.damping", "Picard damping in (0,1]", &RunConfig::damping),
            member("mfg.tolerance", "stop when sup_t W1 gap is below this", &RunConfig::tolerance),
            member("mfg.max_iters", "Picard iteration cap", &RunConfig::max_iters),
            member("simulate.n_paths", "Monte Carlo paths", &RunConfig::n_paths),
            member("simulate.x0", "start point", &RunConfig::x0),
            member("simulate.drift", "constant drift in operational time", &RunConfig::sim_drift),
            member("run.seed", "RNG seed", &RunConfig::seed),
            member("run.threads", "worker threads", &RunConfig::threads),
        };
        v.push_back({"run.command", "simulate, solve-fp, solve-hjb, solve-mfg, validate or compare",
                     [](RunConfig& c, const std::string& s) { c.command = parse_command(s); },
                     [](const RunConfig& c) { return command_name(c.command); }});
        v.push_back({"run.against_mc", "compare: Monte Carlo reference",
                     [](RunConfig& c, const std::string& s) { c.against_mc = to_bool(s); },
                     [](const RunConfig& c) { return std::string(c.against_mc ? "true" : "false"); }});
        v.push_back({"run.out", "output directory",
                     [](RunConfig& c, const std::string& s) { c.out = s; },
                     [](const RunConfig& c) { return c.out.string(); }});
        v.push_back({"run.format", "csv, bin or both",
                     [](RunConfig& c, const std::string& s) { c.format = parse_format(s); },
                     [](const RunConfig& c) {
                         return std::string(c.format == OutputFormat::csv   ? "csv"
                                            : c.format == OutputFormat::bin ? "bin"
                                                                            : "both");
                     }});
        return v;
    }();
    return s;
}

const Entry* find_entry(const std::string& key) {
    for (const auto& e : schema())
        if (e.key == key) return &e;
    return nullptr;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string unknown_key_message(const std::string& key) {
    return "unknown key '" + key + "'; did you mean '" + nearest_key(key) + "'?";
}

}  // namespace

Command parse_command(const std::string& name) {
    if (name == "simulate") return Command::simulate;
    if (name == "solve-fp") return Command::solve_fp;
    if (name == "solve-hjb") return Command::solve_hjb;
    if (name == "solve-mfg") return Command::solve_mfg;
    if (name == "validate") return Command::validate;
    if (name == "compare") return Command::compare;
    if (name == "validate-fracops") return Command::validate_fracops;
    throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::solve_fp: return "solve-fp";
        case Command::solve_hjb: return "solve-hjb";
        case Command::solve_mfg: return "solve-mfg";
        case Command::validate: return "validate";
        case Command::compare: return "compare";
        case Command::validate_fracops: return "validate-fracops";
    }
    return "?";
}

OutputFormat parse_format(const std::string& name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "bin") return OutputFormat::bin;
    if (name == "both") return OutputFormat::both;
    throw ConfigError("format must be csv, bin or both, got '" + name + "'");
}

std::vector<std::string> known_keys() {
    std::vector<std::string> k;
    for (const auto& e : schema()) k.push_back(e.key);
    return k;
}

std::string nearest_key(const std::string& key) {
    // compare against the bare name too, so "betta" finds "problem.beta"
    std::string best;
    std::size_t best_d = std::string::npos;
    for (const auto& e : schema()) {
        auto bare = e.key.substr(e.key.find('.') + 1);
        auto key_bare = key.find('.') == std::string::npos ? key : key.substr(key.find('.') + 1);
        std::size_t d = std::min(edit_distance(key, e.key), edit_distance(key_bare, bare));
        if (d < best_d) {
            best_d = d;
            best = e.key;
        }
    }
    return best;
}

std::string documented_defaults() {
    RunConfig def;
    std::ostringstream os;
    for (const auto& e : schema()) os << "  " << e.key << " = " << e.get(def) << "    # " << e.doc << "\n";
    return os.str();
}

void set_value(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
    const Entry* e = find_entry(dotted_key);
    if (!e) throw ConfigError(unknown_key_message(dotted_key));
    try {
        e->set(cfg, value);
    } catch (const ConfigError& ex) {
        throw ConfigError("key '" + dotted_key + "': " + ex.what());
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) -> ConfigError {
        return ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find_first_of("#;");
        std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw fail("unterminated section header");
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            bool known = false;
            for (const auto& e : schema()) known = known || e.key.rfind(section + ".", 0) == 0;
            if (!known) throw fail("unknown section [" + section + "]");
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) throw fail("expected key = value");
        std::string key = trim(std::string_view(s).substr(0, eq));
        std::string value = trim(std::string_view(s).substr(eq + 1));
        if (section.empty()) throw fail("key '" + key + "' outside a section");
        std::string dotted = section + "." + key;
        try {
            set_value(cfg, dotted, value);
        } catch (const ConfigError& ex) {
            throw fail(ex.what());
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

void validate(const RunConfig& c) {
    auto check = [](const std::string& what, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw ConfigError(what + ": " + e.what());
        }
    };
    check("problem.beta", [&] { FractionalOrder o(c.beta); });
    check("problem.nu", [&] { require(c.nu > 0.0 && std::isfinite(c.nu), "nu must be positive"); });
    check("problem.T / problem.n_steps", [&] { TimeGrid g(c.T, c.n_steps); });
    check("problem.n_cells / domain", [&] { SpaceGrid g(c.x_min, c.x_max, c.n_cells); });
    check("hamiltonian.kind", [&] {
        require(c.hamiltonian == "truncated_quadratic" || c.hamiltonian == "zero",
                "must be truncated_quadratic or zero");
    });
    check("hamiltonian.u_max", [&] { require(c.u_max > 0.0, "u_max must be positive"); });
    check("coupling.kind", [&] {
        require(c.coupling == "smoothed_local" || c.coupling == "fractional_integral_local",
                "must be smoothed_local or fractional_integral_local");
    });
    check("coupling.kappa", [&] { require(c.kappa >= 0.0, "kappa must be nonnegative"); });
    check("coupling.epsilon", [&] { require(c.epsilon >= 0.0, "epsilon must be nonnegative"); });
    check("costs.initial_width", [&] { require(c.initial_width > 0.0, "width must be positive"); });
    check("mfg.damping", [&] { require(c.damping > 0.0 && c.damping <= 1.0, "damping must lie in (0,1]"); });
    check("mfg.tolerance", [&] { require(c.tolerance > 0.0, "tolerance must be positive"); });
    check("mfg.max_iters", [&] { require(c.max_iters >= 1, "max_iters must be positive"); });
    check("simulate.n_paths", [&] { require(c.n_paths >= 2, "need at least 2 paths"); });
    check("run.threads", [&] { require(c.threads >= 1, "threads must be positive"); });
    check("run.against_mc", [&] {
        require(!c.against_mc || c.command == Command::compare, "against_mc only applies to compare");
    });
}

nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& e : schema()) {
        auto dot = e.key.find('.');
        j[e.key.substr(0, dot)][e.key.substr(dot + 1)] = e.json ? e.json(cfg) : nlohmann::json(e.get(cfg));
    }
    return j;
}

}  // namespace fracmfg::cli
