#include "fracmfg/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fracmfg/errors.hpp"

namespace fracmfg::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr char kFieldMagic[9] = {'F', 'M', 'F', 'G', '-', 'F', 'L', 'D', '1'};
constexpr char kEnsMagic[9] = {'F', 'M', 'F', 'G', '-', 'E', 'N', 'S', '1'};

std::ofstream open_out(const std::filesystem::path& p, bool binary) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError("cannot write " + p.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& p, bool binary) {
    std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
    if (!is) throw IoError("cannot read " + p.string());
    return is;
}

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated binary file");
    return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is, std::size_t n) {
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw IoError("truncated binary file");
    return v;
}

void check_magic(std::istream& is, const char (&magic)[9], const std::string& what) {
    char buf[9];
    is.read(buf, 9);
    if (!is || std::memcmp(buf, magic, 9) != 0) throw IoError("not a " + what + " file");
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e)
        throw ParameterError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParameterError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) {
    auto os = open_out(path, false);
    for (std::size_t j = 0; j < t.header.size(); ++j) os << (j ? "," : "") << t.header[j];
    os << "\r\n";
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << format_double(r[j]);
        os << "\r\n";
    }
    if (!os) throw IoError("write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    auto is = open_in(path, false);
    CsvTable t;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParameterError(path.string() + " line " + std::to_string(ln) + ": expected " +
                                 std::to_string(t.header.size()) + " columns");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c, ln));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ParameterError(path.string() + ": empty CSV");
    return t;
}

void write_field_csv(const std::filesystem::path& path, const GridField& f, const std::string& value_name) {
    CsvTable t;
    t.header = {"t", "x", value_name};
    for (std::size_t n = 0; n < f.n_time(); ++n)
        for (std::size_t i = 0; i < f.n_cells(); ++i)
            t.rows.push_back({f.time().t(n), f.space().center(i), f(n, i)});
    write_csv(path, t);
}

void write_field_bin(const std::filesystem::path& path, const GridField& f) {
    auto os = open_out(path, true);
    os.write(kFieldMagic, 9);
    put<std::uint64_t>(os, f.n_time());
    put<std::uint64_t>(os, f.n_cells());
    put<double>(os, f.time().T);
    put<double>(os, f.space().x_min);
    put<double>(os, f.space().x_max);
    put_doubles(os, f.time().nodes());
    put_doubles(os, f.data());
    if (!os) throw IoError("write failed for " + path.string());
}

GridField read_field_bin(const std::filesystem::path& path) {
    auto is = open_in(path, true);
    check_magic(is, kFieldMagic, "FMFG-FLD1");
    auto nt = get<std::uint64_t>(is);
    auto nc = get<std::uint64_t>(is);
    double T = get<double>(is), x0 = get<double>(is), x1 = get<double>(is);
    get_doubles(is, nt);
    GridField f(TimeGrid(T, nt - 1), SpaceGrid(x0, x1, nc));
    f.data() = get_doubles(is, nt * nc);
    return f;
}

void write_ensemble_bin(const std::filesystem::path& path, const PathEnsemble& e) {
    auto os = open_out(path, true);
    os.write(kEnsMagic, 9);
    put<std::uint64_t>(os, e.n_paths);
    put<std::uint64_t>(os, e.dim);
    put<std::uint64_t>(os, e.n_time());
    put<std::uint64_t>(os, e.seed);
    put<double>(os, e.beta);
    put_doubles(os, e.t_grid);
    put_doubles(os, e.x_paths);
    put_doubles(os, e.e_paths);
    if (!os) throw IoError("write failed for " + path.string());
}

PathEnsemble read_ensemble_bin(const std::filesystem::path& path) {
    auto is = open_in(path, true);
    check_magic(is, kEnsMagic, "FMFG-ENS1");
    PathEnsemble e;
    e.n_paths = get<std::uint64_t>(is);
    e.dim = get<std::uint64_t>(is);
    auto nt = get<std::uint64_t>(is);
    e.seed = get<std::uint64_t>(is);
    e.beta = get<double>(is);
    e.t_grid = get_doubles(is, nt);
    e.x_paths = get_doubles(is, e.n_paths * e.dim * nt);
    e.e_paths = get_doubles(is, e.n_paths * nt);
    return e;
}

void write_ensemble_summary(const std::filesystem::path& path, const PathEnsemble& e) {
    CsvTable t;
    t.header = {"t", "mean", "var", "q05", "q25", "q50", "q75", "q95"};
    for (std::size_t n = 0; n < e.n_time(); ++n) {
        auto x = e.x_at(n);
        double var = e.n_paths > 1 ? variance(x) : 0.0;
        t.rows.push_back({e.t_grid[n], mean(x), var, quantile(x, 0.05), quantile(x, 0.25), quantile(x, 0.5),
                          quantile(x, 0.75), quantile(x, 0.95)});
    }
    write_csv(path, t);
}

std::vector<double> read_profile_csv(const std::filesystem::path& path, const SpaceGrid& grid) {
    auto t = read_csv(path);
    require(t.header.size() == 2, path.string() + ": expected two columns (x, value)");
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : t.rows) pts.emplace_back(grid.wrap(r[0]), r[1]);
    require(!pts.empty(), path.string() + ": no data rows");
    std::sort(pts.begin(), pts.end());
    const double L = grid.length();
    std::vector<double> out(grid.n_cells);
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
        double x = grid.center(i);
        auto hi = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -HUGE_VAL));
        // periodic neighbours
        auto right = hi == pts.end() ? std::make_pair(pts.front().first + L, pts.front().second) : *hi;
        auto left = hi == pts.begin() ? std::make_pair(pts.back().first - L, pts.back().second) : *(hi - 1);
        if (right.first == x) {
            out[i] = right.second;
            continue;
        }
        double w = (x - left.first) / (right.first - left.first);
        out[i] = (1.0 - w) * left.second + w * right.second;
    }
    return out;
}

std::vector<double> read_density_csv(const std::filesystem::path& path, const SpaceGrid& grid) {
    auto m = read_profile_csv(path, grid);
    double mass = 0.0;
    for (double v : m) {
        require(v >= 0.0 && std::isfinite(v), path.string() + ": density must be finite and nonnegative");
        mass += v * grid.dx();
    }
    require(mass > 0.0, path.string() + ": density has zero mass");
    for (double& v : m) v /= mass;
    return m;
}

void write_profile_csv(const std::filesystem::path& path, const SpaceGrid& grid,
                       const std::vector<double>& values, const std::string& value_name) {
    CsvTable t;
    t.header = {"x", value_name};
    for (std::size_t i = 0; i < grid.n_cells; ++i) t.rows.push_back({grid.center(i), values[i]});
    write_csv(path, t);
}

}  // namespace fracmfg::io
