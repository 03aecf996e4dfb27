#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fracmfg/grid.hpp"
#include "fracmfg/subdiffusion.hpp"

namespace fracmfg::io {

/// Shortest round-trip decimal text, locale independent.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Long format: t, x, <value_name>.
void write_field_csv(const std::filesystem::path& path, const GridField& f, const std::string& value_name);
/// "FMFG-FLD1" little-endian binary.
void write_field_bin(const std::filesystem::path& path, const GridField& f);
GridField read_field_bin(const std::filesystem::path& path);

/// "FMFG-ENS1" little-endian binary.
void write_ensemble_bin(const std::filesystem::path& path, const PathEnsemble& e);
PathEnsemble read_ensemble_bin(const std::filesystem::path& path);
/// t, mean, var, q05, q25, q50, q75, q95 of X.
void write_ensemble_summary(const std::filesystem::path& path, const PathEnsemble& e);

/// Two-column profile (x, value) interpolated periodically onto the grid centres.
std::vector<double> read_profile_csv(const std::filesystem::path& path, const SpaceGrid& grid);
/// Same, renormalized to unit mass; negative entries are rejected.
std::vector<double> read_density_csv(const std::filesystem::path& path, const SpaceGrid& grid);
void write_profile_csv(const std::filesystem::path& path, const SpaceGrid& grid,
                       const std::vector<double>& values, const std::string& value_name);

}  // namespace fracmfg::io
