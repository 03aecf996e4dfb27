#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracmfg {

/// Uniform grid t_n = n*dt on [0, T], n = 0..n_steps.
struct TimeGrid {
    double T = 1.0;
    std::size_t n_steps = 100;

    TimeGrid() = default;
    TimeGrid(double T_, std::size_t n_steps_);

    double dt() const { return T / static_cast<double>(n_steps); }
    std::size_t n_nodes() const { return n_steps + 1; }
    double t(std::size_t n) const { return T * static_cast<double>(n) / static_cast<double>(n_steps); }
    std::vector<double> nodes() const;
};

/// Periodic cell-centred grid on [x_min, x_max).
struct SpaceGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n_cells = 128;

    SpaceGrid() = default;
    SpaceGrid(double x_min_, double x_max_, std::size_t n_cells_);

    double length() const { return x_max - x_min; }
    double dx() const { return length() / static_cast<double>(n_cells); }
    double center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
    std::vector<double> centers() const;
    // Map x onto [x_min, x_max).
    double wrap(double x) const;
};

/// Time-by-space array, row n holds the slice at t_n.
class GridField {
public:
    GridField() = default;
    GridField(TimeGrid tg, SpaceGrid sg, double fill = 0.0);

    const TimeGrid& time() const { return tg_; }
    const SpaceGrid& space() const { return sg_; }
    std::size_t n_time() const { return tg_.n_nodes(); }
    std::size_t n_cells() const { return sg_.n_cells; }

    std::span<double> row(std::size_t n) { return {data_.data() + n * sg_.n_cells, sg_.n_cells}; }
    std::span<const double> row(std::size_t n) const { return {data_.data() + n * sg_.n_cells, sg_.n_cells}; }
    double& operator()(std::size_t n, std::size_t i) { return data_[n * sg_.n_cells + i]; }
    double operator()(std::size_t n, std::size_t i) const { return data_[n * sg_.n_cells + i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    TimeGrid tg_;
    SpaceGrid sg_;
    std::vector<double> data_;
};

double max_abs_diff(const GridField& a, const GridField& b);

}  // namespace fracmfg
