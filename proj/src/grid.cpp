#include "fracmfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracmfg/errors.hpp"

namespace fracmfg {

TimeGrid::TimeGrid(double T_, std::size_t n_steps_) : T(T_), n_steps(n_steps_) {
    require(std::isfinite(T) && T > 0.0, "time horizon T must be positive");
    require(n_steps >= 1, "time grid needs at least one step");
}

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> t(n_nodes());
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = this->t(n);
    return t;
}

SpaceGrid::SpaceGrid(double x_min_, double x_max_, std::size_t n_cells_)
    : x_min(x_min_), x_max(x_max_), n_cells(n_cells_) {
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
            "space grid needs x_max > x_min");
    require(n_cells >= 8, "space grid needs at least 8 cells, got " + std::to_string(n_cells));
}

std::vector<double> SpaceGrid::centers() const {
    std::vector<double> x(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) x[i] = center(i);
    return x;
}

double SpaceGrid::wrap(double x) const {
    double L = length();
    double y = std::fmod(x - x_min, L);
    if (y < 0.0) y += L;
    if (y >= L) y = 0.0;
    return x_min + y;
}

GridField::GridField(TimeGrid tg, SpaceGrid sg, double fill)
    : tg_(tg), sg_(sg), data_(tg.n_nodes() * sg.n_cells, fill) {}

double max_abs_diff(const GridField& a, const GridField& b) {
    require(a.data().size() == b.data().size(), "field shapes differ");
    double d = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k)
        d = std::max(d, std::abs(a.data()[k] - b.data()[k]));
    return d;
}

}  // namespace fracmfg
