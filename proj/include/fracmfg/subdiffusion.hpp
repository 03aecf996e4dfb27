#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fracmfg/grid.hpp"
#include "fracmfg/rng.hpp"

namespace fracmfg {

/// One-sided stable increment D_{d_tau}; beta = 1 returns d_tau.
double sample_stable_increment(double beta, double d_tau, PathRng& rng);

/// Median of D_1 for beta in (0,1).
double stable_median(double beta);

/// Operational-time step used when none is given: the smaller of the step whose
/// median increment is dt/4 and E[E_T]/512.
double default_tau_step(double beta, const TimeGrid& tg);

struct SubordinatorPath {
    double beta = 1.0;
    double tau_step = 0.0;
    std::vector<double> d_values;  // D at tau_j = j * tau_step, d_values[0] = 0

    double tau(std::size_t j) const { return tau_step * static_cast<double>(j); }
};

/// Simulate D on the tau grid until it first exceeds `level`.
SubordinatorPath simulate_subordinator(double beta, double tau_step, double level, PathRng& rng);

struct InversePath {
    std::vector<double> t_grid;
    std::vector<double> e_values;
};

/// E_t = first grid tau with D_tau > t (right-endpoint staircase), E_0 = 0.
InversePath invert_subordinator(const SubordinatorPath& d, const TimeGrid& tg);
InversePath build_inverse_path(double beta, const TimeGrid& tg, PathRng& rng, double tau_step = 0.0);

/// dX = b dD + sigma dB in operational time. Functions take (t, x).
struct CoefficientSpec {
    std::function<double(double, double)> drift;
    std::function<double(double, double)> diffusion;
    double lipschitz = 1.0;  // L
    double bound = 1.0;      // M, bounds |b| + |sigma|
};

CoefficientSpec constant_coefficients(double b, double sigma);
/// Drift b(t,x) with sigma = sqrt(2 nu); L and M must be supplied by the caller.
CoefficientSpec diffusion_coefficients(double nu, std::function<double(double, double)> drift,
                                       double lipschitz, double bound);
/// Spot-check the sup and Lipschitz bounds on sampled points of [0,T] x [x_lo, x_hi].
void validate_coefficients(const CoefficientSpec& c, double T, double x_lo, double x_hi);

struct PathEnsemble {
    std::size_t n_paths = 0;
    std::size_t dim = 1;
    std::uint64_t seed = 0;
    double beta = 1.0;
    std::vector<double> t_grid;
    std::vector<double> x_paths;  // n_paths x n_time, row-major
    std::vector<double> e_paths;  // n_paths x n_time

    std::size_t n_time() const { return t_grid.size(); }
    double x(std::size_t p, std::size_t n) const { return x_paths[p * n_time() + n]; }
    double e(std::size_t p, std::size_t n) const { return e_paths[p * n_time() + n]; }
    std::vector<double> x_at(std::size_t n) const;
    std::vector<double> e_at(std::size_t n) const;
};

struct SimOptions {
    double tau_step = 0.0;  // 0 picks default_tau_step
    unsigned threads = 1;
};

PathEnsemble simulate_time_changed_sde(const CoefficientSpec& coeffs, double x0, double beta,
                                       const TimeGrid& tg, std::size_t n_paths, std::uint64_t seed,
                                       const SimOptions& opt = {});

struct DensitySlice {
    std::vector<double> values;  // density, sum * dx = 1
    double escaped_mass = 0.0;
};

/// Histogram of X at t_index. More than 0.1% of paths outside the grid is a DomainError.
DensitySlice empirical_density(const PathEnsemble& ens, std::size_t t_index, const SpaceGrid& grid);

/// Exact 1-D W1 of two cell densities on the same grid: sum |F1 - F2| dx.
double wasserstein1(std::span<const double> d1, std::span<const double> d2, double dx);

/// max over slice pairs of W1(m_t, m_s) / |t - s|^{beta/2}, using every `stride`-th slice.
double holder_ratio(const GridField& m, double beta, std::size_t stride = 1);

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
};

/// Least-squares fit of log y = log C + p log t over points with t > 0.
PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> y);

double mean(std::span<const double> v);
double variance(std::span<const double> v);
/// Linear-interpolated sample quantile.
double quantile(std::vector<double> v, double q);

}  // namespace fracmfg
