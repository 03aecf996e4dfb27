#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fracmfg/grid.hpp"

namespace fracmfg {

/// Periodic tridiagonal operator. Row i reads
///   lower[i]*phi[i-1] + diag[i]*phi[i] + upper[i]*phi[i+1].
struct GeneratorMatrix {
    std::vector<double> lower, diag, upper;

    std::size_t size() const { return diag.size(); }
    std::vector<double> apply(std::span<const double> phi) const;
    /// Transpose, also periodic tridiagonal.
    GeneratorMatrix transpose() const;
    double max_abs_column_sum() const;
};

/// Conservative finite-volume form of nu*phi'' - (b*phi)' with b the agent velocity
/// sampled at cell centres. Face drift is the average of neighbouring centres;
/// the advective flux is upwinded by its sign.
GeneratorMatrix assemble_generator(std::span<const double> drift, double nu, const SpaceGrid& grid);

struct DensityField {
    GridField m;
    bool clipped = false;           // clip-and-renormalize fired
    double max_step_mass_drift = 0.0;
    double min_value = 0.0;
};

struct FpOptions {
    bool clip_negative = false;      // exploratory runs only
    double negativity_tol = 1e-12;   // relative to the slice maximum
    bool ill_posed_variant = false;  // D^beta m = A m, kept to show that mass is not conserved
};

/// Time-fractional FP with drift(t_n, x_i) given per node; step n uses drift row n.
DensityField solve_fp(std::span<const double> m0, const GridField& drift, double nu, double beta,
                      const FpOptions& opt = {});

/// Smooth test function with its spatial derivatives.
struct TestFunction {
    std::function<double(double, double)> phi, phi_x, phi_xx;
};

/// Discrete weak-form residual of the FP equation for a solution m.
double check_weak_form(const GridField& m, const GridField& drift, double nu, double beta,
                       const TestFunction& phi);

double slice_mass(std::span<const double> m, double dx);
/// Normalized Gaussian wrapped onto the periodic grid.
std::vector<double> gaussian_density(const SpaceGrid& grid, double center, double width);

}  // namespace fracmfg
