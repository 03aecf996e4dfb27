#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracmfg/fpsolver.hpp"
#include "fracmfg/grid.hpp"
#include "fracmfg/hjbsolver.hpp"

namespace fracmfg {

enum class CouplingKind { smoothed_local, fractional_integral_local };

struct CouplingSpec {
    CouplingKind kind = CouplingKind::smoothed_local;
    double kappa = 0.5;
    double epsilon = 0.0;  // mollifier width; 0 means 4 dx
    // increasing map for fractional_integral_local; empty means identity
    std::function<double(double)> gamma;
    // constant added to G, used to pin the ergodic constant of stationary problems
    double offset = 0.0;
    // optional V(x) added to G
    std::function<double(double)> potential;
};

/// Source rows fed to the HJB: row p is G evaluated on m^{p+1} (p < N); row N is G on m^N.
/// For fractional_integral_local the rows are I^{1-beta}_{[t,T)} applied to gamma(m^{p+1}).
GridField coupling_source(const CouplingSpec& c, const GridField& m, double beta);
/// Local smoothed coupling on a single slice.
std::vector<double> smoothed_coupling(const CouplingSpec& c, std::span<const double> m, const SpaceGrid& grid);

struct MFGProblem {
    double beta = 0.7;
    double nu = 0.05;
    TimeGrid time{1.0, 100};
    SpaceGrid space{0.0, 1.0, 128};
    HamiltonianSpec ham = HamiltonianSpec::truncated_quadratic(5.0);
    CouplingSpec coupling;
    std::vector<double> g;
    std::vector<double> m0;
    double damping = 0.5;
    double tolerance = 1e-6;
    std::size_t max_iters = 60;
    std::optional<GridField> initial_guess;  // defaults to m0 at every node
    FpOptions fp;
    HjbOptions hjb;

    void validate() const;
};

/// beta 0.7, nu 0.05, T 1, [0,1) with 128 cells and 100 steps, truncated quadratic H,
/// smoothed_local coupling with kappa 0.5, g = 0.2 cos(2 pi x), Gaussian m0 at 0.3.
MFGProblem default_desk_problem();

struct TraceRow {
    std::size_t iter = 0;
    double gap = 0.0;
    double duality_residual = 0.0;
    double mass_error = 0.0;
    double min_m = 0.0;
};

struct MFGSolution {
    ValueField v;
    DensityField m;
    std::vector<TraceRow> trace;
    bool converged = false;
    bool trace_monotone = true;  // gaps non-increasing after the first 3 iterations
};

MFGSolution solve_mfg(const MFGProblem& p);

/// FP drift used with a value field: step n moves with the feedback of v^{n-1}.
GridField drift_from_value(const ValueField& vf);

double sup_w1(const GridField& a, const GridField& b);

/// Cross pairing of the FP residual with v and the HJB residual with m.
double duality_residual(const ValueField& v, const GridField& m, const MFGProblem& p);

/// dt dx sum_p < m1^{p+1} - m2^{p+1}, (D_{[t,T)} (G(m1) - G(m2)))^p >.
double monotonicity_probe(const CouplingSpec& c, const GridField& m1, const GridField& m2, double beta);

struct SteadyResiduals {
    double hjb = 0.0;
    double fp = 0.0;
};

/// Max-norm residuals of -nu v'' + H(v') = G(m) and A m = 0 on a single slice.
SteadyResiduals steady_state_check(std::span<const double> v, std::span<const double> m, const MFGProblem& p);

}  // namespace fracmfg
