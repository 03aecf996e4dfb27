#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "fracmfg/grid.hpp"

namespace fracmfg {

enum class HamiltonianKind { truncated_quadratic, custom };

/// H(t,x,p) = sup_{|u| <= u_max} { -u p - L(t,x,u) } and its p-derivative.
struct HamiltonianSpec {
    HamiltonianKind kind = HamiltonianKind::truncated_quadratic;
    double u_max = 5.0;
    std::function<double(double, double, double)> H;
    std::function<double(double, double, double)> dH;

    /// L = u^2/2: H = p^2/2 for |p| <= u_max, u_max |p| - u_max^2/2 beyond.
    static HamiltonianSpec truncated_quadratic(double u_max = 5.0);
    static HamiltonianSpec custom(std::function<double(double, double, double)> H,
                                  std::function<double(double, double, double)> dH, double u_max);
    static HamiltonianSpec zero();
};

/// Sampled checks of convexity in p, |dH| <= u_max and finiteness of H(t,x,0).
void validate_hamiltonian(const HamiltonianSpec& h, double T, double x_lo, double x_hi);

struct ValueField {
    GridField v;
    GridField gradient;  // central differences
    GridField feedback;  // -dH(t, x, Dv)
    double max_d2 = 0.0;
    bool d2_bound_violated = false;
    int max_inner_iterations = 0;
};

struct HjbOptions {
    double d2_bound = std::numeric_limits<double>::infinity();
    double inner_tol = 1e-10;
    int max_inner = 50;
    // running cost counted in physical time: the source becomes I^beta_{[t,T)} G
    bool standard_time_source = false;
};

/// Backward solve of -v_t + D^{1-beta}_{[t,T)}[-nu v_xx + H(Dv) - G] = 0, v(T) = g.
/// source row n holds G at t_n; row N is not used.
ValueField solve_hjb(std::span<const double> g, const GridField& source, double nu, double beta,
                     const HamiltonianSpec& ham, const HjbOptions& opt = {});

/// Fill gradient, feedback and the D2 monitor for a value grid.
ValueField make_value_field(GridField v, const HamiltonianSpec& ham, double d2_bound);

/// Bracket F = -nu v_xx + H(Dv) - G at every node (row N included).
GridField hjb_bracket(const GridField& v, const GridField& source, double nu, const HamiltonianSpec& ham);

/// max_n |(v^n - v^{n+1})/dt + (D_{[t,T)} F)^n| using the backward stencil directly.
double rl_form_residual(const ValueField& vf, const GridField& source, double nu, double beta,
                        const HamiltonianSpec& ham);
/// max_n |Caputo_{[t,T)} v + F| over nodes 0..N-1 with T - t_n >= layer, relative to max |F| there.
/// v - g behaves like (T-t)^beta near T, where product stencils carry an O(1) pointwise error at the
/// nodes next to T; a fixed layer keeps that out of the measurement.
double caputo_form_residual(const ValueField& vf, const GridField& source, double nu, double beta,
                            const HamiltonianSpec& ham, double layer = 0.0);

/// Spectral mild solution of the linear problem (H = 0) with source l(t_n, x_i).
ValueField mild_solution_linear(std::span<const double> g, const GridField& source, double nu, double beta);

/// Linear-in-x periodic interpolation of row n.
double interpolate(const GridField& f, std::size_t n, double x);

// Monte Carlo control estimates

struct ControlPolicy {
    std::function<double(double, double)> u;  // (t, x)
    double bound = 0.0;
};

/// u = -dH(Dv) at the left time node, linear in x.
ControlPolicy feedback_policy(const ValueField& vf);
ControlPolicy constant_policy(double u);

struct ControlProblem {
    TimeGrid time;
    SpaceGrid space;
    double nu = 0.0;
    double beta = 1.0;
    std::function<double(double, double, double)> running_cost;  // L(t,x,u); empty means u^2/2
    GridField source;                                             // G; empty means 0
    std::vector<double> terminal;                                 // g at cell centres
};

// start: a fresh inverse subordinator started at t0, matching the RL form of the HJB.
// terminal: E_s = T - Ebar_{T-s}, a clock anchored at the horizon.
enum class ClockAnchor { start, terminal };

struct McOptions {
    std::size_t substeps = 4;  // physical sub-steps per time step
    ClockAnchor anchor = ClockAnchor::start;
    double tau_step = 0.0;
    double op_step = 0.0;  // longest Euler step in operational time; 0 means the physical sub-step
    unsigned threads = 1;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// E[ int_{t0}^T (L + G) dE_s + g(X_T) ] under the policy, X_0 = x0, on the periodic domain.
McEstimate estimate_value_mc(const ControlPolicy& policy, std::size_t t0_index, double x0, std::size_t n_paths,
                             std::uint64_t seed, const ControlProblem& prob, const McOptions& opt = {});

struct DppResult {
    double residual = 0.0;
    double std_error = 0.0;
    double value = 0.0;     // v(t0, x0)
    double estimate = 0.0;  // MC of the right-hand side
};

/// |v(t0,x0) - E[ int_{t0}^{theta} (L + G) dE + v(theta, X_theta) ]| under the feedback of vf.
DppResult dpp_residual(const ValueField& vf, std::size_t t0_index, double x0, std::size_t theta_index,
                       std::size_t n_paths, std::uint64_t seed, const ControlProblem& prob,
                       const McOptions& opt = {});

}  // namespace fracmfg
