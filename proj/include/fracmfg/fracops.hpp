#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracmfg {

/// A fractional order in (0, 1]. Use derivative_order() to get 1 - beta,
/// which may be 0 (the identity).
class FractionalOrder {
public:
    explicit FractionalOrder(double value);
    double value() const { return v_; }
    double derivative_order() const { return 1.0 - v_; }
    bool classical() const { return v_ == 1.0; }

private:
    double v_;
};

enum class StencilKind { rl_derivative, rl_integral, caputo_derivative };
enum class Direction { forward, backward };

// grunwald_letnikov: convolution over all nodes including the start node.
// product_rectangle: piecewise-constant product rule that skips the start
// node; this is the scheme the solvers march with.
// Caputo stencils always use the L1 rule and ignore this field.
enum class Scheme { grunwald_letnikov, product_rectangle };

struct FractionalStencil {
    double order = 0.0;
    StencilKind kind = StencilKind::rl_derivative;
    Direction direction = Direction::forward;
    Scheme scheme = Scheme::grunwald_letnikov;
    double dt = 0.0;
    std::vector<double> weights;

    std::size_t n_nodes() const { return weights.size(); }
    // 1 when the convolution excludes the start node (terminal node for backward).
    std::size_t start_offset() const;
    // Declared convergence order for smooth inputs.
    double declared_order() const;
};

/// Orders must lie in (0,1]; order 0 is accepted for derivative kinds and
/// yields the identity.
FractionalStencil build_stencil(double order, StencilKind kind, Direction direction,
                                std::size_t n_nodes, double dt,
                                Scheme scheme = Scheme::grunwald_letnikov);

/// Same weights, other direction.
FractionalStencil transposed(const FractionalStencil& s);

std::vector<double> apply_forward(const FractionalStencil& s, std::span<const double> f);
std::vector<double> apply_backward(const FractionalStencil& s, std::span<const double> f);
/// Dispatch on s.direction.
std::vector<double> apply(const FractionalStencil& s, std::span<const double> f);

/// Dense n x n matrix of the stencil, row-major.
std::vector<double> dense_matrix(const FractionalStencil& s);

/// RL derivative minus boundary_value times the RL derivative of the constant 1,
/// so constants map to exactly 0. boundary_value is f(0) forward, f(T) backward.
std::vector<double> regularized_caputo(const FractionalStencil& rl, std::span<const double> f,
                                       double boundary_value);

/// Closed-form RL integral / derivative of t^p on (0, t]; used by the batteries.
double power_rule(StencilKind kind, double order, double p, double t);

struct MittagLefflerParams {
    double alpha = 1.0;
    double gamma = 1.0;
    double z = 0.0;
};

/// E_{alpha,gamma}(z) for real z, alpha in (0,1], gamma > 0.
/// Throws NumericalError when no branch can certify the result.
double mittag_leffler(const MittagLefflerParams& p);
double mittag_leffler(double alpha, double gamma, double z);

}  // namespace fracmfg
