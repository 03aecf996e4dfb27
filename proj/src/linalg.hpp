#pragma once

#include <cstddef>
#include <vector>

namespace fracmfg::detail {

// Solve the periodic tridiagonal system
//   lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = rhs[i]   (indices mod n)
// by the Thomas algorithm with a Sherman-Morrison correction for the corners.
// Intended for diagonally dominant matrices; no pivoting.
std::vector<double> solve_cyclic(const std::vector<double>& lo, const std::vector<double>& di,
                                 const std::vector<double>& up, const std::vector<double>& rhs);

}  // namespace fracmfg::detail
