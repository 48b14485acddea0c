#pragma once

#include <stdexcept>
#include <vector>

#include <sasgen/sim/types.hpp>

namespace sasgen::sim {

/// Normalized occupancy grid: the fraction of episode time spent per cell.
/// Positions outside the bounds clamp to the boundary cells.
inline VectorXd occupancy_grid(const std::vector<Vector2d>& trajectory, const Region& bounds, int n = 32)
{
    if (trajectory.empty())
        throw std::invalid_argument("occupancy_grid: empty trajectory");
    VectorXd grid = VectorXd::Zero(static_cast<Eigen::Index>(n) * n);
    const double sx = n / (bounds.x_max - bounds.x_min);
    const double sy = n / (bounds.y_max - bounds.y_min);
    for (const auto& p : trajectory) {
        int ix = static_cast<int>((p.x() - bounds.x_min) * sx);
        int iy = static_cast<int>((p.y() - bounds.y_min) * sy);
        ix = std::max(0, std::min(n - 1, ix));
        iy = std::max(0, std::min(n - 1, iy));
        grid[static_cast<Eigen::Index>(iy) * n + ix] += 1.0;
    }
    grid /= static_cast<double>(trajectory.size());
    return grid;
}

} // namespace sasgen::sim
