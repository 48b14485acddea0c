#pragma once

#include <cmath>
#include <vector>

#include <sasgen/sim/grid_mdp.hpp>
#include <sasgen/sim/types.hpp>

namespace sasgen::sim {

/// Multiplies the belief by exp(beta * advantage_g) per candidate goal and
/// renormalizes. A degenerate normalizer leaves the belief unchanged.
/// Entries already at zero (removed candidates) stay zero.
inline VectorXd belief_update(const VectorXd& belief, const VectorXd& advantages, double beta)
{
    const Eigen::Index n = belief.size();
    double max_adv = -std::numeric_limits<double>::infinity();
    for (Eigen::Index g = 0; g < n; g++)
        if (belief[g] > 0.0)
            max_adv = std::max(max_adv, advantages[g]);
    if (!std::isfinite(max_adv))
        return belief;

    VectorXd next(n);
    double z = 0.0;
    for (Eigen::Index g = 0; g < n; g++) {
        next[g] = belief[g] > 0.0 ? belief[g] * std::exp(beta * (advantages[g] - max_adv)) : 0.0;
        z += next[g];
    }
    if (!(z > 0.0) || !std::isfinite(z))
        return belief;
    return next / z;
}

/// Teleoperation belief: distance-proportional values, advantage
/// Q_g(x,u) - V_g(x) = -|u| dt - |x + u dt - g| + |x - g|.
inline VectorXd belief_update_teleop(const VectorXd& belief, const Vector2d& x, const Vector2d& u,
    const std::vector<Vector2d>& goals, double beta, double dt)
{
    VectorXd adv(static_cast<Eigen::Index>(goals.size()));
    const Vector2d x_next = x + u * dt;
    for (std::size_t g = 0; g < goals.size(); g++)
        adv[static_cast<Eigen::Index>(g)] = -u.norm() * dt - (x_next - goals[g]).norm() + (x - goals[g]).norm();
    return belief_update(belief, adv, beta);
}

/// Collaboration belief: soft MDP values of the human, advantage
/// Q_g(s, a) - V_g(s) for the observed human cell and snapped action.
inline VectorXd belief_update_collab(const VectorXd& belief, const GridMdp& mdp,
    const std::vector<QTable>& tables, const Vector2d& human_pos, const Vector2d& human_vel,
    double beta)
{
    if (human_vel.norm() < 1e-12 || !mdp.in_grid(human_pos))
        return belief;
    const int s = mdp.locate(human_pos);
    const int a = nearest_action(human_vel);
    VectorXd adv(belief.size());
    for (Eigen::Index g = 0; g < belief.size(); g++)
        adv[g] = tables[static_cast<std::size_t>(g)](s, a) - tables[static_cast<std::size_t>(g)].value(s);
    return belief_update(belief, adv, beta);
}

} // namespace sasgen::sim
