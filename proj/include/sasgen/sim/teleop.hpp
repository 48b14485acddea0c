#pragma once

#include <cmath>
#include <vector>

#include <sasgen/sim/belief.hpp>
#include <sasgen/sim/occupancy.hpp>
#include <sasgen/sim/types.hpp>

namespace sasgen::sim {

/// Interior waypoints of the simulated teleoperator: five points evenly
/// spaced on the start-to-goal segment, each displaced perpendicularly by
/// sqrt(eta_i) with alternating sign. The variation measure sqrt(sum eta)
/// then equals the L2 norm of the displacements.
inline std::vector<Vector2d> teleop_waypoints(const Vector2d& start, const Vector2d& goal,
    const VectorXd& eta)
{
    const Vector2d seg = goal - start;
    const double len = seg.norm();
    Vector2d dir(1.0, 0.0), perp(0.0, 1.0);
    if (len > 1e-12) {
        dir = seg / len;
        perp = Vector2d(-dir.y(), dir.x());
    }
    std::vector<Vector2d> wps;
    wps.reserve(static_cast<std::size_t>(eta.size()));
    for (Eigen::Index i = 0; i < eta.size(); i++) {
        const double frac = static_cast<double>(i + 1) / (static_cast<double>(eta.size()) + 1.0);
        const double sign = i % 2 == 0 ? 1.0 : -1.0;
        wps.push_back(start + frac * len * dir + sign * std::sqrt(std::max(0.0, eta[i])) * perp);
    }
    return wps;
}

/// Joystick input toward the first unvisited waypoint (then the goal).
/// A waypoint counts as visited once the arm is within tolerance of it or
/// has passed it along the nominal segment direction.
class TeleopHuman {
public:
    TeleopHuman(const Vector2d& start, const Vector2d& goal, const VectorXd& eta, double speed,
        double tolerance)
        : goal_(goal), speed_(speed), tol_(tolerance), waypoints_(teleop_waypoints(start, goal, eta))
    {
        const Vector2d seg = goal - start;
        dir_ = seg.norm() > 1e-12 ? Vector2d(seg.normalized()) : Vector2d(0.0, 0.0);
    }

    Vector2d input(const Vector2d& arm)
    {
        while (next_ < waypoints_.size()) {
            const Vector2d& w = waypoints_[next_];
            const bool reached = (arm - w).norm() <= tol_;
            const bool passed = (arm - w).dot(dir_) > 0.0;
            if (reached || passed)
                next_++;
            else
                break;
        }
        const Vector2d target = next_ < waypoints_.size() ? waypoints_[next_] : goal_;
        const Vector2d delta = target - arm;
        if (delta.norm() < 1e-12)
            return Vector2d(0.0, 0.0);
        return speed_ * delta.normalized();
    }

    std::size_t next_waypoint() const { return next_; }

private:
    Vector2d goal_, dir_;
    double speed_, tol_;
    std::vector<Vector2d> waypoints_;
    std::size_t next_ = 0;
};

/// Hindsight-optimization assistance: belief-weighted average of the unit
/// directions to each goal.
inline Vector2d robot_action_teleop_shared(const VectorXd& belief, const Vector2d& x,
    const std::vector<Vector2d>& goals, double speed)
{
    Vector2d v(0.0, 0.0);
    for (std::size_t g = 0; g < goals.size(); g++) {
        const Vector2d d = goals[g] - x;
        if (d.norm() > 1e-12)
            v += belief[static_cast<Eigen::Index>(g)] * d.normalized();
    }
    return speed * v;
}

/// Policy blending: pass the user's input through until the belief exceeds
/// the confidence threshold, then move straight to the inferred goal. The
/// takeover latches.
struct BlendState {
    bool latched = false;
};

inline Vector2d robot_action_teleop_blend(const VectorXd& belief, const Vector2d& human_input,
    const Vector2d& x, const std::vector<Vector2d>& goals, double threshold, double speed,
    BlendState& state)
{
    Eigen::Index argmax = 0;
    belief.maxCoeff(&argmax);
    if (!state.latched && belief[argmax] > threshold)
        state.latched = true;
    if (!state.latched)
        return human_input;
    const Vector2d d = goals[static_cast<std::size_t>(argmax)] - x;
    if (d.norm() < 1e-12)
        return Vector2d(0.0, 0.0);
    return speed * d.normalized();
}

/// Shared-control teleoperation episode: the human supplies waypoint-seeking
/// joystick inputs, the robot infers the goal from them and moves the arm.
/// The objective is the time to reach the intended goal, capped.
inline SimOutcome simulate_teleop(const TeleopScenario& sc, const SimConfig& cfg,
    TeleopPolicy policy = TeleopPolicy::SharedAutonomy)
{
    SimOutcome out;
    const double cap = cfg.teleop_cap;
    const std::vector<Vector2d> goals = {sc.goal1, sc.goal2};

    TeleopHuman human(cfg.teleop_start, sc.goal1, sc.eta, cfg.human_speed, cfg.waypoint_tolerance);
    Vector2d arm = cfg.teleop_start;
    VectorXd belief = VectorXd::Constant(2, 0.5);
    BlendState blend;

    std::vector<Vector2d> traj;
    traj.push_back(arm);

    double t = 0.0;
    out.success = (arm - sc.goal1).norm() <= cfg.reach_radius;
    while (!out.success && t < cap - 1e-12) {
        const Vector2d u = human.input(arm);
        belief = belief_update_teleop(belief, arm, u, goals, cfg.beta_belief_teleop, cfg.dt);
        Vector2d v;
        if (policy == TeleopPolicy::SharedAutonomy)
            v = robot_action_teleop_shared(belief, arm, goals, cfg.robot_speed);
        else
            v = robot_action_teleop_blend(belief, u, arm, goals, cfg.blend_threshold, cfg.robot_speed, blend);

        arm += v * cfg.dt;
        t += cfg.dt;
        if (!arm.allFinite()) {
            out.ok = false;
            out.error = "teleop: non-finite arm state";
            return out;
        }
        traj.push_back(arm);

        TickRecord rec;
        rec.t = t;
        rec.robot_pos = arm;
        rec.human_pos = arm;
        rec.belief = belief;
        out.trace.push_back(rec);

        if ((arm - sc.goal1).norm() <= cfg.reach_radius)
            out.success = true;
    }

    out.f = out.success ? t : cap;
    out.m = VectorXd(2);
    out.m[0] = (sc.goal1 - sc.goal2).norm();
    out.m[1] = std::sqrt(std::max(0.0, sc.eta.sum()));
    out.grids.push_back(occupancy_grid(traj, cfg.teleop_workspace, cfg.occupancy_size));
    return out;
}

} // namespace sasgen::sim
