#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <sasgen/core/random.hpp>
#include <sasgen/sim/belief.hpp>
#include <sasgen/sim/grid_mdp.hpp>
#include <sasgen/sim/occupancy.hpp>
#include <sasgen/sim/types.hpp>

namespace sasgen::sim {

/// Feasible goal set for one candidate human goal: the robot's unworked goals
/// minus the candidate; when that is empty, all unworked goals.
inline std::vector<int> feasible_goal_set(const std::vector<int>& robot_unworked, int candidate)
{
    std::vector<int> fs;
    for (int g : robot_unworked)
        if (g != candidate)
            fs.push_back(g);
    if (fs.empty())
        return robot_unworked;
    return fs;
}

/// Goal-to-go per candidate human goal: the nearest goal of the feasible set
/// from the robot's position, ties to the lowest index. Entries are -1 for
/// candidates outside `candidates`.
inline std::vector<int> goal_to_go_map(const std::vector<int>& candidates,
    const std::vector<int>& robot_unworked, const std::vector<Vector2d>& goals,
    const Vector2d& robot_pos)
{
    std::vector<int> F(goals.size(), -1);
    for (int cand : candidates) {
        const auto fs = feasible_goal_set(robot_unworked, cand);
        if (fs.empty())
            continue;
        int best = fs[0];
        double bd = (goals[static_cast<std::size_t>(fs[0])] - robot_pos).norm();
        for (std::size_t i = 1; i < fs.size(); i++) {
            const double d = (goals[static_cast<std::size_t>(fs[i])] - robot_pos).norm();
            if (d < bd - 1e-15) {
                bd = d;
                best = fs[i];
            }
        }
        F[static_cast<std::size_t>(cand)] = best;
    }
    return F;
}

/// Hindsight-optimization action: belief mass flows through the goal-to-go
/// map, weight(g') = sum of b(g) over candidates with F(g) = g'.
inline Vector2d robot_action_collab(const VectorXd& belief, const std::vector<int>& F,
    const std::vector<Vector2d>& goals, const Vector2d& robot_pos, double speed)
{
    std::vector<double> weight(goals.size(), 0.0);
    for (std::size_t g = 0; g < goals.size(); g++)
        if (F[g] >= 0 && belief[static_cast<Eigen::Index>(g)] > 0.0)
            weight[static_cast<std::size_t>(F[g])] += belief[static_cast<Eigen::Index>(g)];
    Vector2d v(0.0, 0.0);
    for (std::size_t g = 0; g < goals.size(); g++) {
        if (weight[g] <= 0.0)
            continue;
        const Vector2d d = goals[g] - robot_pos;
        if (d.norm() > 1e-12)
            v += weight[g] * d.normalized();
    }
    return speed * v;
}

/// Velocity of the MDP-driven human: toward the center of the next cell
/// chosen from the Q-table (greedy, or softmax-sampled in the
/// human-policy-search setting); final approach heads at the goal itself.
inline Vector2d human_action_collab(const Vector2d& pos, const GridMdp& mdp, const QTable& table,
    const Vector2d& goal, double speed, bool softmax, double beta_h, core::Rng& rng)
{
    const int s = mdp.locate(pos);
    Vector2d target;
    if (s == table.goal_cell) {
        target = goal;
    }
    else {
        const int a = softmax ? softmax_action(table, s, beta_h, rng) : greedy_action(table, s);
        const int nxt = mdp.transition(s, a, table.obstacle);
        target = mdp.cell_center(nxt);
    }
    const Vector2d d = target - pos;
    if (d.norm() < 1e-12)
        return Vector2d(0.0, 0.0);
    return speed * d.normalized();
}

namespace detail {

    struct AgentCtl {
        AgentState state = AgentState::MovingToGoal;
        Vector2d pos{0, 0};
        double timer = 0.0;
        int target = -1;       // current goal for the human / pending work goal for the robot
        int working_goal = -1; // goal currently occupied by this agent
    };

} // namespace detail

/// Shared-workspace collaboration episode. The human visits the goals in
/// index order with pauses for working and resetting; the robot infers the
/// human goal from observed motion, moves by hindsight optimization over
/// goals-to-go, stamps each goal once, and replans through the joint-limit
/// zone proxy. Ends when both agents are done or at the time cap.
inline SimOutcome simulate_collab(const CollabScenario& sc, const SimConfig& cfg, std::uint64_t seed)
{
    SimOutcome out;
    const int n_goals = static_cast<int>(sc.goals.size());
    const double cap = cfg.collab_cap;
    core::Rng rng(seed);

    GridMdp mdp(cfg.collab_bounds(), cfg.mdp_cell, sc.goals);
    std::vector<QTable> tables;
    tables.reserve(static_cast<std::size_t>(n_goals));
    for (int g = 0; g < n_goals; g++)
        tables.push_back(softmax_value_iteration(mdp, g, cfg.mdp_gamma, cfg.mdp_temperature,
            cfg.vi_tol, cfg.vi_max_iters));

    detail::AgentCtl human, robot;
    human.pos = cfg.human_start;
    human.target = 0;
    robot.pos = cfg.robot_home;

    std::vector<char> human_finished(static_cast<std::size_t>(n_goals), 0);
    std::vector<char> robot_worked(static_cast<std::size_t>(n_goals), 0);
    bool replanned_this_approach = false;

    VectorXd belief = VectorXd::Constant(n_goals, 1.0 / n_goals);

    auto next_unfinished = [&]() {
        for (int g = 0; g < n_goals; g++)
            if (!human_finished[static_cast<std::size_t>(g)])
                return g;
        return -1;
    };
    auto robot_unworked = [&]() {
        std::vector<int> u;
        for (int g = 0; g < n_goals; g++)
            if (!robot_worked[static_cast<std::size_t>(g)])
                u.push_back(g);
        return u;
    };
    auto drop_candidate = [&](int g) {
        belief[g] = 0.0;
        const double z = belief.sum();
        if (z > 0.0)
            belief /= z;
    };

    std::vector<Vector2d> human_traj{human.pos}, robot_traj{robot.pos};
    double t = 0.0;
    const double human_speed = cfg.human_speed * (sc.softmax_human ? sc.v_mult : 1.0);

    while (t < cap - 1e-12 && !(human.state == AgentState::Done && robot.state == AgentState::Done)) {
        // Phase 1: human action selection.
        Vector2d hv(0.0, 0.0);
        switch (human.state) {
        case AgentState::MovingToGoal: {
            const Vector2d goal = sc.goals[static_cast<std::size_t>(human.target)];
            if ((human.pos - goal).norm() <= cfg.reach_radius) {
                if (robot.working_goal == human.target) {
                    human.state = AgentState::WaitingForSpace;
                }
                else {
                    human.state = AgentState::WorkingOnGoal;
                    human.working_goal = human.target;
                    human.timer = cfg.t_work;
                }
            }
            else {
                hv = human_action_collab(human.pos, mdp, tables[static_cast<std::size_t>(human.target)],
                    goal, human_speed, sc.softmax_human, sc.beta_h, rng);
            }
            break;
        }
        case AgentState::WaitingForSpace:
            if (robot.working_goal != human.target) {
                human.state = AgentState::WorkingOnGoal;
                human.working_goal = human.target;
                human.timer = cfg.t_work;
            }
            break;
        case AgentState::WorkingOnGoal:
            human.timer -= cfg.dt;
            if (human.timer <= 1e-12) {
                human_finished[static_cast<std::size_t>(human.target)] = 1;
                human.working_goal = -1;
                drop_candidate(human.target);
                human.target = next_unfinished();
                if (human.target < 0)
                    human.state = AgentState::Done;
                else {
                    human.state = AgentState::Resetting;
                    human.timer = cfg.t_reset;
                }
            }
            break;
        case AgentState::Resetting:
            human.timer -= cfg.dt;
            if (human.timer <= 1e-12)
                human.state = AgentState::MovingToGoal;
            break;
        case AgentState::Replanning:
        case AgentState::Done:
            break;
        }

        // The wrong-goal statistic samples the belief as the tick begins, so
        // the uniform prior is included at t = 0.
        if (human.target >= 0 && human.state != AgentState::Done) {
            double wrong = 0.0;
            for (int g = 0; g < n_goals; g++)
                if (g != human.target)
                    wrong = std::max(wrong, belief[g]);
            out.wrong_goal_trace.push_back(wrong);
            out.max_wrong_goal_prob = std::max(out.max_wrong_goal_prob, wrong);
        }

        // Phase 2: robot action selection.
        belief = belief_update_collab(belief, mdp, tables, human.pos, hv, cfg.beta_belief_collab);
        Vector2d rv(0.0, 0.0);
        std::vector<int> F(static_cast<std::size_t>(n_goals), -1);
        switch (robot.state) {
        case AgentState::MovingToGoal: {
            const auto unworked = robot_unworked();
            if ((robot.pos - cfg.replan_center).norm() < cfg.replan_radius && !replanned_this_approach) {
                robot.state = AgentState::Replanning;
                replanned_this_approach = true;
                out.replan_count++;
                break;
            }
            int reach_goal = -1;
            double reach_d = std::numeric_limits<double>::infinity();
            for (int g : unworked) {
                const double d = (robot.pos - sc.goals[static_cast<std::size_t>(g)]).norm();
                if (d <= cfg.reach_radius && d < reach_d) {
                    reach_goal = g;
                    reach_d = d;
                }
            }
            if (reach_goal >= 0) {
                if (human.working_goal == reach_goal) {
                    robot.state = AgentState::WaitingForSpace;
                    robot.target = reach_goal;
                }
                else {
                    robot.state = AgentState::WorkingOnGoal;
                    robot.working_goal = reach_goal;
                    robot.timer = cfg.t_work;
                }
                break;
            }
            std::vector<int> candidates;
            for (int g = 0; g < n_goals; g++)
                if (belief[g] > 0.0)
                    candidates.push_back(g);
            if (candidates.empty()) {
                // Human is done; head straight for the nearest unworked goal.
                int best = unworked[0];
                double bd = (sc.goals[static_cast<std::size_t>(best)] - robot.pos).norm();
                for (int g : unworked) {
                    const double d = (sc.goals[static_cast<std::size_t>(g)] - robot.pos).norm();
                    if (d < bd) {
                        bd = d;
                        best = g;
                    }
                }
                const Vector2d d = sc.goals[static_cast<std::size_t>(best)] - robot.pos;
                if (d.norm() > 1e-12)
                    rv = cfg.robot_speed * d.normalized();
            }
            else {
                F = goal_to_go_map(candidates, unworked, sc.goals, robot.pos);
                rv = robot_action_collab(belief, F, sc.goals, robot.pos, cfg.robot_speed);
            }
            break;
        }
        case AgentState::Replanning: {
            const Vector2d d = cfg.robot_home - robot.pos;
            if (d.norm() <= cfg.reach_radius)
                robot.state = AgentState::MovingToGoal;
            else
                rv = cfg.robot_speed * d.normalized();
            break;
        }
        case AgentState::WaitingForSpace:
            if (human.working_goal != robot.target) {
                robot.state = AgentState::WorkingOnGoal;
                robot.working_goal = robot.target;
                robot.timer = cfg.t_work;
            }
            break;
        case AgentState::WorkingOnGoal:
            robot.timer -= cfg.dt;
            if (robot.timer <= 1e-12) {
                robot_worked[static_cast<std::size_t>(robot.working_goal)] = 1;
                robot.working_goal = -1;
                replanned_this_approach = false;
                if (robot_unworked().empty())
                    robot.state = AgentState::Done;
                else {
                    robot.state = AgentState::Resetting;
                    robot.timer = cfg.t_reset;
                }
            }
            break;
        case AgentState::Resetting:
            robot.timer -= cfg.dt;
            if (robot.timer <= 1e-12)
                robot.state = AgentState::MovingToGoal;
            break;
        case AgentState::Done:
            break;
        }

        // Bookkeeping before integration.
        if (human.state == AgentState::WaitingForSpace || robot.state == AgentState::WaitingForSpace)
            out.wait_time += cfg.dt;

        // Phase 3: environment simulation.
        human.pos += hv * cfg.dt;
        robot.pos += rv * cfg.dt;
        t += cfg.dt;
        if (!human.pos.allFinite() || !robot.pos.allFinite() || !belief.allFinite()) {
            out.ok = false;
            out.error = "collab: non-finite state";
            return out;
        }
        human_traj.push_back(human.pos);
        robot_traj.push_back(robot.pos);

        TickRecord rec;
        rec.t = t;
        rec.human_pos = human.pos;
        rec.robot_pos = robot.pos;
        rec.human_state = human.state;
        rec.robot_state = robot.state;
        rec.belief = belief;
        rec.goal_to_go = F;
        out.trace.push_back(rec);
    }

    out.success = human.state == AgentState::Done && robot.state == AgentState::Done;
    out.f = out.success ? t : cap;

    double path_len = 0.0;
    for (std::size_t i = 1; i < robot_traj.size(); i++)
        path_len += (robot_traj[i] - robot_traj[i - 1]).norm();

    double min_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_goals; i++)
        for (int j = i + 1; j < n_goals; j++)
            min_dist = std::min(min_dist, (sc.goals[static_cast<std::size_t>(i)] - sc.goals[static_cast<std::size_t>(j)]).norm());

    // Measure order: min goal distance, max wrong-goal probability,
    // robot path length, total wait time. Domains select their pair.
    out.m = VectorXd(4);
    out.m << min_dist, out.max_wrong_goal_prob, path_len, out.wait_time;

    const Region bounds = cfg.collab_bounds();
    out.grids.push_back(occupancy_grid(robot_traj, bounds, cfg.occupancy_size));
    out.grids.push_back(occupancy_grid(human_traj, bounds, cfg.occupancy_size));
    return out;
}

} // namespace sasgen::sim
