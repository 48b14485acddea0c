#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <sasgen/repair/repair.hpp>

namespace sasgen::sim {

using Eigen::Vector2d;
using Eigen::VectorXd;
using repair::Region;

struct SimConfig {
    double dt = 0.05;
    double human_speed = 0.10;
    double robot_speed = 0.20;
    double t_work = 5.0;
    double t_reset = 2.0;
    double reach_radius = 0.03;
    double waypoint_tolerance = 0.01;
    double beta_belief_teleop = 5.0;
    double beta_belief_collab = 200.0;
    double blend_threshold = 0.9;
    double teleop_cap = 10.0; // 20.0 in the policy-blending setting
    double collab_cap = 100.0;

    Region teleop_workspace{0.0, 0.40, 0.0, 0.30};
    Vector2d teleop_start{0.20, 0.02};

    Region region_left{0.0, 0.40, 0.0, 0.40};
    Region region_right{0.60, 1.00, 0.0, 0.40};
    Vector2d robot_home{0.50, 0.05};
    Vector2d human_start{0.50, 0.35};
    Vector2d replan_center{0.50, 0.20};
    double replan_radius = 0.10;

    double goal_half_side = 0.03;
    double mdp_cell = 0.06;
    double mdp_gamma = 0.9999;
    double mdp_temperature = 0.001;
    double vi_tol = 1e-9;
    int vi_max_iters = 200000;

    int occupancy_size = 32;

    /// Bounding box of the collaboration table (both regions and the agent
    /// start points).
    Region collab_bounds() const
    {
        return Region{region_left.x_min, region_right.x_max, region_left.y_min, region_left.y_max};
    }
};

enum class TeleopPolicy { SharedAutonomy, Blend };

struct TeleopScenario {
    Vector2d goal1; // the human's intended goal
    Vector2d goal2;
    VectorXd eta;   // five nonnegative waypoint-noise parameters
};

struct CollabScenario {
    std::vector<Vector2d> goals;         // three goal objects
    bool softmax_human = false;          // human-policy-search setting
    double beta_h = 0.0;                 // inverse softmax temperature
    double v_mult = 1.0;                 // human velocity multiplier
};

enum class AgentState { MovingToGoal, WaitingForSpace, WorkingOnGoal, Resetting, Replanning, Done };

inline const char* agent_state_name(AgentState s)
{
    switch (s) {
    case AgentState::MovingToGoal: return "moving-to-goal";
    case AgentState::WaitingForSpace: return "waiting-for-space";
    case AgentState::WorkingOnGoal: return "working-on-goal";
    case AgentState::Resetting: return "resetting";
    case AgentState::Replanning: return "replanning";
    case AgentState::Done: return "done";
    }
    return "?";
}

struct TickRecord {
    double t = 0.0;
    Vector2d human_pos{0, 0};
    Vector2d robot_pos{0, 0};
    AgentState human_state = AgentState::MovingToGoal;
    AgentState robot_state = AgentState::MovingToGoal;
    VectorXd belief;            // over goals (zeros for removed candidates)
    std::vector<int> goal_to_go; // F map, -1 when undefined
};

struct SimOutcome {
    bool ok = true;
    std::string error;

    double f = 0.0;       // objective in seconds (possibly capped)
    VectorXd m;           // domain measures
    bool success = false; // reached/completed before the cap

    std::vector<VectorXd> grids; // occupancy grids, one per channel, each nxn summing to 1

    double wait_time = 0.0;
    int replan_count = 0;
    double max_wrong_goal_prob = 0.0;
    std::vector<double> wrong_goal_trace;

    std::vector<TickRecord> trace;
};

} // namespace sasgen::sim
