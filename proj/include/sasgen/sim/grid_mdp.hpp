#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <sasgen/core/random.hpp>
#include <sasgen/sim/types.hpp>

namespace sasgen::sim {

/// 8-connected action offsets, in a fixed order.
inline constexpr int kActionDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
inline constexpr int kActionDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

inline bool action_is_diagonal(int a) { return kActionDx[a] != 0 && kActionDy[a] != 0; }

/// Grid MDP over the workspace the human moves in. States are square cells
/// the size of a goal object; rewards are -0.01 per orthogonal move,
/// -0.01*sqrt(2) per diagonal move, -1 for bumping an obstacle (the agent
/// stays in place), and +1 for entering the absorbing goal cell.
class GridMdp {
public:
    GridMdp(const Region& bounds, double cell, std::vector<Vector2d> goals)
        : origin_(bounds.x_min, bounds.y_min), cell_(cell), goals_(std::move(goals))
    {
        nx_ = static_cast<int>(std::ceil((bounds.x_max - bounds.x_min) / cell - 1e-9));
        ny_ = static_cast<int>(std::ceil((bounds.y_max - bounds.y_min) / cell - 1e-9));
        if (nx_ < 1 || ny_ < 1)
            throw std::invalid_argument("GridMdp: degenerate bounds");
        goal_cells_.reserve(goals_.size());
        for (const auto& g : goals_)
            goal_cells_.push_back(locate(g));
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int states() const { return nx_ * ny_; }
    double cell_size() const { return cell_; }
    int goal_cell(int g) const { return goal_cells_[static_cast<std::size_t>(g)]; }

    bool in_grid(const Vector2d& p) const
    {
        const double x = p.x() - origin_.x(), y = p.y() - origin_.y();
        return x >= -1e-9 && y >= -1e-9 && x <= nx_ * cell_ + 1e-9 && y <= ny_ * cell_ + 1e-9;
    }

    int locate(const Vector2d& p) const
    {
        if (!in_grid(p))
            throw std::invalid_argument("GridMdp: position outside grid");
        int ix = static_cast<int>(std::floor((p.x() - origin_.x()) / cell_));
        int iy = static_cast<int>(std::floor((p.y() - origin_.y()) / cell_));
        ix = std::max(0, std::min(nx_ - 1, ix));
        iy = std::max(0, std::min(ny_ - 1, iy));
        return iy * nx_ + ix;
    }

    Vector2d cell_center(int s) const
    {
        const int ix = s % nx_, iy = s / nx_;
        return origin_ + Vector2d((ix + 0.5) * cell_, (iy + 0.5) * cell_);
    }

    /// Destination state of an action; obstacle/off-grid moves stay in place.
    int transition(int s, int a, const std::vector<char>& obstacle) const
    {
        const int ix = s % nx_ + kActionDx[a];
        const int iy = s / nx_ + kActionDy[a];
        if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_)
            return s;
        const int t = iy * nx_ + ix;
        return obstacle[static_cast<std::size_t>(t)] ? s : t;
    }

    double reward(int s, int a, int goal_cell_idx, const std::vector<char>& obstacle) const
    {
        const int ix = s % nx_ + kActionDx[a];
        const int iy = s / nx_ + kActionDy[a];
        if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_)
            return -1.0;
        const int t = iy * nx_ + ix;
        if (obstacle[static_cast<std::size_t>(t)])
            return -1.0;
        if (t == goal_cell_idx)
            return 1.0;
        return action_is_diagonal(a) ? -0.01 * std::sqrt(2.0) : -0.01;
    }

    /// Obstacle mask for the MDP of goal `g`: every other goal blocks.
    std::vector<char> obstacles_for_goal(int g) const
    {
        std::vector<char> obs(static_cast<std::size_t>(states()), 0);
        for (std::size_t i = 0; i < goal_cells_.size(); i++)
            if (static_cast<int>(i) != g)
                obs[static_cast<std::size_t>(goal_cells_[i])] = 1;
        return obs;
    }

private:
    Vector2d origin_;
    double cell_;
    int nx_ = 0, ny_ = 0;
    std::vector<Vector2d> goals_;
    std::vector<int> goal_cells_;
};

struct QTable {
    std::vector<double> q; // states x 8
    std::vector<double> v; // soft state values
    std::vector<char> obstacle;
    int goal_cell = -1;

    double operator()(int s, int a) const { return q[static_cast<std::size_t>(s) * 8 + static_cast<std::size_t>(a)]; }
    double value(int s) const { return v[static_cast<std::size_t>(s)]; }
};

/// Soft Bellman iteration V(s) = tau * logsumexp_a(Q(s,a)/tau) to a sup-norm
/// change below `tol`. The goal cell is absorbing with value zero.
inline QTable softmax_value_iteration(const GridMdp& mdp, int goal, double gamma, double temperature,
    double tol = 1e-9, int max_iters = 200000)
{
    const int S = mdp.states();
    QTable table;
    table.obstacle = mdp.obstacles_for_goal(goal);
    table.goal_cell = mdp.goal_cell(goal);
    table.q.assign(static_cast<std::size_t>(S) * 8, 0.0);
    table.v.assign(static_cast<std::size_t>(S), 0.0);

    std::vector<double> v(static_cast<std::size_t>(S), 0.0), v_next(static_cast<std::size_t>(S), 0.0);
    const double tau = temperature;
    bool converged = false;
    for (int it = 0; it < max_iters; it++) {
        double change = 0.0;
        for (int s = 0; s < S; s++) {
            if (s == table.goal_cell) {
                v_next[static_cast<std::size_t>(s)] = 0.0;
                continue;
            }
            double qmax = -std::numeric_limits<double>::infinity();
            double qs[8];
            for (int a = 0; a < 8; a++) {
                const int t = mdp.transition(s, a, table.obstacle);
                qs[a] = mdp.reward(s, a, table.goal_cell, table.obstacle) + gamma * v[static_cast<std::size_t>(t)];
                qmax = std::max(qmax, qs[a]);
            }
            double z = 0.0;
            for (int a = 0; a < 8; a++)
                z += std::exp((qs[a] - qmax) / tau);
            const double nv = qmax + tau * std::log(z);
            change = std::max(change, std::abs(nv - v[static_cast<std::size_t>(s)]));
            v_next[static_cast<std::size_t>(s)] = nv;
        }
        v.swap(v_next);
        if (change < tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw std::runtime_error("softmax_value_iteration: no convergence (grid inconsistency?)");

    for (int s = 0; s < S; s++) {
        table.v[static_cast<std::size_t>(s)] = s == table.goal_cell ? 0.0 : v[static_cast<std::size_t>(s)];
        for (int a = 0; a < 8; a++) {
            if (s == table.goal_cell) {
                table.q[static_cast<std::size_t>(s) * 8 + static_cast<std::size_t>(a)] = 0.0;
                continue;
            }
            const int t = mdp.transition(s, a, table.obstacle);
            table.q[static_cast<std::size_t>(s) * 8 + static_cast<std::size_t>(a)] =
                mdp.reward(s, a, table.goal_cell, table.obstacle) + gamma * v[static_cast<std::size_t>(t)];
        }
    }
    return table;
}

/// Greedy action with ties broken by the lowest action index.
inline int greedy_action(const QTable& t, int s)
{
    int best = 0;
    double bq = t(s, 0);
    for (int a = 1; a < 8; a++)
        if (t(s, a) > bq) {
            bq = t(s, a);
            best = a;
        }
    return best;
}

/// Softmax action sample with inverse temperature beta.
inline int softmax_action(const QTable& t, int s, double beta, core::Rng& rng)
{
    double qmax = t(s, 0);
    for (int a = 1; a < 8; a++)
        qmax = std::max(qmax, t(s, a));
    double w[8], z = 0.0;
    for (int a = 0; a < 8; a++) {
        w[a] = std::exp(beta * (t(s, a) - qmax));
        z += w[a];
    }
    double u = rng.uniform() * z;
    for (int a = 0; a < 8; a++) {
        u -= w[a];
        if (u <= 0.0)
            return a;
    }
    return 7;
}

/// Maps an observed velocity onto the closest 8-connected action.
inline int nearest_action(const Vector2d& u)
{
    int best = 0;
    double bc = -2.0;
    const Vector2d un = u.normalized();
    for (int a = 0; a < 8; a++) {
        const Vector2d d = Vector2d(kActionDx[a], kActionDy[a]).normalized();
        const double c = un.dot(d);
        if (c > bc + 1e-12) {
            bc = c;
            best = a;
        }
    }
    return best;
}

} // namespace sasgen::sim
