#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include <sasgen/repair/qp.hpp>

namespace sasgen::repair {

using Eigen::Vector2d;
using Eigen::VectorXd;

struct Region {
    double x_min, x_max, y_min, y_max;

    bool contains(const Vector2d& p) const
    {
        return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
    }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

struct RepairProblem {
    std::vector<Region> regions;
    std::vector<Vector2d> positions; // original object centers
    std::vector<double> half_side;   // bounding-box half side per object

    int num_objects() const { return static_cast<int>(positions.size()); }
    int num_pairs() const { return num_objects() * (num_objects() - 1) / 2; }

    void validate() const
    {
        if (regions.empty() || positions.empty())
            throw std::invalid_argument("RepairProblem: need at least one region and one object");
        if (positions.size() != half_side.size())
            throw std::invalid_argument("RepairProblem: positions/half_side size mismatch");
        for (const auto& r : regions)
            if (!(r.x_min < r.x_max && r.y_min < r.y_max))
                throw std::invalid_argument("RepairProblem: degenerate region");
        for (double a : half_side)
            if (!(a > 0.0))
                throw std::invalid_argument("RepairProblem: half_side must be positive");
    }
};

/// Fixed values of the MIP binaries: a region per object and, per object
/// pair (i < j, lexicographic), one of the four sufficient separation sides.
struct BinaryAssignment {
    std::vector<int> region;
    enum Side { Left = 0, Right = 1, Down = 2, Up = 3 };
    std::vector<int> side;
};

struct FixedSolution {
    bool feasible = false;
    std::vector<Vector2d> positions;
    double cost = 0.0; // squared edit cost
};

struct RepairResult {
    std::vector<Vector2d> positions;
    double cost = 0.0;         // sum of squared displacements
    double displacement = 0.0; // sum of Euclidean displacements
    BinaryAssignment assignment;
};

/// All region-assignment x pair-separation combinations, in a fixed
/// enumeration order (regions vary fastest over later objects, then sides).
inline std::vector<BinaryAssignment> enumerate_assignments(const RepairProblem& p)
{
    p.validate();
    const int n = p.num_objects();
    const int nr = static_cast<int>(p.regions.size());
    if (n > 4 || nr > 4)
        throw std::invalid_argument("enumerate_assignments: desk-scale limit is 4 objects and 4 regions");
    const int pairs = p.num_pairs();

    std::vector<BinaryAssignment> out;
    std::vector<int> reg(static_cast<std::size_t>(n), 0);
    std::vector<int> side(static_cast<std::size_t>(pairs), 0);

    const long total_regions = static_cast<long>(std::pow(nr, n));
    const long total_sides = static_cast<long>(std::pow(4, pairs));
    out.reserve(static_cast<std::size_t>(total_regions * total_sides));

    for (long rc = 0; rc < total_regions; rc++) {
        long r = rc;
        for (int i = 0; i < n; i++) {
            reg[static_cast<std::size_t>(i)] = static_cast<int>(r % nr);
            r /= nr;
        }
        for (long sc = 0; sc < total_sides; sc++) {
            long s = sc;
            for (int i = 0; i < pairs; i++) {
                side[static_cast<std::size_t>(i)] = static_cast<int>(s % 4);
                s /= 4;
            }
            out.push_back({reg, side});
        }
    }
    return out;
}

/// Solves the convex QP with binaries fixed: box bounds from the assigned
/// regions and one linear separation inequality per pair. The x and y
/// coordinates decouple into independent axis problems.
inline FixedSolution solve_fixed(const RepairProblem& p, const BinaryAssignment& asg,
    double tol = 1e-11)
{
    const int n = p.num_objects();
    if (static_cast<int>(asg.region.size()) != n || static_cast<int>(asg.side.size()) != p.num_pairs())
        throw std::invalid_argument("solve_fixed: malformed assignment");

    AxisProblem px, py;
    px.target.resize(n);
    py.target.resize(n);
    px.lo.resize(n);
    px.hi.resize(n);
    py.lo.resize(n);
    py.hi.resize(n);
    for (int i = 0; i < n; i++) {
        const Region& r = p.regions[static_cast<std::size_t>(asg.region[static_cast<std::size_t>(i)])];
        px.target[i] = p.positions[static_cast<std::size_t>(i)].x();
        py.target[i] = p.positions[static_cast<std::size_t>(i)].y();
        px.lo[i] = r.x_min;
        px.hi[i] = r.x_max;
        py.lo[i] = r.y_min;
        py.hi[i] = r.y_max;
    }
    int pair = 0;
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++, pair++) {
            const double sep = -(p.half_side[static_cast<std::size_t>(i)] + p.half_side[static_cast<std::size_t>(j)]);
            switch (asg.side[static_cast<std::size_t>(pair)]) {
            case BinaryAssignment::Left:
                px.diffs.push_back({i, j, sep}); // x_i - x_j <= -(a_i + a_j)
                break;
            case BinaryAssignment::Right:
                px.diffs.push_back({j, i, sep});
                break;
            case BinaryAssignment::Down:
                py.diffs.push_back({i, j, sep});
                break;
            case BinaryAssignment::Up:
                py.diffs.push_back({j, i, sep});
                break;
            default:
                throw std::invalid_argument("solve_fixed: bad separation side");
            }
        }

    FixedSolution sol;
    const AxisSolution sx = solve_axis(px, tol);
    if (!sx.feasible)
        return sol;
    const AxisSolution sy = solve_axis(py, tol);
    if (!sy.feasible)
        return sol;

    sol.feasible = true;
    sol.cost = sx.cost + sy.cost;
    sol.positions.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++)
        sol.positions[static_cast<std::size_t>(i)] = Vector2d(sx.v[i], sy.v[i]);
    return sol;
}

/// True when the original placement already satisfies some region inclusion
/// for every object and pairwise non-overlap.
inline bool placement_valid(const RepairProblem& p)
{
    const int n = p.num_objects();
    for (int i = 0; i < n; i++) {
        bool inside = false;
        for (const auto& r : p.regions)
            inside = inside || r.contains(p.positions[static_cast<std::size_t>(i)]);
        if (!inside)
            return false;
    }
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++) {
            const double s = p.half_side[static_cast<std::size_t>(i)] + p.half_side[static_cast<std::size_t>(j)];
            const Vector2d d = p.positions[static_cast<std::size_t>(i)] - p.positions[static_cast<std::size_t>(j)];
            if (std::abs(d.x()) < s && std::abs(d.y()) < s)
                return false;
        }
    return true;
}

/// Exact minimum-cost repair by enumerating all binary assignments, pruning
/// with the separation-free projection bound; ties go to the first
/// assignment in enumeration order.
inline RepairResult repair(const RepairProblem& p)
{
    p.validate();
    const int n = p.num_objects();

    RepairResult res;
    if (placement_valid(p)) {
        res.positions = p.positions;
        res.cost = 0.0;
        res.displacement = 0.0;
        res.assignment.region.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; i++)
            for (std::size_t r = 0; r < p.regions.size(); r++)
                if (p.regions[r].contains(p.positions[static_cast<std::size_t>(i)])) {
                    res.assignment.region[static_cast<std::size_t>(i)] = static_cast<int>(r);
                    break;
                }
        res.assignment.side.assign(static_cast<std::size_t>(p.num_pairs()), 0);
        return res;
    }

    // Per-object, per-region clamp costs give a lower bound per assignment.
    std::vector<std::vector<double>> clamp_cost(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++) {
        for (const auto& r : p.regions) {
            const Vector2d& q = p.positions[static_cast<std::size_t>(i)];
            const double dx = std::max({r.x_min - q.x(), 0.0, q.x() - r.x_max});
            const double dy = std::max({r.y_min - q.y(), 0.0, q.y() - r.y_max});
            clamp_cost[static_cast<std::size_t>(i)].push_back(dx * dx + dy * dy);
        }
    }

    const auto assignments = enumerate_assignments(p);
    double best = std::numeric_limits<double>::infinity();
    FixedSolution best_sol;
    const BinaryAssignment* best_asg = nullptr;
    for (const auto& asg : assignments) {
        double lb = 0.0;
        for (int i = 0; i < n; i++)
            lb += clamp_cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(asg.region[static_cast<std::size_t>(i)])];
        if (lb >= best)
            continue;
        const FixedSolution sol = solve_fixed(p, asg);
        if (sol.feasible && sol.cost < best - 1e-15) {
            best = sol.cost;
            best_sol = sol;
            best_asg = &asg;
        }
    }
    if (!best_asg)
        throw std::runtime_error("repair: all assignments infeasible");

    res.positions = best_sol.positions;
    res.cost = best_sol.cost;
    res.assignment = *best_asg;
    res.displacement = 0.0;
    for (int i = 0; i < n; i++)
        res.displacement += (res.positions[static_cast<std::size_t>(i)] - p.positions[static_cast<std::size_t>(i)]).norm();
    return res;
}

/// Single-workspace clamp repair for teleoperation parameter vectors:
/// goal coordinates clamp to the workspace box, trailing noise parameters
/// clamp to [0, noise_cap]. Returns the clamped vector and displacement sum.
struct TeleopRepair {
    VectorXd theta;
    double displacement = 0.0;
};

inline TeleopRepair repair_teleop(const VectorXd& theta, const Region& workspace,
    int num_goals, double noise_lo, double noise_hi)
{
    TeleopRepair out;
    out.theta = theta;
    for (int g = 0; g < num_goals; g++) {
        const double x = theta[2 * g], y = theta[2 * g + 1];
        const double cx = std::min(std::max(x, workspace.x_min), workspace.x_max);
        const double cy = std::min(std::max(y, workspace.y_min), workspace.y_max);
        out.theta[2 * g] = cx;
        out.theta[2 * g + 1] = cy;
        out.displacement += std::hypot(cx - x, cy - y);
    }
    for (Eigen::Index i = 2 * num_goals; i < theta.size(); i++) {
        const double c = std::min(std::max(theta[i], noise_lo), noise_hi);
        out.displacement += std::abs(c - theta[i]);
        out.theta[i] = c;
    }
    return out;
}

/// Objective regularization: discounts the raw objective by the repair
/// displacement. The result feeds the training archive only.
inline double regularize(double f_raw, double displacement_sum, double weight)
{
    if (weight < 0.0)
        throw std::invalid_argument("regularize: weight must be nonnegative");
    return f_raw - weight * displacement_sum;
}

} // namespace sasgen::repair
