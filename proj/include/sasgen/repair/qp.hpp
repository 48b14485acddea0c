#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace sasgen::repair {

/// One axis of the fixed-assignment repair QP:
///   min sum (v_i - target_i)^2
///   s.t. lo_i <= v_i <= hi_i and v_a - v_b <= c for each difference row.
/// Region and separation constraints decouple per coordinate axis once the
/// binary assignment is fixed, so the full QP splits into two of these.
struct AxisProblem {
    Eigen::VectorXd target;
    Eigen::VectorXd lo, hi;
    struct Diff {
        int a, b;
        double c;
    };
    std::vector<Diff> diffs;
};

struct AxisSolution {
    bool feasible = false;
    Eigen::VectorXd v;
    double cost = 0.0;
};

/// Feasibility of the difference-constraint system via Bellman-Ford on the
/// constraint graph (node 0 is the zero reference).
inline bool axis_feasible(const AxisProblem& p)
{
    const int n = static_cast<int>(p.target.size());
    struct Edge {
        int from, to;
        double w;
    };
    std::vector<Edge> edges;
    for (int i = 0; i < n; i++) {
        edges.push_back({0, i + 1, p.hi[i]});   // v_i <= hi
        edges.push_back({i + 1, 0, -p.lo[i]});  // -v_i <= -lo
    }
    for (const auto& d : p.diffs)
        edges.push_back({d.b + 1, d.a + 1, d.c}); // v_a - v_b <= c

    std::vector<double> dist(static_cast<std::size_t>(n) + 1, 0.0);
    for (int it = 0; it <= n + 1; it++) {
        bool changed = false;
        for (const auto& e : edges)
            if (dist[static_cast<std::size_t>(e.from)] + e.w < dist[static_cast<std::size_t>(e.to)] - 1e-12) {
                dist[static_cast<std::size_t>(e.to)] = dist[static_cast<std::size_t>(e.from)] + e.w;
                changed = true;
            }
        if (!changed)
            return true;
    }
    return false;
}

/// Hildreth dual coordinate ascent for the axis QP. The primal iterate
/// v = target - A^T lambda satisfies stationarity by construction; iterations
/// stop once every constraint is satisfied to `tol`.
inline AxisSolution solve_axis(const AxisProblem& p, double tol = 1e-11, int max_iters = 200000)
{
    AxisSolution sol;
    if (!axis_feasible(p))
        return sol;

    const int n = static_cast<int>(p.target.size());
    struct Row {
        int a;      // coefficient +1
        int b;      // coefficient -1, or -1 for none
        double rhs;
        double norm2;
    };
    std::vector<Row> rows;
    for (int i = 0; i < n; i++) {
        rows.push_back({i, -1, p.hi[i], 1.0});  //  v_i <= hi
    }
    for (int i = 0; i < n; i++) {
        // -v_i <= -lo encoded with a = -1 slot: use b as the positive-free marker.
        rows.push_back({-1 - i, -1, -p.lo[i], 1.0});
    }
    for (const auto& d : p.diffs)
        rows.push_back({d.a, d.b, d.c, 2.0});

    auto row_value = [&](const Row& r, const Eigen::VectorXd& v) {
        if (r.a >= 0 && r.b < 0)
            return v[r.a];
        if (r.a < 0)
            return -v[-1 - r.a];
        return v[r.a] - v[r.b];
    };
    auto row_axpy = [&](const Row& r, double coef, Eigen::VectorXd& v) {
        if (r.a >= 0 && r.b < 0)
            v[r.a] += coef;
        else if (r.a < 0)
            v[-1 - r.a] -= coef;
        else {
            v[r.a] += coef;
            v[r.b] -= coef;
        }
    };

    Eigen::VectorXd v = p.target;
    std::vector<double> lambda(rows.size(), 0.0);
    for (int it = 0; it < max_iters; it++) {
        for (std::size_t r = 0; r < rows.size(); r++) {
            const double resid = row_value(rows[r], v) - rows[r].rhs;
            const double delta = std::max(-lambda[r], resid / rows[r].norm2);
            if (delta != 0.0) {
                lambda[r] += delta;
                row_axpy(rows[r], -delta, v);
            }
        }
        // Termination needs a full pass: a later row update can re-violate an
        // earlier row within the same sweep.
        double worst = 0.0;
        for (const auto& r : rows)
            worst = std::max(worst, row_value(r, v) - r.rhs);
        if (worst <= tol)
            break;
    }

    sol.feasible = true;
    sol.v = v;
    sol.cost = (v - p.target).squaredNorm();
    return sol;
}

} // namespace sasgen::repair
