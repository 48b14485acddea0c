#include <catch2/catch_amalgamated.hpp>

#include <sasgen/core/random.hpp>
#include <sasgen/repair/repair.hpp>

#include "repair_oracle.hpp"

using namespace sasgen::repair;
using sasgen::core::Rng;

namespace {

// Desk geometry used across the collaboration tests: two square regions with
// a gap between them.
std::vector<Region> desk_regions()
{
    return {{0.0, 0.40, 0.0, 0.40}, {0.60, 1.00, 0.0, 0.40}};
}

RepairProblem random_problem(Rng& rng, int n = 3)
{
    RepairProblem p;
    p.regions = desk_regions();
    for (int i = 0; i < n; i++) {
        p.positions.emplace_back(rng.uniform(-0.10, 1.10), rng.uniform(-0.10, 0.50));
        p.half_side.push_back(0.03);
    }
    return p;
}

} // namespace

TEST_CASE("assignment enumeration counts")
{
    RepairProblem p3;
    p3.regions = desk_regions();
    for (int i = 0; i < 3; i++) {
        p3.positions.emplace_back(0.1, 0.1);
        p3.half_side.push_back(0.03);
    }
    CHECK(enumerate_assignments(p3).size() == 512); // 2^3 * 4^3

    RepairProblem p1;
    p1.regions = {desk_regions()[0]};
    p1.positions.emplace_back(0.1, 0.1);
    p1.half_side.push_back(0.03);
    CHECK(enumerate_assignments(p1).size() == 1);

    RepairProblem p2;
    p2.regions = desk_regions();
    for (int i = 0; i < 2; i++) {
        p2.positions.emplace_back(0.1, 0.1);
        p2.half_side.push_back(0.03);
    }
    CHECK(enumerate_assignments(p2).size() == 16); // 2^2 * 4

    RepairProblem p5 = p3;
    for (int i = 0; i < 2; i++) {
        p5.positions.emplace_back(0.1, 0.1);
        p5.half_side.push_back(0.03);
    }
    CHECK_THROWS_AS(enumerate_assignments(p5), std::invalid_argument);
}

TEST_CASE("fixed-assignment solve")
{
    SECTION("feasible originals are the identity solution")
    {
        RepairProblem p;
        p.regions = desk_regions();
        p.positions = {{0.10, 0.10}, {0.30, 0.30}};
        p.half_side = {0.03, 0.03};
        BinaryAssignment asg{{0, 0}, {BinaryAssignment::Left}};
        auto sol = solve_fixed(p, asg);
        REQUIRE(sol.feasible);
        CHECK(sol.cost == Catch::Approx(0.0).margin(1e-12));
        CHECK((sol.positions[0] - p.positions[0]).norm() < 1e-9);
    }

    SECTION("single object projects onto the region boundary")
    {
        RepairProblem p;
        p.regions = {{0.0, 0.40, 0.0, 0.40}};
        p.positions = {{0.50, 0.20}};
        p.half_side = {0.03};
        BinaryAssignment asg{{0}, {}};
        auto sol = solve_fixed(p, asg);
        REQUIRE(sol.feasible);
        CHECK(sol.positions[0].x() == Catch::Approx(0.40).margin(1e-9));
        CHECK(sol.positions[0].y() == Catch::Approx(0.20).margin(1e-9));
        CHECK(sol.cost == Catch::Approx(0.01).margin(1e-9));
    }

    SECTION("coincident pair separates symmetrically, matching a 1 mm grid oracle")
    {
        RepairProblem p;
        p.regions = {{0.0, 0.40, 0.0, 0.40}};
        p.positions = {{0.20, 0.20}, {0.20, 0.20}};
        p.half_side = {0.03, 0.03};
        BinaryAssignment asg{{0, 0}, {BinaryAssignment::Left}};
        auto sol = solve_fixed(p, asg);
        REQUIRE(sol.feasible);
        CHECK(sol.positions[0].x() == Catch::Approx(0.17).margin(1e-8));
        CHECK(sol.positions[1].x() == Catch::Approx(0.23).margin(1e-8));
        CHECK(sol.cost == Catch::Approx(0.0018).margin(1e-9));

        auto g = oracle::grid_repair(p, 0.001);
        CHECK(sol.cost <= g.cost + 1e-9);
        CHECK(g.cost <= sol.cost + oracle::grid_slack(sol.cost, 2, 0.001));
    }

    SECTION("contradictory separation sides are infeasible")
    {
        RepairProblem p;
        p.regions = {{0.0, 0.05, 0.0, 0.40}}; // too narrow for two boxes side by side
        p.positions = {{0.02, 0.20}, {0.03, 0.20}};
        p.half_side = {0.03, 0.03};
        BinaryAssignment asg{{0, 0}, {BinaryAssignment::Left}};
        auto sol = solve_fixed(p, asg);
        CHECK_FALSE(sol.feasible);
    }
}

TEST_CASE("repair finds the minimum-cost valid placement")
{
    SECTION("already-valid scenario is unchanged")
    {
        RepairProblem p;
        p.regions = desk_regions();
        p.positions = {{0.10, 0.10}, {0.30, 0.30}, {0.80, 0.20}};
        p.half_side = {0.03, 0.03, 0.03};
        auto r = repair(p);
        CHECK(r.cost == 0.0);
        CHECK(r.displacement == 0.0);
        for (int i = 0; i < 3; i++)
            CHECK((r.positions[static_cast<std::size_t>(i)] - p.positions[static_cast<std::size_t>(i)]).norm() == 0.0);
    }

    SECTION("object in the gap projects to the nearer region boundary")
    {
        RepairProblem p;
        p.regions = desk_regions();
        p.positions = {{0.45, 0.20}};
        p.half_side = {0.03};
        auto r = repair(p);
        CHECK(r.positions[0].x() == Catch::Approx(0.40).margin(1e-8));
        CHECK(r.positions[0].y() == Catch::Approx(0.20).margin(1e-8));
    }

    SECTION("random instances match the 5 mm grid oracle and satisfy constraints")
    {
        Rng rng(7);
        for (int trial = 0; trial < 30; trial++) {
            RepairProblem p = random_problem(rng);
            auto r = repair(p);

            // Constraint satisfaction to 1e-9.
            for (const auto& q : r.positions) {
                bool inside = false;
                for (const auto& reg : p.regions)
                    inside = inside
                        || (q.x() >= reg.x_min - 1e-9 && q.x() <= reg.x_max + 1e-9
                            && q.y() >= reg.y_min - 1e-9 && q.y() <= reg.y_max + 1e-9);
                CHECK(inside);
            }
            for (int i = 0; i < 3; i++)
                for (int j = i + 1; j < 3; j++) {
                    const Eigen::Vector2d d = r.positions[static_cast<std::size_t>(i)] - r.positions[static_cast<std::size_t>(j)];
                    CHECK(std::max(std::abs(d.x()), std::abs(d.y())) >= 0.06 - 1e-9);
                }

            // Cost consistency with the returned positions.
            double c = 0.0;
            for (int i = 0; i < 3; i++)
                c += (r.positions[static_cast<std::size_t>(i)] - p.positions[static_cast<std::size_t>(i)]).squaredNorm();
            CHECK(r.cost == Catch::Approx(c).margin(1e-9));

            // Oracle agreement within the grid resolution bound.
            auto g = oracle::grid_repair(p, 0.005);
            CHECK(r.cost <= g.cost + 1e-9);
            CHECK(g.cost <= r.cost + oracle::grid_slack(r.cost, 3, 0.005));

            // Idempotence.
            RepairProblem p2 = p;
            p2.positions = r.positions;
            auto r2 = repair(p2);
            CHECK(r2.cost < 1e-12);
        }
    }
}

TEST_CASE("teleoperation clamp repair")
{
    const Region ws{0.0, 0.40, 0.0, 0.30};
    const double cap = 0.112 * 0.112 / 5.0;

    SECTION("in-bounds parameters are unchanged")
    {
        Eigen::VectorXd theta(9);
        theta << 0.1, 0.1, 0.3, 0.2, 1e-3, 2e-3, 0.0, 1e-3, 2e-3;
        auto r = repair_teleop(theta, ws, 2, 0.0, cap);
        CHECK(r.displacement == 0.0);
        CHECK((r.theta - theta).norm() == 0.0);
    }

    SECTION("goal coordinate below the box clamps with its displacement recorded")
    {
        Eigen::VectorXd theta(9);
        theta << -0.05, 0.1, 0.3, 0.2, 0, 0, 0, 0, 0;
        auto r = repair_teleop(theta, ws, 2, 0.0, cap);
        CHECK(r.theta[0] == 0.0);
        CHECK(r.displacement == Catch::Approx(0.05));
    }

    SECTION("noise parameter above its cap clamps to the cap")
    {
        Eigen::VectorXd theta(9);
        theta << 0.1, 0.1, 0.3, 0.2, cap + 0.5, 0, 0, 0, 0;
        auto r = repair_teleop(theta, ws, 2, 0.0, cap);
        CHECK(r.theta[4] == Catch::Approx(cap));
        CHECK(r.displacement == Catch::Approx(0.5));
    }
}

TEST_CASE("objective regularization")
{
    CHECK(regularize(7.0, 0.0, 100.0) == 7.0);
    CHECK(regularize(50.0, 0.1, 100.0) == Catch::Approx(40.0));
    CHECK(regularize(50.0, 0.1, 0.0) == 50.0); // the no-regularization ablation
    CHECK_THROWS_AS(regularize(1.0, 1.0, -1.0), std::invalid_argument);
}
