#include <catch2/catch_amalgamated.hpp>

#include <sasgen/qd/archive.hpp>
#include <sasgen/qd/cma_es.hpp>
#include <sasgen/qd/emitters.hpp>

#include <cmath>
#include <set>

using namespace sasgen;
using namespace sasgen::qd;

namespace {

VectorXd vec2(double a, double b)
{
    VectorXd v(2);
    v << a, b;
    return v;
}

Elite elite(double f, const VectorXd& m, const VectorXd& theta = VectorXd::Zero(2))
{
    Elite e;
    e.theta = theta;
    e.f = f;
    e.m = m;
    return e;
}

} // namespace

TEST_CASE("cell index arithmetic on the teleoperation preset")
{
    const auto spec = ArchiveSpec::teleop();
    CHECK(spec.total_cells() == 2500);

    CHECK(cell_coords(spec, vec2(0.0, 0.0)) == std::vector<int>{0, 0});

    // 0.16 in [0, 0.32] with 25 bins: 0.5 * 25 = 12.5 -> bin 12.
    CHECK(cell_coords(spec, vec2(0.16, 0.0))[0] == 12);

    // Above the upper bound clamps to the boundary cell.
    CHECK(cell_coords(spec, vec2(0.40, 0.0))[0] == 24);

    CHECK_THROWS_AS(cell_index(spec, vec2(std::nan(""), 0.0)), std::invalid_argument);
}

TEST_CASE("map-elites addition is strictly elitist")
{
    Archive a(ArchiveSpec::teleop());
    CHECK(a.add_map_elites(elite(3.0, vec2(0.1, 0.05))).status == AddStatus::Inserted);
    CHECK(a.add_map_elites(elite(5.0, vec2(0.1, 0.05))).status == AddStatus::Replaced);
    CHECK(a.add_map_elites(elite(4.0, vec2(0.1, 0.05))).status == AddStatus::Rejected);
    // Ties reject.
    CHECK(a.add_map_elites(elite(5.0, vec2(0.1, 0.05))).status == AddStatus::Rejected);
    CHECK(a.occupied() == 1);
}

TEST_CASE("cma-mae threshold annealing")
{
    Archive a(ArchiveSpec::teleop(), true, 0.1, 0.0);
    auto r = a.add_cma_mae(elite(10.0, vec2(0.1, 0.05)));
    CHECK(r.status == AddStatus::Inserted);
    CHECK(r.improvement == Catch::Approx(10.0));
    CHECK(a.threshold(r.cell) == Catch::Approx(1.0));

    Archive b(ArchiveSpec::teleop(), true, 0.1, 2.0);
    auto rb = b.add_cma_mae(elite(1.0, vec2(0.1, 0.05)));
    CHECK(rb.status == AddStatus::Rejected);
    CHECK(rb.improvement == Catch::Approx(-1.0));
    CHECK(b.threshold(rb.cell) == Catch::Approx(2.0));
}

TEST_CASE("qd score sums raw objectives over occupied cells")
{
    Archive a(ArchiveSpec::teleop());
    CHECK(a.qd_score() == 0.0);
    a.add_map_elites(elite(5.0, vec2(0.02, 0.01)));
    a.add_map_elites(elite(3.0, vec2(0.25, 0.09)));
    CHECK(a.qd_score() == Catch::Approx(8.0));
}

TEST_CASE("archive laws under random offer streams")
{
    core::Rng rng(101);
    Archive flat(ArchiveSpec::teleop());
    Archive soft1(ArchiveSpec::teleop(), true, 1.0, 0.0);
    Archive soft(ArchiveSpec::teleop(), true, 0.1, 0.0);

    double last_score = 0.0;
    for (int i = 0; i < 10000; i++) {
        Elite e = elite(rng.uniform(0.0, 10.0), vec2(rng.uniform(-0.1, 0.5), rng.uniform(-0.02, 0.15)));
        const int cell_before = cell_index(soft.spec(), e.m);
        const double t_before = soft.threshold(cell_before);
        flat.add_map_elites(e);
        soft1.add_cma_mae(e);
        soft.add_cma_mae(e);

        // QD-score of the flat archive is nondecreasing.
        const double score = flat.qd_score();
        CHECK(score >= last_score);
        last_score = score;

        // Soft thresholds never decrease when min_f = 0 and f >= 0.
        CHECK(soft.threshold(cell_before) >= t_before);
    }

    // alpha = 1 degenerates the soft archive to MAP-Elites behavior.
    REQUIRE(soft1.occupied() == flat.occupied());
    for (int idx : flat.occupied_cells()) {
        REQUIRE(soft1.cell(idx).has_value());
        CHECK(soft1.cell(idx)->f == flat.cell(idx)->f);
        CHECK(soft1.cell(idx)->theta == flat.cell(idx)->theta);
    }

    // Every stored elite re-maps to its own cell.
    for (const Archive* a : {&flat, &soft}) {
        for (int idx : a->occupied_cells())
            CHECK(cell_index(a->spec(), a->cell(idx)->m) == idx);
    }
}

TEST_CASE("cma-es ask: sample statistics and degenerate step size")
{
    VectorXd mean(3);
    mean << 1.0, -2.0, 0.5;

    SECTION("sigma -> 0 collapses samples onto the mean")
    {
        CmaEs es(mean, 1e-14, 8, 7);
        for (const auto& x : es.ask())
            CHECK((x - mean).norm() < 1e-10);
    }

    SECTION("lambda candidates of the right dimension")
    {
        CmaEs es(mean, 0.5, 36, 7);
        auto xs = es.ask();
        CHECK(xs.size() == 36);
        for (const auto& x : xs)
            CHECK(x.size() == 3);
    }

    SECTION("empirical mean within three standard errors")
    {
        CmaEs es(mean, 0.7, 10000, 99);
        auto xs = es.ask();
        VectorXd avg = VectorXd::Zero(3);
        for (const auto& x : xs)
            avg += x;
        avg /= 10000.0;
        const double se = 0.7 / std::sqrt(10000.0);
        for (int j = 0; j < 3; j++)
            CHECK(std::abs(avg[j] - mean[j]) < 3.0 * se);
    }
}

TEST_CASE("cma-es solves the 9-d sphere to 1e-6")
{
    // Maximization of f(x) = -||x||^2 with ranking by f.
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        VectorXd x0 = VectorXd::Constant(9, 0.5);
        CmaEs es(x0, 0.3, 36, seed);
        long evals = 0;
        double best = -1e300;
        while (evals < 20000) {
            auto xs = es.ask();
            evals += static_cast<long>(xs.size());
            std::vector<int> order(xs.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return -xs[static_cast<std::size_t>(a)].squaredNorm() > -xs[static_cast<std::size_t>(b)].squaredNorm();
            });
            std::vector<VectorXd> ranked;
            for (int i : order)
                ranked.push_back(xs[static_cast<std::size_t>(i)]);
            best = std::max(best, -ranked[0].squaredNorm());
            if (best > -1e-6)
                break;
            es.tell(ranked);
        }
        INFO("seed " << seed << " evals " << evals);
        CHECK(best > -1e-6);
    }
}

TEST_CASE("cma-es tell bookkeeping and unbiased equal-rank recombination")
{
    SECTION("generation counter increments once per tell")
    {
        CmaEs es(VectorXd::Zero(2), 0.5, 6, 3);
        auto xs = es.ask();
        CHECK(es.generation() == 0);
        es.tell(xs);
        CHECK(es.generation() == 1);
    }

    SECTION("equal improvements drift the mean with no preferred direction")
    {
        // With all candidates ranked equally (ask order), the recombined step
        // is a random variable with zero expectation.
        const int trials = 400;
        VectorXd total = VectorXd::Zero(2);
        double step_norm2 = 0.0;
        for (int t = 0; t < trials; t++) {
            CmaEs es(VectorXd::Zero(2), 1.0, 8, 1000 + static_cast<std::uint64_t>(t));
            auto xs = es.ask();
            es.tell(xs);
            total += es.mean();
            step_norm2 += es.mean().squaredNorm();
        }
        const VectorXd avg = total / trials;
        const double se = std::sqrt(step_norm2 / trials / trials);
        CHECK(avg.norm() < 3.0 * se + 1e-12);
    }
}

TEST_CASE("map-elites emitter bootstrap and elite perturbation")
{
    VectorXd lo = vec2(-1.0, 0.0), hi = vec2(1.0, 2.0);
    Archive a(ArchiveSpec::teleop());

    MapElitesEmitter em(vec2(0.0, 0.0), lo, hi, 42);
    auto boot = em.ask(a, 16);
    REQUIRE(boot.size() == 16);
    for (const auto& x : boot) {
        CHECK(x[0] >= -1.0);
        CHECK(x[0] <= 1.0);
        CHECK(x[1] >= 0.0);
        CHECK(x[1] <= 2.0);
    }

    // With sigma = 0 candidates equal sampled elites.
    a.add_map_elites(elite(1.0, vec2(0.1, 0.05), vec2(0.25, 0.75)));
    auto xs = em.ask(a, 5);
    for (const auto& x : xs)
        CHECK((x - vec2(0.25, 0.75)).norm() == 0.0);
}

TEST_CASE("emitter candidate streams are reproducible per seed")
{
    VectorXd lo = vec2(-1.0, 0.0), hi = vec2(1.0, 2.0);
    Archive a(ArchiveSpec::teleop());
    MapElitesEmitter e1(vec2(0.01, 0.01), lo, hi, 9);
    MapElitesEmitter e2(vec2(0.01, 0.01), lo, hi, 9);
    auto x1 = e1.ask(a, 8), x2 = e2.ask(a, 8);
    for (std::size_t i = 0; i < x1.size(); i++)
        CHECK(x1[i] == x2[i]);

    CmaEs c1(VectorXd::Zero(3), 0.4, 6, 17), c2(VectorXd::Zero(3), 0.4, 6, 17);
    auto a1 = c1.ask(), a2 = c2.ask();
    for (std::size_t i = 0; i < a1.size(); i++)
        CHECK(a1[i] == a2[i]);
}

namespace {

// Synthetic quadratic objective with identity measures over [-1, 1]^2.
EmitterEval quad_eval(const VectorXd& x)
{
    EmitterEval ev;
    ev.f = 10.0 - x.squaredNorm();
    ev.m = x;
    return ev;
}

ArchiveSpec unit_box_spec()
{
    return ArchiveSpec({{-1.0, 1.0, 20}, {-1.0, 1.0, 20}});
}

} // namespace

TEST_CASE("cma-mae emitter fills more cells than random search on a quadratic")
{
    std::vector<int> mae_cells, rnd_cells;
    for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
        const int budget = 1800;

        Archive training(unit_box_spec(), true, 0.1, 0.0);
        CmaMaeEmitter em(VectorXd::Zero(2), 0.3, 36, seed);
        int evals = 0;
        while (evals + 36 <= budget) {
            em.step(training, quad_eval);
            evals += 36;
        }
        mae_cells.push_back(training.occupied());

        Archive rnd(unit_box_spec());
        core::Rng rng(seed);
        // Random proposals over a wide box; same evaluation budget.
        auto xs = random_search_ask(vec2(-2.0, -2.0), vec2(2.0, 2.0), evals, rng);
        for (const auto& x : xs) {
            auto ev = quad_eval(x);
            rnd.add_map_elites(elite(ev.f, ev.m, x));
        }
        rnd_cells.push_back(rnd.occupied());
    }
    std::sort(mae_cells.begin(), mae_cells.end());
    std::sort(rnd_cells.begin(), rnd_cells.end());
    INFO("cma-mae median " << mae_cells[1] << " random median " << rnd_cells[1]);
    CHECK(mae_cells[1] > rnd_cells[1]);
}

TEST_CASE("gradient arborescence emitter on an analytic linear benchmark")
{
    // f linear, measures linear: every cell of the archive is reachable.
    auto grad_eval = [](const VectorXd& x) {
        GradientEval ge;
        ge.f = x[0];
        ge.m = x.segment(1, 2);
        ge.grad_f = VectorXd::Zero(3);
        ge.grad_f[0] = 1.0;
        ge.grad_m = {VectorXd::Zero(3), VectorXd::Zero(3)};
        ge.grad_m[0][1] = 1.0;
        ge.grad_m[1][2] = 1.0;
        return ge;
    };
    auto predict = [](const VectorXd& x) {
        EmitterEval ev;
        ev.f = x[0];
        ev.m = x.segment(1, 2);
        return ev;
    };

    Archive training(unit_box_spec(), true, 0.1, 0.0);
    CmaMaegaEmitter em(VectorXd::Zero(3), 0.2, 36, 2, 31);
    int branch_evals = 0;
    while (branch_evals < 10000 && training.occupied() < 380)
        branch_evals += em.step(training, grad_eval, predict);
    INFO("filled " << training.occupied() << "/400 cells in " << branch_evals << " branch evals");
    CHECK(training.occupied() >= 380); // 95% of the 400 reachable cells
}

TEST_CASE("gradient arborescence degenerate cases")
{
    SECTION("all-zero gradients branch to theta itself and leave it unchanged")
    {
        auto grad_eval = [](const VectorXd& x) {
            GradientEval ge;
            ge.f = 1.0;
            ge.m = x.segment(0, 2);
            ge.grad_f = VectorXd::Zero(2);
            ge.grad_m = {VectorXd::Zero(2), VectorXd::Zero(2)};
            return ge;
        };
        std::vector<VectorXd> seen;
        auto predict = [&](const VectorXd& x) {
            seen.push_back(x);
            EmitterEval ev;
            ev.f = 1.0;
            ev.m = x.segment(0, 2);
            return ev;
        };
        Archive training(unit_box_spec(), true, 0.1, 0.0);
        VectorXd t0 = vec2(0.3, -0.2);
        CmaMaegaEmitter em(t0, 0.5, 8, 2, 3);
        em.step(training, grad_eval, predict);
        for (const auto& x : seen)
            CHECK((x - t0).norm() == 0.0);
    }

    SECTION("nan gradients trigger a restart")
    {
        auto grad_eval = [](const VectorXd& x) {
            GradientEval ge;
            ge.f = 1.0;
            ge.m = x.segment(0, 2);
            ge.grad_f = VectorXd::Constant(2, std::nan(""));
            ge.grad_m = {VectorXd::Zero(2), VectorXd::Zero(2)};
            return ge;
        };
        auto predict = [](const VectorXd& x) {
            EmitterEval ev;
            ev.f = 1.0;
            ev.m = x.segment(0, 2);
            return ev;
        };
        Archive training(unit_box_spec(), true, 0.1, 0.0);
        CmaMaegaEmitter em(vec2(0.3, -0.2), 0.5, 8, 2, 3);
        CHECK(em.step(training, grad_eval, predict) == 0);
        CHECK(em.restarts() == 1);
        CHECK((em.theta() - vec2(0.3, -0.2)).norm() == 0.0); // empty archive: back to theta0
    }

    SECTION("branches move along the normalized objective gradient with nonnegative coefficient")
    {
        auto grad_eval = [](const VectorXd& x) {
            GradientEval ge;
            ge.f = 5.0 * x[0];
            ge.m = x.segment(0, 2);
            ge.grad_f = vec2(5.0, 0.0); // normalizes to e1
            ge.grad_m = {VectorXd::Zero(2), VectorXd::Zero(2)};
            return ge;
        };
        std::vector<VectorXd> seen;
        VectorXd t0 = vec2(0.0, 0.0);
        auto predict = [&](const VectorXd& x) {
            seen.push_back(x);
            EmitterEval ev;
            ev.f = 5.0 * x[0];
            ev.m = x.segment(0, 2);
            return ev;
        };
        Archive training(unit_box_spec(), true, 0.1, 0.0);
        CmaMaegaEmitter em(t0, 0.5, 8, 2, 3);
        em.step(training, grad_eval, predict);
        for (const auto& x : seen) {
            CHECK(x[1] == 0.0);    // measure gradients are zero
            CHECK(x[0] >= 0.0);    // |c0| branch coefficient
        }
    }
}

TEST_CASE("random search ask")
{
    core::Rng rng(55);
    VectorXd lo = vec2(-2.0, 1.0), hi = vec2(2.0, 3.0);

    CHECK(random_search_ask(lo, hi, 0, rng).empty());

    auto xs = random_search_ask(lo, hi, 10000, rng);
    VectorXd avg = VectorXd::Zero(2);
    for (const auto& x : xs) {
        REQUIRE(x[0] >= lo[0]);
        REQUIRE(x[0] <= hi[0]);
        REQUIRE(x[1] >= lo[1]);
        REQUIRE(x[1] <= hi[1]);
        avg += x;
    }
    avg /= 10000.0;
    // Per-dimension mean within three standard errors of the box center.
    for (int j = 0; j < 2; j++) {
        const double se = (hi[j] - lo[j]) / std::sqrt(12.0) / std::sqrt(10000.0);
        CHECK(std::abs(avg[j] - 0.5 * (lo[j] + hi[j])) < 3.0 * se);
    }
}
