#include <catch2/catch_amalgamated.hpp>

#include <sasgen/surrogate/model.hpp>

#include <cmath>
#include <cstdio>

using namespace sasgen;
using namespace sasgen::surrogate;
using Eigen::VectorXd;

namespace {

SurrogateConfig small_config(int n = 4, int k = 2, int channels = 1)
{
    SurrogateConfig cfg;
    cfg.param_dim = n;
    cfg.measure_dim = k;
    cfg.channels = channels;
    cfg.seed = 17;
    return cfg;
}

VectorXd delta_grid(int cell)
{
    VectorXd g = VectorXd::Zero(1024);
    g[cell] = 1.0;
    return g;
}

// Spread a distribution over a handful of cells.
VectorXd blob_grid(int cx, int cy)
{
    VectorXd g = VectorXd::Zero(1024);
    for (int dy = -1; dy <= 1; dy++)
        for (int dx = -1; dx <= 1; dx++) {
            const int x = std::clamp(cx + dx, 0, 31), y = std::clamp(cy + dy, 0, 31);
            g[y * 32 + x] += 1.0;
        }
    g /= g.sum();
    return g;
}

} // namespace

TEST_CASE("untrained occupancy predictions are normalized distributions")
{
    SurrogateModel model(small_config());
    core::Rng rng(3);
    for (int trial = 0; trial < 5; trial++) {
        VectorXd theta(4);
        for (int i = 0; i < 4; i++)
            theta[i] = rng.uniform(-1, 1);
        auto grids = model.predict_occupancy(theta);
        REQUIRE(grids.size() == 1);
        CHECK(grids[0].allFinite());
        CHECK(grids[0].minCoeff() >= 0.0);
        CHECK(grids[0].sum() == Catch::Approx(1.0).margin(1e-6));

        auto again = model.predict_occupancy(theta);
        CHECK((grids[0] - again[0]).norm() == 0.0);
    }
    CHECK_THROWS_AS(model.predict_occupancy(VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("prediction is deterministic and has the declared shapes")
{
    SurrogateModel model(small_config());
    VectorXd theta(4);
    theta << 0.1, -0.4, 0.25, 0.9;
    auto a = model.predict(theta);
    auto b = model.predict(theta);
    CHECK(a.f == b.f);
    CHECK((a.m - b.m).norm() == 0.0);
    CHECK(a.m.size() == 2);

    auto g = model.predict_with_grads(theta);
    CHECK(g.grad_f.size() == 4);
    REQUIRE(g.grad_m.size() == 2);
    CHECK(g.grad_m[0].size() == 4);
    CHECK(g.f == a.f);
}

TEST_CASE("input gradients match central finite differences")
{
    SurrogateModel model(small_config());
    core::Rng rng(11);
    const double eps = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 5; trial++) {
        VectorXd theta(4);
        for (int i = 0; i < 4; i++)
            theta[i] = rng.uniform(-1, 1);
        auto g = model.predict_with_grads(theta);
        for (int i = 0; i < 4; i++) {
            VectorXd tp = theta, tm = theta;
            tp[i] += eps;
            tm[i] -= eps;
            auto pp = model.predict(tp);
            auto pm = model.predict(tm);
            const double fd_f = (pp.f - pm.f) / (2 * eps);
            const double rf = std::abs(g.grad_f[i] - fd_f) / std::max({std::abs(g.grad_f[i]), std::abs(fd_f), 1e-10});
            worst = std::max(worst, rf);
            for (int j = 0; j < 2; j++) {
                const double fd_m = (pp.m[j] - pm.m[j]) / (2 * eps);
                const double rm = std::abs(g.grad_m[static_cast<std::size_t>(j)][i] - fd_m)
                    / std::max({std::abs(g.grad_m[static_cast<std::size_t>(j)][i]), std::abs(fd_m), 1e-10});
                worst = std::max(worst, rm);
            }
        }
    }
    INFO("max relative error " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("occupancy training drives the kl loss down")
{
    auto cfg = small_config();
    cfg.epochs = 10;
    SurrogateModel model(cfg);
    core::Rng rng(5);

    SECTION("identical samples")
    {
        Dataset data(4, 2, 1);
        for (int i = 0; i < 60; i++) {
            TrainingSample s;
            s.theta = VectorXd::Constant(4, 0.3);
            s.f = 5.0;
            s.m = VectorXd::Zero(2);
            s.grids = {blob_grid(20, 12)};
            data.append(std::move(s));
        }
        auto hist = model.train_occupancy(data, rng);
        REQUIRE(hist.size() == 10);
        CHECK((hist.back() < hist.front() || hist.back() < 1e-3));
        for (double h : hist)
            CHECK(std::isfinite(h));
    }

    SECTION("single-sample memorization")
    {
        auto cfg1 = small_config();
        cfg1.epochs = 300;
        cfg1.lr = 1e-3;
        SurrogateModel m1(cfg1);
        Dataset data(4, 2, 1);
        TrainingSample s;
        s.theta = VectorXd::Constant(4, -0.2);
        s.f = 1.0;
        s.m = VectorXd::Zero(2);
        s.grids = {blob_grid(8, 25)};
        data.append(std::move(s));
        auto hist = m1.train_occupancy(data, rng);
        INFO("final loss " << hist.back());
        CHECK(hist.back() < 0.05);
        CHECK(hist.back() < hist.front());
    }
}

TEST_CASE("downstream training converges to constant targets and freezes occupancy")
{
    auto cfg = small_config();
    cfg.epochs = 30;
    SurrogateModel model(cfg);
    core::Rng rng(9);

    Dataset data(4, 2, 1);
    for (int i = 0; i < 100; i++) {
        TrainingSample s;
        s.theta = VectorXd::NullaryExpr(4, [&](int) { return rng.uniform(-1.0, 1.0); });
        s.f = 7.0;
        s.m = VectorXd::Constant(2, 0.25);
        s.grids = {delta_grid(100)};
        data.append(std::move(s));
    }
    model.train_occupancy(data, rng);

    const VectorXd occ_before = model.occupancy_param_blob();
    auto hist = model.train_downstream(data, rng);
    const VectorXd occ_after = model.occupancy_param_blob();

    CHECK((occ_before - occ_after).norm() == 0.0);
    for (double h : hist)
        CHECK(std::isfinite(h));

    VectorXd held_out(4);
    held_out << 0.11, -0.52, 0.73, -0.99;
    auto p = model.predict(held_out);
    CHECK(std::abs(p.f - 7.0) < 0.5);
    CHECK(std::abs(p.m[0] - 0.25) < 0.2);
}

TEST_CASE("occupancy trained on right-half-plane data keeps mass off the left half")
{
    auto cfg = small_config();
    cfg.epochs = 100;
    cfg.lr = 3e-3;
    SurrogateModel model(cfg);
    core::Rng rng(23);

    // theta maps to a blob in the right half of the grid; the robot never
    // enters the left half anywhere in the dataset.
    Dataset data(4, 2, 1);
    std::vector<VectorXd> thetas;
    for (int i = 0; i < 120; i++) {
        VectorXd theta = VectorXd::NullaryExpr(4, [&](int) { return rng.uniform(0.0, 1.0); });
        const int cx = 17 + static_cast<int>(theta[0] * 13.9);
        const int cy = 1 + static_cast<int>(theta[1] * 29.9);
        TrainingSample s;
        s.theta = theta;
        s.f = 1.0;
        s.m = VectorXd::Zero(2);
        s.grids = {blob_grid(cx, cy)};
        thetas.push_back(theta);
        data.append(std::move(s));
    }
    model.train_occupancy(data, rng);

    double worst_left = 0.0;
    for (int i = 0; i < 20; i++) {
        auto grids = model.predict_occupancy(thetas[static_cast<std::size_t>(i)]);
        double left = 0.0;
        for (int y = 0; y < 32; y++)
            for (int x = 0; x < 16; x++)
                left += grids[0][y * 32 + x];
        worst_left = std::max(worst_left, left);
    }
    INFO("worst left-half mass " << worst_left);
    CHECK(worst_left < 0.2);
}

TEST_CASE("model evaluation metrics")
{
    const auto spec = qd::ArchiveSpec::teleop();

    SECTION("a memorized single sample evaluates perfectly")
    {
        auto cfg = small_config();
        cfg.epochs = 20;
        SurrogateModel model(cfg);
        core::Rng rng(31);
        Dataset data(4, 2, 1);
        TrainingSample s;
        s.theta = VectorXd::Constant(4, 0.5);
        s.f = 3.0;
        s.m = VectorXd::Constant(2, 0.05);
        s.grids = {delta_grid(7)};
        data.append(std::move(s));
        model.train_occupancy(data, rng);
        model.train_downstream(data, rng);
        auto mm = evaluate_model(model, data, spec);
        CHECK(mm.mae.maxCoeff() < 1e-6);
        CHECK(mm.cell_hit_rate == 1.0);
        CHECK(mm.mean_manhattan == 0.0);
    }

    SECTION("midpoint predictor Manhattan distance matches direct enumeration")
    {
        core::Rng rng(41);
        Dataset data(4, 2, 1);
        for (int i = 0; i < 50; i++) {
            TrainingSample s;
            s.theta = VectorXd::Zero(4);
            s.f = rng.uniform(0.0, 10.0);
            s.m = VectorXd(2);
            s.m << rng.uniform(0.0, 0.32), rng.uniform(0.0, 0.112);
            s.grids = {delta_grid(0)};
            data.append(std::move(s));
        }
        VectorXd mid(2);
        mid << 0.16, 0.056;
        auto midpoint = [&](const VectorXd&) {
            Prediction p;
            p.f = 5.0;
            p.m = mid;
            return p;
        };
        auto mm = evaluate_predictions(midpoint, data, spec);

        // Direct enumeration oracle.
        double manhattan = 0.0;
        int hits = 0;
        const auto mid_cell = qd::cell_coords(spec, mid);
        for (const auto& s : data.samples()) {
            const auto c = qd::cell_coords(spec, s.m);
            manhattan += std::abs(c[0] - mid_cell[0]) + std::abs(c[1] - mid_cell[1]);
            hits += c == mid_cell;
        }
        CHECK(mm.mean_manhattan == Catch::Approx(manhattan / 50.0));
        CHECK(mm.cell_hit_rate == Catch::Approx(hits / 50.0));
    }

    CHECK_THROWS_AS(evaluate_model(SurrogateModel(small_config()), Dataset(4, 2, 1), spec),
        std::invalid_argument);
}

TEST_CASE("trained model beats the predict-mean baseline on an analytic measure")
{
    // Teleoperation-style synthetic data: the first measure is the distance
    // between two goal points encoded in theta.
    auto cfg = small_config(4, 2, 1);
    cfg.epochs = 60;
    cfg.lr = 1e-3;
    SurrogateModel model(cfg);
    core::Rng rng(51);

    auto make_sample = [&]() {
        TrainingSample s;
        s.theta = VectorXd::NullaryExpr(4, [&](int i) { return rng.uniform(0.0, i % 2 == 0 ? 0.4 : 0.3); });
        const double dist = std::hypot(s.theta[0] - s.theta[2], s.theta[1] - s.theta[3]);
        s.f = 2.0;
        s.m = VectorXd(2);
        s.m << dist, 0.05;
        const int cx = std::clamp(static_cast<int>(s.theta[0] / 0.4 * 32), 0, 31);
        const int cy = std::clamp(static_cast<int>(s.theta[1] / 0.3 * 32), 0, 31);
        s.grids = {blob_grid(cx, cy)};
        return s;
    };

    Dataset train(4, 2, 1), test(4, 2, 1);
    for (int i = 0; i < 600; i++)
        train.append(make_sample());
    for (int i = 0; i < 100; i++)
        test.append(make_sample());

    model.train_occupancy(train, rng);
    model.train_downstream(train, rng);

    auto mm = evaluate_model(model, test, qd::ArchiveSpec::teleop());

    double mean_dist = 0.0;
    for (const auto& s : train.samples())
        mean_dist += s.m[0];
    mean_dist /= static_cast<double>(train.size());
    double baseline = 0.0;
    for (const auto& s : test.samples())
        baseline += std::abs(s.m[0] - mean_dist);
    baseline /= static_cast<double>(test.size());

    INFO("model MAE " << mm.mae[1] << " baseline " << baseline);
    CHECK(mm.mae[1] < 0.5 * baseline);
    CHECK(std::isfinite(mm.cell_hit_rate));
    CHECK(std::isfinite(mm.mean_manhattan));
}

TEST_CASE("checkpoint round-trip preserves predictions bit-exactly")
{
    auto cfg = small_config();
    cfg.epochs = 3;
    SurrogateModel model(cfg);
    core::Rng rng(61);
    Dataset data(4, 2, 1);
    for (int i = 0; i < 20; i++) {
        TrainingSample s;
        s.theta = VectorXd::NullaryExpr(4, [&](int) { return rng.uniform(-1.0, 1.0); });
        s.f = rng.uniform(0.0, 10.0);
        s.m = VectorXd::NullaryExpr(2, [&](int) { return rng.uniform(0.0, 1.0); });
        s.grids = {blob_grid(10, 10)};
        data.append(std::move(s));
    }
    model.train_occupancy(data, rng);
    model.train_downstream(data, rng);

    const std::string path = "/tmp/sasgen_test_ckpt.bin";
    model.save(path);
    SurrogateModel loaded = SurrogateModel::load(path);

    VectorXd theta(4);
    theta << 0.3, -0.8, 0.1, 0.9;
    auto a = model.predict(theta);
    auto b = loaded.predict(theta);
    CHECK(a.f == b.f);
    CHECK((a.m - b.m).norm() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("dataset file round-trip")
{
    core::Rng rng(71);
    Dataset data(3, 2, 2);
    for (int i = 0; i < 7; i++) {
        TrainingSample s;
        s.theta = VectorXd::NullaryExpr(3, [&](int) { return rng.uniform(-1.0, 1.0); });
        s.f = rng.uniform(0.0, 100.0);
        s.m = VectorXd::NullaryExpr(2, [&](int) { return rng.uniform(0.0, 1.0); });
        s.grids = {delta_grid(5), delta_grid(900)};
        data.append(std::move(s));
    }
    const std::string path = "/tmp/sasgen_test_dataset.bin";
    data.save(path);
    Dataset loaded = Dataset::load(path);
    REQUIRE(loaded.size() == 7);
    CHECK(loaded.channels() == 2);
    for (std::size_t i = 0; i < 7; i++) {
        CHECK((loaded[i].theta - data[i].theta).norm() == 0.0);
        CHECK(loaded[i].f == data[i].f);
        CHECK((loaded[i].grids[1] - data[i].grids[1]).norm() == 0.0);
    }
    std::remove(path.c_str());
}
