#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <sasgen/pipeline/experiment.hpp>
#include <sasgen/pipeline/worker_pool.hpp>
#include <sasgen/qd/emitters.hpp>
#include <sasgen/surrogate/model.hpp>

namespace sasgen::pipeline {

struct MetricsRow {
    long evals = 0;
    double wall_clock = 0.0;
    double qd_score = 0.0; // final archive, raw objectives
    int occupied = 0;
    double training_qd_score = 0.0;
};

struct RunResult {
    std::unique_ptr<qd::Archive> final_archive;
    std::unique_ptr<qd::Archive> training_archive;
    surrogate::Dataset dataset;
    std::vector<MetricsRow> history;
    std::shared_ptr<surrogate::SurrogateModel> model; // sas/dsas only
    long evals = 0;
    int outer_iterations = 0;

    /// Optional per-outer-iteration model checkpoint hook (path writing is
    /// the CLI's concern).
    std::function<void(int, const surrogate::SurrogateModel&)> checkpoint_hook;
};

/// Executes one experiment: the surrogate-assisted outer/inner loop for
/// dsas/sas, or the ground-truth-only baselines. Everything downstream of
/// the master seed is deterministic; one simulate call is one evaluation.
class Runner {
public:
    explicit Runner(ExperimentConfig cfg) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        workers_ = cfg_.workers > 0 ? cfg_.workers : worker_count_from_env();
    }

    RunResult run(const std::function<void(int, const surrogate::SurrogateModel&)>& checkpoint_hook = {})
    {
        const Domain dom(cfg_.domain, cfg_.sim, cfg_.reg_weight);
        const auto spec = dom.archive_spec();

        RunResult res;
        res.final_archive = std::make_unique<qd::Archive>(spec, false);
        const bool soft_training = cfg_.algorithm == Algorithm::CmaMae || cfg_.algorithm == Algorithm::Sas
            || cfg_.algorithm == Algorithm::Dsas;
        res.training_archive = std::make_unique<qd::Archive>(spec, soft_training, cfg_.alpha, cfg_.min_f);
        res.dataset = surrogate::Dataset(dom.param_dim(), dom.measure_dim(), dom.channels());

        start_ = std::chrono::steady_clock::now();
        switch (cfg_.algorithm) {
        case Algorithm::Random:
            run_random(dom, res);
            break;
        case Algorithm::MapElites:
            run_map_elites(dom, res);
            break;
        case Algorithm::CmaMae:
            run_cma_mae(dom, res);
            break;
        case Algorithm::Sas:
        case Algorithm::Dsas:
            run_surrogate_assisted(dom, res, checkpoint_hook);
            break;
        }
        return res;
    }

private:
    double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    /// Ground-truth labeling of a candidate batch: repairs, simulates (in
    /// parallel), then applies results in ask order. Aborted simulations
    /// consume budget but produce no archive/dataset rows.
    void label_batch(const Domain& dom, const std::vector<VectorXd>& thetas, RunResult& res)
    {
        const long remaining = cfg_.budget - res.evals;
        if (remaining <= 0)
            return;
        std::vector<VectorXd> batch(thetas.begin(),
            thetas.begin() + std::min<long>(remaining, static_cast<long>(thetas.size())));

        const std::uint64_t master = cfg_.seed;
        std::function<EvalResult(const VectorXd&)> eval = [&](const VectorXd& t) {
            return dom.evaluate(t, master);
        };
        const auto results = parallel_map(batch, eval, workers_);

        for (const auto& r : results) {
            res.evals++;
            if (!r.ok)
                continue;
            qd::Elite e;
            e.theta = r.theta;
            e.m = r.m;
            e.eval_index = res.evals - 1;
            e.displacement = r.displacement;

            e.f = r.f_train;
            res.training_archive->add(e);
            e.f = r.f_raw;
            res.final_archive->add_map_elites(e);

            surrogate::TrainingSample s;
            s.theta = r.theta;
            s.f = r.f_raw;
            s.m = r.m;
            s.grids = r.grids;
            res.dataset.append(std::move(s));
        }
        res.history.push_back({res.evals, elapsed(), res.final_archive->qd_score(),
            res.final_archive->occupied(), res.training_archive->qd_score()});
    }

    void run_random(const Domain& dom, RunResult& res)
    {
        core::Rng rng(core::derive_seed(cfg_.seed, 100));
        while (res.evals < cfg_.budget) {
            std::vector<VectorXd> batch;
            const long n = std::min<long>(cfg_.random_batch, cfg_.budget - res.evals);
            for (long i = 0; i < n; i++)
                batch.push_back(dom.sample_random(rng));
            label_batch(dom, batch, res);
        }
    }

    void run_map_elites(const Domain& dom, RunResult& res)
    {
        qd::MapElitesEmitter emitter(dom.map_elites_sigma(), dom.lower_bounds(), dom.upper_bounds(),
            core::derive_seed(cfg_.seed, 200));
        while (res.evals < cfg_.budget) {
            auto batch = emitter.ask(*res.training_archive, cfg_.batch);
            label_batch(dom, batch, res);
        }
    }

    void run_cma_mae(const Domain& dom, RunResult& res)
    {
        qd::CmaMaeEmitter emitter(dom.initial_theta(), dom.cma_sigma0(), cfg_.batch,
            core::derive_seed(cfg_.seed, 300));
        const std::uint64_t master = cfg_.seed;
        while (res.evals < cfg_.budget) {
            // The generation is evaluated through the emitter so that soft
            // archive improvements drive the CMA-ES ranking; final-archive
            // and dataset updates ride along per candidate.
            bool exhausted = false;
            auto evaluate = [&](const VectorXd& t) -> qd::EmitterEval {
                qd::EmitterEval ev;
                if (res.evals >= cfg_.budget || exhausted) {
                    exhausted = true;
                    ev.ok = false;
                    return ev;
                }
                const EvalResult r = dom.evaluate(t, master);
                res.evals++;
                if (!r.ok) {
                    ev.ok = false;
                    return ev;
                }
                qd::Elite e;
                e.theta = r.theta;
                e.m = r.m;
                e.eval_index = res.evals - 1;
                e.displacement = r.displacement;
                e.f = r.f_raw;
                res.final_archive->add_map_elites(e);

                surrogate::TrainingSample s;
                s.theta = r.theta;
                s.f = r.f_raw;
                s.m = r.m;
                s.grids = r.grids;
                res.dataset.append(std::move(s));

                // The soft training-archive add happens inside the emitter
                // with the training objective returned here; the repaired
                // parameters are what gets stored.
                ev.f = r.f_train;
                ev.m = r.m;
                ev.stored_theta = r.theta;
                return ev;
            };
            emitter.step(*res.training_archive, evaluate);
            res.history.push_back({res.evals, elapsed(), res.final_archive->qd_score(),
                res.final_archive->occupied(), res.training_archive->qd_score()});
        }
    }

    void run_surrogate_assisted(const Domain& dom, RunResult& res,
        const std::function<void(int, const surrogate::SurrogateModel&)>& checkpoint_hook)
    {
        surrogate::SurrogateConfig scfg;
        scfg.param_dim = dom.param_dim();
        scfg.measure_dim = dom.measure_dim();
        scfg.channels = dom.channels();
        scfg.lr = cfg_.surrogate_lr;
        scfg.batch_size = cfg_.surrogate_batch;
        scfg.epochs = cfg_.surrogate_epochs;
        scfg.seed = core::derive_seed(cfg_.seed, 400);
        res.model = std::make_shared<surrogate::SurrogateModel>(scfg);

        core::Rng select_rng(core::derive_seed(cfg_.seed, 500));
        core::Rng train_rng(core::derive_seed(cfg_.seed, 600));
        core::Rng fallback_rng(core::derive_seed(cfg_.seed, 700));

        const auto spec = dom.archive_spec();
        int outer = 0;
        while (res.evals < cfg_.budget) {
            // Inner loop: exploit the current model on a fresh surrogate archive.
            qd::Archive surr(spec, true, cfg_.alpha, cfg_.min_f);
            inner_loop(dom, surr, *res.model, outer);

            // Select solutions to label.
            std::vector<VectorXd> chosen = select_solutions(surr, select_rng);
            if (chosen.empty())
                for (int i = 0; i < cfg_.k_sel; i++)
                    chosen.push_back(dom.sample_random(fallback_rng));

            label_batch(dom, chosen, res);

            // Train the occupancy predictor, freeze it, then the downstream.
            if (!res.dataset.empty()) {
                res.model->train_occupancy(res.dataset, train_rng);
                res.model->train_downstream(res.dataset, train_rng);
            }
            outer++;
            if (checkpoint_hook)
                checkpoint_hook(outer, *res.model);
        }
        res.outer_iterations = outer;
    }

    std::vector<VectorXd> select_solutions(const qd::Archive& surr, core::Rng& rng) const
    {
        auto elites = surr.elites();
        std::vector<VectorXd> chosen;
        const int want = std::min<int>(cfg_.k_sel, static_cast<int>(elites.size()));
        for (int i = 0; i < want; i++) {
            const int j = i + rng.uniform_int(static_cast<int>(elites.size()) - i);
            std::swap(elites[static_cast<std::size_t>(i)], elites[static_cast<std::size_t>(j)]);
            chosen.push_back(elites[static_cast<std::size_t>(i)]->theta);
        }
        return chosen;
    }

    void inner_loop(const Domain& dom, qd::Archive& surr, surrogate::SurrogateModel& model, int outer)
    {
        const std::uint64_t seed = core::derive_seed(cfg_.seed, 800 + static_cast<std::uint64_t>(outer));
        if (cfg_.algorithm == Algorithm::Sas) {
            qd::CmaMaeEmitter emitter(dom.initial_theta(), dom.cma_sigma0(), cfg_.batch, seed);
            auto predict = [&](const VectorXd& t) {
                qd::EmitterEval ev;
                const auto [rep, disp] = dom.repair_params(t);
                const auto p = model.predict(t);
                ev.f = p.f - cfg_.reg_weight * disp;
                ev.m = p.m;
                ev.ok = std::isfinite(ev.f) && ev.m.allFinite();
                return ev;
            };
            for (int it = 0; it < cfg_.n_exploit; it++)
                emitter.step(surr, predict);
            return;
        }

        qd::CmaMaegaEmitter emitter(dom.initial_theta(), dom.cma_sigma0(), cfg_.batch,
            dom.measure_dim(), seed);
        auto grad_eval = [&](const VectorXd& t) {
            qd::GradientEval ge;
            const auto [rep, disp] = dom.repair_params(t);
            auto p = model.predict_with_grads(t);
            ge.f = p.f - cfg_.reg_weight * disp;
            ge.m = p.m;
            ge.grad_f = p.grad_f;
            ge.grad_m = p.grad_m;
            ge.ok = std::isfinite(ge.f) && ge.m.allFinite();
            return ge;
        };
        auto predict = [&](const VectorXd& t) {
            qd::EmitterEval ev;
            const auto [rep, disp] = dom.repair_params(t);
            const auto p = model.predict(t);
            ev.f = p.f - cfg_.reg_weight * disp;
            ev.m = p.m;
            ev.ok = std::isfinite(ev.f) && ev.m.allFinite();
            return ev;
        };
        for (int it = 0; it < cfg_.n_exploit; it++)
            emitter.step(surr, grad_eval, predict);
    }

    ExperimentConfig cfg_;
    int workers_ = 1;
    std::chrono::steady_clock::time_point start_;
};

} // namespace sasgen::pipeline
