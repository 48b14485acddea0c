#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include <sasgen/qd/archive.hpp>
#include <sasgen/qd/cma_es.hpp>

namespace sasgen::qd {

/// Uniform i.i.d. samples within a box.
inline std::vector<VectorXd> random_search_ask(const VectorXd& lower, const VectorXd& upper,
    int batch, core::Rng& rng)
{
    if (lower.size() != upper.size() || !lower.allFinite() || !upper.allFinite())
        throw std::invalid_argument("random_search_ask: bounds must be finite and congruent");
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; i++) {
        VectorXd x(lower.size());
        for (Eigen::Index j = 0; j < lower.size(); j++)
            x[j] = rng.uniform(lower[j], upper[j]);
        out.push_back(std::move(x));
    }
    return out;
}

/// MAP-Elites isotropic-Gaussian emitter: perturbs uniformly chosen elites
/// with per-parameter noise. An empty archive bootstraps from uniform
/// samples within the parameter box.
class MapElitesEmitter {
public:
    MapElitesEmitter(VectorXd sigma, VectorXd lower, VectorXd upper, std::uint64_t seed)
        : sigma_(std::move(sigma)), lower_(std::move(lower)), upper_(std::move(upper)), rng_(seed)
    {
    }

    std::vector<VectorXd> ask(const Archive& archive, int batch)
    {
        const auto elites = archive.elites();
        if (elites.empty())
            return random_search_ask(lower_, upper_, batch, rng_);
        std::vector<VectorXd> out;
        out.reserve(static_cast<std::size_t>(batch));
        for (int i = 0; i < batch; i++) {
            const Elite* e = elites[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(elites.size())))];
            VectorXd x = e->theta;
            for (Eigen::Index j = 0; j < x.size(); j++)
                x[j] += rng_.gauss(0.0, sigma_[j]);
            out.push_back(std::move(x));
        }
        return out;
    }

private:
    VectorXd sigma_, lower_, upper_;
    core::Rng rng_;
};

struct EmitterEval {
    bool ok = true;
    double f = 0.0; // training objective (regularization already applied)
    VectorXd m;
    VectorXd stored_theta; // when set, archived instead of the raw candidate (repaired parameters)
};

/// CMA-MAE emitter: CMA-ES in parameter space ranked by soft-archive
/// improvement, restarting at a random elite when a generation yields no
/// improvement or the strategy degenerates numerically.
class CmaMaeEmitter {
public:
    CmaMaeEmitter(VectorXd x0, double sigma0, int lambda, std::uint64_t seed)
        : x0_(std::move(x0)), sigma0_(sigma0),
          es_(x0_, sigma0, lambda, core::derive_seed(seed, 1)), rng_(core::derive_seed(seed, 2))
    {
    }

    /// Runs a single ask/evaluate/tell generation. The callback evaluates one
    /// candidate and is responsible for any side effects beyond the soft
    /// archive (final-archive adds, datasets, budgets).
    int step(Archive& training, const std::function<EmitterEval(const VectorXd&)>& evaluate)
    {
        auto candidates = es_.ask();
        const int n = static_cast<int>(candidates.size());
        std::vector<double> delta(static_cast<std::size_t>(n));
        int added = 0;
        for (int i = 0; i < n; i++) {
            EmitterEval ev = evaluate(candidates[static_cast<std::size_t>(i)]);
            if (!ev.ok) {
                delta[static_cast<std::size_t>(i)] = -std::numeric_limits<double>::infinity();
                continue;
            }
            Elite e;
            e.theta = ev.stored_theta.size() > 0 ? ev.stored_theta : candidates[static_cast<std::size_t>(i)];
            e.f = ev.f;
            e.m = ev.m;
            const AddResult r = training.add_cma_mae(e);
            delta[static_cast<std::size_t>(i)] = r.improvement;
            if (r.status != AddStatus::Rejected)
                added++;
        }

        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
            [&](int a, int b) { return delta[static_cast<std::size_t>(a)] > delta[static_cast<std::size_t>(b)]; });
        std::vector<VectorXd> ranked;
        ranked.reserve(static_cast<std::size_t>(n));
        for (int i : order)
            ranked.push_back(candidates[static_cast<std::size_t>(i)]);
        es_.tell(ranked);

        const bool improved = std::any_of(delta.begin(), delta.end(), [](double d) { return d > 0.0; });
        if (!improved || es_.needs_restart())
            restart(training);
        return added;
    }

    void restart(const Archive& training)
    {
        const auto elites = training.elites();
        if (elites.empty()) {
            es_.reset(x0_, sigma0_);
        }
        else {
            const Elite* e = elites[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(elites.size())))];
            es_.reset(e->theta, sigma0_);
        }
        restarts_++;
    }

    const CmaEs& strategy() const { return es_; }
    int restarts() const { return restarts_; }

private:
    VectorXd x0_;
    double sigma0_;
    CmaEs es_;
    core::Rng rng_;
    int restarts_ = 0;
};

struct GradientEval {
    bool ok = true;
    double f = 0.0;                   // training objective (regularized)
    VectorXd m;                       // k measures
    VectorXd grad_f;                  // n
    std::vector<VectorXd> grad_m;     // k gradients of length n
};

/// CMA-MAEGA gradient-arborescence emitter: maintains a search point theta,
/// branches it along coefficient-weighted objective/measure gradients with
/// coefficients sampled by CMA-ES over the (k+1)-dimensional coefficient
/// space, and walks theta toward the best-improving branches.
class CmaMaegaEmitter {
public:
    CmaMaegaEmitter(VectorXd theta0, double sigma_g, int batch, int measure_dim, std::uint64_t seed)
        : theta0_(std::move(theta0)), theta_(theta0_), sigma_g_(sigma_g), batch_(batch),
          coeff_dim_(measure_dim + 1), rng_(core::derive_seed(seed, 11)),
          coeff_seed_(core::derive_seed(seed, 12))
    {
    }

    const VectorXd& theta() const { return theta_; }
    int restarts() const { return restarts_; }

    /// One inner-loop iteration. grad_eval scores theta and returns branching
    /// gradients; predict scores a branch without gradients. Returns the
    /// number of branch evaluations performed.
    int step(Archive& training,
        const std::function<GradientEval(const VectorXd&)>& grad_eval,
        const std::function<EmitterEval(const VectorXd&)>& predict)
    {
        ensure_strategy();

        GradientEval ge = grad_eval(theta_);
        const bool grads_bad = !ge.ok || !ge.grad_f.allFinite()
            || std::any_of(ge.grad_m.begin(), ge.grad_m.end(), [](const VectorXd& g) { return !g.allFinite(); });
        if (grads_bad) {
            restart(training);
            return 0;
        }
        {
            Elite e;
            e.theta = theta_;
            e.f = ge.f;
            e.m = ge.m;
            training.add_cma_mae(e);
        }

        // Unit-normalize the branching gradients; zero gradients stay zero.
        VectorXd gf = normalized(ge.grad_f);
        std::vector<VectorXd> gm;
        gm.reserve(ge.grad_m.size());
        for (const auto& g : ge.grad_m)
            gm.push_back(normalized(g));

        auto coeffs = coeff_es_->ask();
        std::vector<VectorXd> branches;
        std::vector<double> delta(coeffs.size());
        branches.reserve(coeffs.size());
        for (std::size_t i = 0; i < coeffs.size(); i++) {
            coeffs[i][0] = std::abs(coeffs[i][0]);
            VectorXd b = theta_ + coeffs[i][0] * gf;
            for (std::size_t j = 0; j < gm.size(); j++)
                b += coeffs[i][static_cast<Eigen::Index>(j) + 1] * gm[j];
            branches.push_back(std::move(b));
        }

        int evals = 0;
        for (std::size_t i = 0; i < branches.size(); i++) {
            EmitterEval ev = predict(branches[i]);
            evals++;
            if (!ev.ok) {
                delta[i] = -std::numeric_limits<double>::infinity();
                continue;
            }
            Elite e;
            e.theta = branches[i];
            e.f = ev.f;
            e.m = ev.m;
            delta[i] = training.add_cma_mae(e).improvement;
        }

        std::vector<int> order(coeffs.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
            [&](int a, int b) { return delta[static_cast<std::size_t>(a)] > delta[static_cast<std::size_t>(b)]; });

        std::vector<VectorXd> ranked_coeffs;
        ranked_coeffs.reserve(coeffs.size());
        for (int i : order)
            ranked_coeffs.push_back(coeffs[static_cast<std::size_t>(i)]);
        coeff_es_->tell(ranked_coeffs);

        // Walk theta by recombining the better-ranked half of the branches.
        const VectorXd& w = coeff_es_->weights();
        VectorXd step_vec = VectorXd::Zero(theta_.size());
        for (int i = 0; i < coeff_es_->mu(); i++)
            step_vec += w[i] * (branches[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] - theta_);
        theta_ += step_vec;

        const bool improved = std::any_of(delta.begin(), delta.end(), [](double d) { return d > 0.0; });
        if (!improved || coeff_es_->needs_restart() || !theta_.allFinite())
            restart(training);
        return evals;
    }

    void restart(const Archive& training)
    {
        const auto elites = training.elites();
        if (elites.empty())
            theta_ = theta0_;
        else
            theta_ = elites[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(elites.size())))]->theta;
        coeff_es_.reset();
        ensure_strategy();
        restarts_++;
    }

private:
    void ensure_strategy()
    {
        if (!coeff_es_) {
            coeff_es_ = std::make_unique<CmaEs>(VectorXd::Zero(coeff_dim_), sigma_g_, batch_,
                core::derive_seed(coeff_seed_, static_cast<std::uint64_t>(restarts_)));
        }
    }

    static VectorXd normalized(const VectorXd& g)
    {
        const double n = g.norm();
        return n > 0.0 ? VectorXd(g / n) : VectorXd::Zero(g.size());
    }

    VectorXd theta0_, theta_;
    double sigma_g_;
    int batch_;
    int coeff_dim_ = 3;
    core::Rng rng_;
    std::uint64_t coeff_seed_;
    std::unique_ptr<CmaEs> coeff_es_;
    int restarts_ = 0;
};

} // namespace sasgen::qd
