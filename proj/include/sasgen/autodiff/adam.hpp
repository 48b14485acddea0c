#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <sasgen/autodiff/tensor.hpp>

namespace sasgen::autodiff {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment accumulators are allocated lazily to
/// match the attached parameter shapes.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void attach(const std::vector<Tensor*>& params)
    {
        params_ = params;
        m_.assign(params.size(), VectorXd());
        v_.assign(params.size(), VectorXd());
        for (std::size_t i = 0; i < params.size(); i++) {
            m_[i] = VectorXd::Zero(params[i]->v.size());
            v_[i] = VectorXd::Zero(params[i]->v.size());
        }
        t_ = 0;
    }

    /// One update from the gradients currently stored in the parameters.
    void step()
    {
        t_++;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params_.size(); i++) {
            Tensor& p = *params_[i];
            if (p.g.size() != p.v.size())
                throw std::invalid_argument("Adam: parameter gradient shape mismatch");
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.g;
            v_[i] = cfg_.beta2 * v_[i].array().matrix() + (1.0 - cfg_.beta2) * p.g.cwiseProduct(p.g);
            p.v.array() -= cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
        }
    }

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<Tensor*> params_;
    std::vector<VectorXd> m_, v_;
};

} // namespace sasgen::autodiff
