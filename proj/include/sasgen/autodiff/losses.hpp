#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include <sasgen/autodiff/tensor.hpp>

namespace sasgen::autodiff {

/// Mean squared error over all entries; gradient 2(pred - target)/n.
inline std::pair<double, VectorXd> loss_mse(const VectorXd& pred, const VectorXd& target)
{
    if (pred.size() != target.size())
        throw std::invalid_argument("loss_mse: length mismatch");
    const double n = static_cast<double>(pred.size());
    const VectorXd diff = pred - target;
    return {diff.squaredNorm() / n, 2.0 / n * diff};
}

/// KL(target || pred), summed over the (sample, channel) planes and averaged
/// over the batch. Zero cells of the target contribute nothing; negative
/// entries on either side are rejected.
inline std::pair<double, VectorXd> loss_kl(const Tensor& pred, const Tensor& target)
{
    if (pred.shape != target.shape)
        throw std::invalid_argument("loss_kl: shape mismatch");
    if ((pred.v.array() < 0.0).any() || (target.v.array() < 0.0).any())
        throw std::invalid_argument("loss_kl: negative entries rejected");
    const double n = static_cast<double>(std::max(1, pred.batch()));
    double loss = 0.0;
    VectorXd grad = VectorXd::Zero(pred.v.size());
    for (Eigen::Index i = 0; i < pred.v.size(); i++) {
        const double t = target.v[i];
        if (t <= 0.0)
            continue;
        const double p = std::max(pred.v[i], 1e-300);
        loss += t * (std::log(t) - std::log(p));
        grad[i] = -t / p / n;
    }
    return {loss / n, std::move(grad)};
}

} // namespace sasgen::autodiff
