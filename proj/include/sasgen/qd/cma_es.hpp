#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <sasgen/core/random.hpp>

namespace sasgen::qd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Covariance matrix adaptation evolution strategy with cumulative step-size
/// adaptation and rank-1 + rank-mu covariance updates. The caller ranks the
/// last ask batch (best first) and passes it back through tell.
class CmaEs {
public:
    CmaEs(VectorXd mean, double sigma, int lambda, std::uint64_t seed)
        : mean_(std::move(mean)), sigma0_(sigma), sigma_(sigma), lambda_(lambda), rng_(seed)
    {
        dim_ = static_cast<int>(mean_.size());
        if (dim_ < 1 || lambda_ < 2)
            throw std::invalid_argument("CmaEs: need dim >= 1 and lambda >= 2");
        mu_ = lambda_ / 2;
        weights_ = VectorXd(mu_);
        for (int i = 0; i < mu_; i++)
            weights_[i] = std::log(lambda_ / 2.0 + 0.5) - std::log(i + 1.0);
        weights_ /= weights_.sum();
        mu_eff_ = 1.0 / weights_.squaredNorm();

        const double d = dim_;
        c_sigma_ = (mu_eff_ + 2.0) / (d + mu_eff_ + 5.0);
        d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (d + 1.0)) - 1.0) + c_sigma_;
        c_c_ = (4.0 + mu_eff_ / d) / (d + 4.0 + 2.0 * mu_eff_ / d);
        c_1_ = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff_);
        c_mu_ = std::min(1.0 - c_1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((d + 2.0) * (d + 2.0) + mu_eff_));
        chi_n_ = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

        cov_ = MatrixXd::Identity(dim_, dim_);
        p_sigma_ = VectorXd::Zero(dim_);
        p_c_ = VectorXd::Zero(dim_);
        decompose();
    }

    int dim() const { return dim_; }
    int lambda() const { return lambda_; }
    int mu() const { return mu_; }
    const VectorXd& weights() const { return weights_; }
    const VectorXd& mean() const { return mean_; }
    double sigma() const { return sigma_; }
    const MatrixXd& covariance() const { return cov_; }
    long generation() const { return generation_; }

    /// Samples lambda candidates mean + sigma * C^(1/2) z.
    std::vector<VectorXd> ask()
    {
        last_ask_.clear();
        last_ask_.reserve(static_cast<std::size_t>(lambda_));
        for (int i = 0; i < lambda_; i++) {
            VectorXd z(dim_);
            for (int j = 0; j < dim_; j++)
                z[j] = rng_.gauss();
            last_ask_.push_back(mean_ + sigma_ * (sqrt_cov_ * z));
        }
        return last_ask_;
    }

    /// Updates mean, step size, paths, and covariance from the most recent
    /// ask batch, passed back ranked best first.
    void tell(const std::vector<VectorXd>& ranked)
    {
        if (static_cast<int>(ranked.size()) != lambda_ || last_ask_.empty())
            throw std::invalid_argument("CmaEs::tell: ranking must cover the most recent ask batch");

        const VectorXd old_mean = mean_;
        VectorXd y_w = VectorXd::Zero(dim_);
        for (int i = 0; i < mu_; i++)
            y_w += weights_[i] * (ranked[static_cast<std::size_t>(i)] - old_mean);
        y_w /= sigma_;
        mean_ = old_mean + sigma_ * y_w;

        p_sigma_ = (1.0 - c_sigma_) * p_sigma_
            + std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * (inv_sqrt_cov_ * y_w);
        sigma_ *= std::exp((c_sigma_ / d_sigma_) * (p_sigma_.norm() / chi_n_ - 1.0));

        generation_++;
        const double hsig_thresh = (1.4 + 2.0 / (dim_ + 1.0)) * chi_n_;
        const double path_norm = p_sigma_.norm()
            / std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * static_cast<double>(generation_)));
        const double h_sigma = path_norm < hsig_thresh ? 1.0 : 0.0;

        p_c_ = (1.0 - c_c_) * p_c_ + h_sigma * std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y_w;

        MatrixXd rank_mu = MatrixXd::Zero(dim_, dim_);
        for (int i = 0; i < mu_; i++) {
            const VectorXd y = (ranked[static_cast<std::size_t>(i)] - old_mean) / sigma_;
            rank_mu += weights_[i] * (y * y.transpose());
        }
        cov_ = (1.0 - c_1_ - c_mu_) * cov_
            + c_1_ * (p_c_ * p_c_.transpose() + (1.0 - h_sigma) * c_c_ * (2.0 - c_c_) * cov_)
            + c_mu_ * rank_mu;
        decompose();
        last_ask_.clear();
    }

    /// Numerical degeneracy conditions that warrant an emitter restart.
    bool needs_restart() const
    {
        if (!mean_.allFinite() || !std::isfinite(sigma_))
            return true;
        if (sigma_ > 1e7 * sigma0_ || sigma_ < 1e-12 * sigma0_)
            return true;
        if (max_eig_ / min_eig_ > 1e14)
            return true;
        if (sigma_ * std::sqrt(max_eig_) < 1e-12)
            return true;
        return false;
    }

    void reset(const VectorXd& mean, double sigma)
    {
        if (mean.size() != dim_)
            throw std::invalid_argument("CmaEs::reset: dimension mismatch");
        mean_ = mean;
        sigma_ = sigma;
        cov_ = MatrixXd::Identity(dim_, dim_);
        p_sigma_.setZero();
        p_c_.setZero();
        generation_ = 0;
        last_ask_.clear();
        decompose();
    }

private:
    void decompose()
    {
        cov_ = 0.5 * (cov_ + cov_.transpose().eval());
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov_);
        VectorXd evals = eig.eigenvalues();
        bool repaired = false;
        for (int i = 0; i < dim_; i++)
            if (!(evals[i] >= 1e-12)) {
                evals[i] = 1e-12;
                repaired = true;
            }
        if (repaired)
            cov_ = eig.eigenvectors() * evals.asDiagonal() * eig.eigenvectors().transpose();
        min_eig_ = evals.minCoeff();
        max_eig_ = evals.maxCoeff();
        sqrt_cov_ = eig.eigenvectors() * evals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
        inv_sqrt_cov_ = eig.eigenvectors() * evals.cwiseSqrt().cwiseInverse().asDiagonal()
            * eig.eigenvectors().transpose();
    }

    VectorXd mean_;
    double sigma0_, sigma_;
    int lambda_, dim_, mu_;
    core::Rng rng_;

    VectorXd weights_;
    double mu_eff_, c_sigma_, d_sigma_, c_c_, c_1_, c_mu_, chi_n_;

    MatrixXd cov_, sqrt_cov_, inv_sqrt_cov_;
    VectorXd p_sigma_, p_c_;
    double min_eig_ = 1.0, max_eig_ = 1.0;
    long generation_ = 0;
    std::vector<VectorXd> last_ask_;
};

} // namespace sasgen::qd
