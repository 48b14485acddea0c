#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <stdexcept>

#include <sasgen/autodiff/tensor.hpp>
#include <sasgen/core/random.hpp>

namespace sasgen::autodiff {

enum class Mode { Training, Inference };

/// Sequential layer interface. Forward is const and safe for concurrent
/// inference; BatchNorm mutates its running statistics only in training
/// mode, and training holds exclusive access by contract.
class Layer {
public:
    virtual ~Layer() = default;

    virtual const char* kind() const = 0;

    /// Output shape for a given input shape; throws on incompatibility.
    virtual std::vector<int> out_shape(const std::vector<int>& in) const = 0;

    virtual void forward(const Tensor& in, Tensor& out, Mode mode) const = 0;

    /// Computes the input gradient and (when param_grads is set) accumulates
    /// parameter gradients. `mode` selects batch vs running statistics for
    /// BatchNorm; everything else ignores it.
    virtual void backward(const Tensor& in, const Tensor& out, const VectorXd& gout,
        VectorXd& gin, Mode mode, bool param_grads) = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<const Tensor*> params() const { return {}; }

    /// Non-trainable state (BatchNorm running stats).
    virtual std::vector<Tensor*> buffers() { return {}; }
    virtual std::vector<const Tensor*> buffers() const { return {}; }

    virtual void write_spec(std::ostream& os) const = 0;
};

namespace detail {

    inline void write_i32(std::ostream& os, std::int32_t x) { os.write(reinterpret_cast<const char*>(&x), 4); }
    inline std::int32_t read_i32(std::istream& is)
    {
        std::int32_t x = 0;
        is.read(reinterpret_cast<char*>(&x), 4);
        return x;
    }
    inline void write_f64(std::ostream& os, double x) { os.write(reinterpret_cast<const char*>(&x), 8); }
    inline double read_f64(std::istream& is)
    {
        double x = 0;
        is.read(reinterpret_cast<char*>(&x), 8);
        return x;
    }

    /// He-style uniform fan-in init, seeded.
    inline void he_uniform(Tensor& w, int fan_in, core::Rng& rng)
    {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < w.v.size(); i++)
            w.v[i] = rng.uniform(-bound, bound);
    }

} // namespace detail

class Dense : public Layer {
public:
    Dense(int in_features, int out_features, core::Rng& rng)
        : in_(in_features), out_(out_features), w_({out_features, in_features}), b_({out_features})
    {
        detail::he_uniform(w_, in_, rng);
        b_.v.setZero();
        w_.alloc_grad();
        b_.alloc_grad();
    }

    const char* kind() const override { return "Dense"; }

    std::vector<int> out_shape(const std::vector<int>& in) const override
    {
        if (in.empty() || Tensor::count(in) % in[0] != 0 || Tensor::count(in) / in[0] != in_)
            throw std::invalid_argument("Dense: input shape " + shape_str(in) + " incompatible with fan-in " + std::to_string(in_));
        return {in[0], out_};
    }

    void forward(const Tensor& in, Tensor& out, Mode) const override
    {
        const int n = in.batch();
        out.shape = {n, out_};
        out.v.resize(static_cast<Eigen::Index>(n) * out_);
        ConstRowMatMap x(in.v.data(), n, in_);
        ConstRowMatMap w(w_.v.data(), out_, in_);
        RowMatMap y(out.v.data(), n, out_);
        y.noalias() = x * w.transpose();
        y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.v.data(), out_);
    }

    void backward(const Tensor& in, const Tensor&, const VectorXd& gout, VectorXd& gin,
        Mode, bool param_grads) override
    {
        const int n = in.batch();
        ConstRowMatMap x(in.v.data(), n, in_);
        ConstRowMatMap w(w_.v.data(), out_, in_);
        ConstRowMatMap gy(gout.data(), n, out_);
        gin.resize(in.v.size());
        RowMatMap gx(gin.data(), n, in_);
        gx.noalias() = gy * w;
        if (param_grads) {
            RowMatMap gw(w_.g.data(), out_, in_);
            gw.noalias() += gy.transpose() * x;
            Eigen::Map<Eigen::RowVectorXd>(b_.g.data(), out_) += gy.colwise().sum();
        }
    }

    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<const Tensor*> params() const override { return {&w_, &b_}; }

    void write_spec(std::ostream& os) const override
    {
        detail::write_i32(os, in_);
        detail::write_i32(os, out_);
    }

    int in_features() const { return in_; }
    int out_features() const { return out_; }
    Tensor& weight() { return w_; }
    Tensor& bias() { return b_; }

private:
    int in_, out_;
    Tensor w_, b_;
};

class ReLU : public Layer {
public:
    const char* kind() const override { return "ReLU"; }
    std::vector<int> out_shape(const std::vector<int>& in) const override { return in; }

    void forward(const Tensor& in, Tensor& out, Mode) const override
    {
        out.shape = in.shape;
        out.v = in.v.cwiseMax(0.0);
    }

    void backward(const Tensor& in, const Tensor&, const VectorXd& gout, VectorXd& gin,
        Mode, bool) override
    {
        // Subgradient 1 at the kink keeps exactly-zero activations trainable.
        gin = (in.v.array() >= 0.0).select(gout, 0.0);
    }

    void write_spec(std::ostream&) const override {}
};

class LeakyReLU : public Layer {
public:
    explicit LeakyReLU(double slope) : slope_(slope)
    {
        if (!(slope > 0.0 && slope < 1.0))
            throw std::invalid_argument("LeakyReLU: slope must be in (0, 1)");
    }

    const char* kind() const override { return "LeakyReLU"; }
    std::vector<int> out_shape(const std::vector<int>& in) const override { return in; }

    void forward(const Tensor& in, Tensor& out, Mode) const override
    {
        out.shape = in.shape;
        out.v = (in.v.array() > 0.0).select(in.v, slope_ * in.v);
    }

    void backward(const Tensor& in, const Tensor&, const VectorXd& gout, VectorXd& gin,
        Mode, bool) override
    {
        gin = (in.v.array() > 0.0).select(gout, slope_ * gout);
    }

    void write_spec(std::ostream& os) const override { detail::write_f64(os, slope_); }

    double slope() const { return slope_; }

private:
    double slope_;
};

/// Softmax over the spatial cells of each (sample, channel) plane.
class ChannelSoftmax : public Layer {
public:
    const char* kind() const override { return "ChannelSoftmax"; }

    std::vector<int> out_shape(const std::vector<int>& in) const override
    {
        if (in.size() != 4)
            throw std::invalid_argument("ChannelSoftmax: expected (N,C,H,W) input, got " + shape_str(in));
        return in;
    }

    void forward(const Tensor& in, Tensor& out, Mode) const override
    {
        out.shape = in.shape;
        out.v.resize(in.v.size());
        const int planes = in.shape[0] * in.shape[1];
        const Eigen::Index hw = in.size() / planes;
        for (int p = 0; p < planes; p++) {
            auto x = in.v.segment(p * hw, hw);
            auto y = out.v.segment(p * hw, hw);
            const double m = x.maxCoeff();
            y = (x.array() - m).exp();
            y /= y.sum();
        }
    }

    void backward(const Tensor& in, const Tensor& out, const VectorXd& gout, VectorXd& gin,
        Mode, bool) override
    {
        gin.resize(in.v.size());
        const int planes = in.shape[0] * in.shape[1];
        const Eigen::Index hw = in.size() / planes;
        for (int p = 0; p < planes; p++) {
            auto y = out.v.segment(p * hw, hw);
            auto g = gout.segment(p * hw, hw);
            const double dot = y.dot(g);
            gin.segment(p * hw, hw) = y.cwiseProduct(g.array().matrix() - VectorXd::Constant(hw, dot));
        }
    }

    void write_spec(std::ostream&) const override {}
};

/// Per-channel batch normalization. Rank-4 inputs normalize over (N,H,W),
/// rank-2 over N. Running statistics follow the usual momentum update and
/// are the only state mutated by a training-mode forward.
class BatchNorm : public Layer {
public:
    explicit BatchNorm(int channels, double momentum = 0.1, double eps = 1e-5)
        : c_(channels), momentum_(momentum), eps_(eps), gamma_({channels}), beta_({channels}),
          run_mean_({channels}), run_var_({channels})
    {
        gamma_.v.setOnes();
        beta_.v.setZero();
        run_mean_.v.setZero();
        run_var_.v.setOnes();
        gamma_.alloc_grad();
        beta_.alloc_grad();
    }

    const char* kind() const override { return "BatchNorm"; }

    std::vector<int> out_shape(const std::vector<int>& in) const override
    {
        if (in.size() != 2 && in.size() != 4)
            throw std::invalid_argument("BatchNorm: expected rank 2 or 4 input, got " + shape_str(in));
        if (in[1] != c_)
            throw std::invalid_argument("BatchNorm: channel mismatch, input " + shape_str(in) + " vs " + std::to_string(c_));
        return in;
    }

    void forward(const Tensor& in, Tensor& out, Mode mode) const override
    {
        out.shape = in.shape;
        out.v.resize(in.v.size());
        const auto [n, hw] = dims(in.shape);
        for (int c = 0; c < c_; c++) {
            double mean, var;
            if (mode == Mode::Training) {
                batch_stats(in, c, n, hw, mean, var);
                const double count = static_cast<double>(n) * hw;
                const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
                run_mean_.v[c] = (1.0 - momentum_) * run_mean_.v[c] + momentum_ * mean;
                run_var_.v[c] = (1.0 - momentum_) * run_var_.v[c] + momentum_ * unbiased;
            }
            else {
                mean = run_mean_.v[c];
                var = run_var_.v[c];
            }
            const double scale = gamma_.v[c] / std::sqrt(var + eps_);
            const double shift = beta_.v[c] - mean * scale;
            for_channel(in.shape, c, [&](Eigen::Index i) { out.v[i] = in.v[i] * scale + shift; });
        }
    }

    void backward(const Tensor& in, const Tensor&, const VectorXd& gout, VectorXd& gin,
        Mode mode, bool param_grads) override
    {
        gin.resize(in.v.size());
        const auto [n, hw] = dims(in.shape);
        const double count = static_cast<double>(n) * hw;
        for (int c = 0; c < c_; c++) {
            if (mode == Mode::Inference) {
                // Affine map through frozen statistics.
                const double inv_sd = 1.0 / std::sqrt(run_var_.v[c] + eps_);
                const double scale = gamma_.v[c] * inv_sd;
                double gsum = 0.0, gxhat = 0.0;
                for_channel(in.shape, c, [&](Eigen::Index i) {
                    gin[i] = gout[i] * scale;
                    gsum += gout[i];
                    gxhat += gout[i] * (in.v[i] - run_mean_.v[c]) * inv_sd;
                });
                if (param_grads) {
                    gamma_.g[c] += gxhat;
                    beta_.g[c] += gsum;
                }
                continue;
            }
            double mean, var;
            batch_stats(in, c, n, hw, mean, var);
            const double inv_sd = 1.0 / std::sqrt(var + eps_);
            double gsum = 0.0, gdotx = 0.0;
            for_channel(in.shape, c, [&](Eigen::Index i) {
                gsum += gout[i];
                gdotx += gout[i] * (in.v[i] - mean) * inv_sd;
            });
            const double scale = gamma_.v[c] * inv_sd;
            for_channel(in.shape, c, [&](Eigen::Index i) {
                const double xhat = (in.v[i] - mean) * inv_sd;
                gin[i] = scale * (gout[i] - gsum / count - xhat * gdotx / count);
            });
            if (param_grads) {
                gamma_.g[c] += gdotx;
                beta_.g[c] += gsum;
            }
        }
    }

    std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
    std::vector<const Tensor*> params() const override { return {&gamma_, &beta_}; }
    std::vector<Tensor*> buffers() override { return {&run_mean_, &run_var_}; }
    std::vector<const Tensor*> buffers() const override { return {&run_mean_, &run_var_}; }

    void write_spec(std::ostream& os) const override
    {
        detail::write_i32(os, c_);
        detail::write_f64(os, momentum_);
        detail::write_f64(os, eps_);
    }

private:
    static std::pair<int, Eigen::Index> dims(const std::vector<int>& s)
    {
        const int n = s[0];
        Eigen::Index hw = 1;
        for (std::size_t i = 2; i < s.size(); i++)
            hw *= s[i];
        return {n, hw};
    }

    template <typename F>
    void for_channel(const std::vector<int>& s, int c, F&& f) const
    {
        const auto [n, hw] = dims(s);
        const Eigen::Index stride = static_cast<Eigen::Index>(c_) * hw;
        for (int b = 0; b < n; b++) {
            const Eigen::Index base = b * stride + c * hw;
            for (Eigen::Index i = 0; i < hw; i++)
                f(base + i);
        }
    }

    void batch_stats(const Tensor& in, int c, int n, Eigen::Index hw, double& mean, double& var) const
    {
        double s = 0.0, s2 = 0.0;
        for_channel(in.shape, c, [&](Eigen::Index i) {
            s += in.v[i];
            s2 += in.v[i] * in.v[i];
        });
        const double count = static_cast<double>(n) * hw;
        mean = s / count;
        var = std::max(0.0, s2 / count - mean * mean);
    }

    int c_;
    double momentum_, eps_;
    Tensor gamma_, beta_;
    mutable Tensor run_mean_, run_var_;
};

/// 2D convolution with zero padding and integer stride. Accepts any input
/// whose per-sample size matches in_c*in_h*in_w (implicit reshape).
class Conv2D : public Layer {
public:
    Conv2D(int in_c, int in_h, int in_w, int out_c, int k, int stride, int pad, core::Rng& rng)
        : ci_(in_c), hi_(in_h), wi_(in_w), co_(out_c), k_(k), s_(stride), p_(pad),
          w_({out_c, in_c, k, k}), b_({out_c})
    {
        ho_ = (hi_ + 2 * p_ - k_) / s_ + 1;
        wo_ = (wi_ + 2 * p_ - k_) / s_ + 1;
        if (ho_ <= 0 || wo_ <= 0)
            throw std::invalid_argument("Conv2D: kernel/stride/padding produce empty output");
        detail::he_uniform(w_, ci_ * k_ * k_, rng);
        b_.v.setZero();
        w_.alloc_grad();
        b_.alloc_grad();
    }

    const char* kind() const override { return "Conv2D"; }

    std::vector<int> out_shape(const std::vector<int>& in) const override
    {
        check_in(in);
        return {in[0], co_, ho_, wo_};
    }

    void forward(const Tensor& in, Tensor& out, Mode) const override
    {
        const int n = in.batch();
        out.shape = {n, co_, ho_, wo_};
        out.v.resize(static_cast<Eigen::Index>(n) * co_ * ho_ * wo_);
        const Eigen::Index ckk = static_cast<Eigen::Index>(ci_) * k_ * k_;
        const Eigen::Index ohw = static_cast<Eigen::Index>(ho_) * wo_;
        RowMat col(ckk, ohw);
        ConstRowMatMap wm(w_.v.data(), co_, ckk);
        for (int b = 0; b < n; b++) {
            im2col(in.v.data() + b * in.per_sample(), col);
            RowMatMap y(out.v.data() + static_cast<Eigen::Index>(b) * co_ * ohw, co_, ohw);
            y.noalias() = wm * col;
            y.colwise() += Eigen::Map<const VectorXd>(b_.v.data(), co_);
        }
    }

    void backward(const Tensor& in, const Tensor&, const VectorXd& gout, VectorXd& gin,
        Mode, bool param_grads) override
    {
        const int n = in.batch();
        const Eigen::Index ckk = static_cast<Eigen::Index>(ci_) * k_ * k_;
        const Eigen::Index ohw = static_cast<Eigen::Index>(ho_) * wo_;
        gin.setZero(in.v.size());
        RowMat col(ckk, ohw), gcol(ckk, ohw);
        ConstRowMatMap wm(w_.v.data(), co_, ckk);
        RowMatMap gw(w_.g.data(), co_, ckk);
        for (int b = 0; b < n; b++) {
            ConstRowMatMap gy(gout.data() + static_cast<Eigen::Index>(b) * co_ * ohw, co_, ohw);
            if (param_grads) {
                im2col(in.v.data() + b * in.per_sample(), col);
                gw.noalias() += gy * col.transpose();
                Eigen::Map<VectorXd>(b_.g.data(), co_) += gy.rowwise().sum();
            }
            gcol.noalias() = wm.transpose() * gy;
            col2im_add(gcol, gin.data() + b * in.per_sample());
        }
    }

    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<const Tensor*> params() const override { return {&w_, &b_}; }

    void write_spec(std::ostream& os) const override
    {
        for (int x : {ci_, hi_, wi_, co_, k_, s_, p_})
            detail::write_i32(os, x);
    }

private:
    void check_in(const std::vector<int>& in) const
    {
        if (in.empty() || Tensor::count(in) / in[0] != static_cast<Eigen::Index>(ci_) * hi_ * wi_)
            throw std::invalid_argument("Conv2D: input shape " + shape_str(in) + " incompatible with ("
                + std::to_string(ci_) + "," + std::to_string(hi_) + "," + std::to_string(wi_) + ")");
    }

    void im2col(const double* x, RowMat& col) const
    {
        col.setZero();
        for (int c = 0; c < ci_; c++)
            for (int kh = 0; kh < k_; kh++)
                for (int kw = 0; kw < k_; kw++) {
                    const Eigen::Index row = (static_cast<Eigen::Index>(c) * k_ + kh) * k_ + kw;
                    for (int oh = 0; oh < ho_; oh++) {
                        const int ih = oh * s_ - p_ + kh;
                        if (ih < 0 || ih >= hi_)
                            continue;
                        for (int ow = 0; ow < wo_; ow++) {
                            const int iw = ow * s_ - p_ + kw;
                            if (iw < 0 || iw >= wi_)
                                continue;
                            col(row, static_cast<Eigen::Index>(oh) * wo_ + ow) = x[(static_cast<Eigen::Index>(c) * hi_ + ih) * wi_ + iw];
                        }
                    }
                }
    }

    void col2im_add(const RowMat& col, double* x) const
    {
        for (int c = 0; c < ci_; c++)
            for (int kh = 0; kh < k_; kh++)
                for (int kw = 0; kw < k_; kw++) {
                    const Eigen::Index row = (static_cast<Eigen::Index>(c) * k_ + kh) * k_ + kw;
                    for (int oh = 0; oh < ho_; oh++) {
                        const int ih = oh * s_ - p_ + kh;
                        if (ih < 0 || ih >= hi_)
                            continue;
                        for (int ow = 0; ow < wo_; ow++) {
                            const int iw = ow * s_ - p_ + kw;
                            if (iw < 0 || iw >= wi_)
                                continue;
                            x[(static_cast<Eigen::Index>(c) * hi_ + ih) * wi_ + iw] += col(row, static_cast<Eigen::Index>(oh) * wo_ + ow);
                        }
                    }
                }
    }

    int ci_, hi_, wi_, co_, k_, s_, p_, ho_, wo_;
    Tensor w_, b_;
};

/// Transposed 2D convolution (upsampling). Weight layout (Cin, Cout, K, K).
class Deconv2D : public Layer {
public:
    Deconv2D(int in_c, int in_h, int in_w, int out_c, int k, int stride, int pad, core::Rng& rng)
        : ci_(in_c), hi_(in_h), wi_(in_w), co_(out_c), k_(k), s_(stride), p_(pad),
          w_({in_c, out_c, k, k}), b_({out_c})
    {
        ho_ = (hi_ - 1) * s_ - 2 * p_ + k_;
        wo_ = (wi_ - 1) * s_ - 2 * p_ + k_;
        if (ho_ <= 0 || wo_ <= 0)
            throw std::invalid_argument("Deconv2D: kernel/stride/padding produce empty output");
        detail::he_uniform(w_, ci_ * k_ * k_, rng);
        b_.v.setZero();
        w_.alloc_grad();
        b_.alloc_grad();
    }

    const char* kind() const override { return "Deconv2D"; }

    std::vector<int> out_shape(const std::vector<int>& in) const override
    {
        if (in.empty() || Tensor::count(in) / in[0] != static_cast<Eigen::Index>(ci_) * hi_ * wi_)
            throw std::invalid_argument("Deconv2D: input shape " + shape_str(in) + " incompatible with ("
                + std::to_string(ci_) + "," + std::to_string(hi_) + "," + std::to_string(wi_) + ")");
        return {in[0], co_, ho_, wo_};
    }

    void forward(const Tensor& in, Tensor& out, Mode) const override
    {
        const int n = in.batch();
        out.shape = {n, co_, ho_, wo_};
        out.v.resize(static_cast<Eigen::Index>(n) * co_ * ho_ * wo_);
        const Eigen::Index fkk = static_cast<Eigen::Index>(co_) * k_ * k_;
        const Eigen::Index ihw = static_cast<Eigen::Index>(hi_) * wi_;
        RowMat col(fkk, ihw);
        ConstRowMatMap wm(w_.v.data(), ci_, fkk);
        for (int b = 0; b < n; b++) {
            ConstRowMatMap x(in.v.data() + b * in.per_sample(), ci_, ihw);
            col.noalias() = wm.transpose() * x;
            double* y = out.v.data() + static_cast<Eigen::Index>(b) * co_ * ho_ * wo_;
            for (int f = 0; f < co_; f++)
                for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ho_) * wo_; i++)
                    y[f * static_cast<Eigen::Index>(ho_) * wo_ + i] = b_.v[f];
            scatter_add(col, y);
        }
    }

    void backward(const Tensor& in, const Tensor&, const VectorXd& gout, VectorXd& gin,
        Mode, bool param_grads) override
    {
        const int n = in.batch();
        const Eigen::Index fkk = static_cast<Eigen::Index>(co_) * k_ * k_;
        const Eigen::Index ihw = static_cast<Eigen::Index>(hi_) * wi_;
        gin.resize(in.v.size());
        RowMat gcol(fkk, ihw);
        ConstRowMatMap wm(w_.v.data(), ci_, fkk);
        RowMatMap gw(w_.g.data(), ci_, fkk);
        for (int b = 0; b < n; b++) {
            const double* gy = gout.data() + static_cast<Eigen::Index>(b) * co_ * ho_ * wo_;
            gather(gy, gcol);
            RowMatMap gx(gin.data() + b * in.per_sample(), ci_, ihw);
            gx.noalias() = wm * gcol;
            if (param_grads) {
                ConstRowMatMap x(in.v.data() + b * in.per_sample(), ci_, ihw);
                gw.noalias() += x * gcol.transpose();
                for (int f = 0; f < co_; f++) {
                    double s = 0.0;
                    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ho_) * wo_; i++)
                        s += gy[f * static_cast<Eigen::Index>(ho_) * wo_ + i];
                    b_.g[f] += s;
                }
            }
        }
    }

    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<const Tensor*> params() const override { return {&w_, &b_}; }

    void write_spec(std::ostream& os) const override
    {
        for (int x : {ci_, hi_, wi_, co_, k_, s_, p_})
            detail::write_i32(os, x);
    }

private:
    // col(f*K*K + kh*K + kw, h*Wi + w) contributes to out(f, h*s-p+kh, w*s-p+kw).
    void scatter_add(const RowMat& col, double* y) const
    {
        for (int f = 0; f < co_; f++)
            for (int kh = 0; kh < k_; kh++)
                for (int kw = 0; kw < k_; kw++) {
                    const Eigen::Index row = (static_cast<Eigen::Index>(f) * k_ + kh) * k_ + kw;
                    for (int h = 0; h < hi_; h++) {
                        const int oh = h * s_ - p_ + kh;
                        if (oh < 0 || oh >= ho_)
                            continue;
                        for (int w = 0; w < wi_; w++) {
                            const int ow = w * s_ - p_ + kw;
                            if (ow < 0 || ow >= wo_)
                                continue;
                            y[(static_cast<Eigen::Index>(f) * ho_ + oh) * wo_ + ow] += col(row, static_cast<Eigen::Index>(h) * wi_ + w);
                        }
                    }
                }
    }

    void gather(const double* gy, RowMat& gcol) const
    {
        gcol.setZero();
        for (int f = 0; f < co_; f++)
            for (int kh = 0; kh < k_; kh++)
                for (int kw = 0; kw < k_; kw++) {
                    const Eigen::Index row = (static_cast<Eigen::Index>(f) * k_ + kh) * k_ + kw;
                    for (int h = 0; h < hi_; h++) {
                        const int oh = h * s_ - p_ + kh;
                        if (oh < 0 || oh >= ho_)
                            continue;
                        for (int w = 0; w < wi_; w++) {
                            const int ow = w * s_ - p_ + kw;
                            if (ow < 0 || ow >= wo_)
                                continue;
                            gcol(row, static_cast<Eigen::Index>(h) * wi_ + w) = gy[(static_cast<Eigen::Index>(f) * ho_ + oh) * wo_ + ow];
                        }
                    }
                }
    }

    int ci_, hi_, wi_, co_, k_, s_, p_, ho_, wo_;
    Tensor w_, b_;
};

} // namespace sasgen::autodiff
