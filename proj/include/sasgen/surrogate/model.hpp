#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <sasgen/autodiff/adam.hpp>
#include <sasgen/autodiff/losses.hpp>
#include <sasgen/autodiff/network.hpp>
#include <sasgen/qd/archive.hpp>
#include <sasgen/surrogate/dataset.hpp>

namespace sasgen::surrogate {

using autodiff::Mode;
using autodiff::Network;
using autodiff::Tensor;

struct SurrogateConfig {
    int param_dim = 0;
    int measure_dim = 2;
    int channels = 1; // occupancy channels: 1 teleoperation, 2 collaboration
    int grid_n = 32;
    double lr = 1e-4;
    int batch_size = 64;
    int epochs = 100;
    std::uint64_t seed = 0;
};

struct Prediction {
    double f = 0.0;
    Eigen::VectorXd m;
};

struct GradPrediction {
    double f = 0.0;
    Eigen::VectorXd m;
    Eigen::VectorXd grad_f;
    std::vector<Eigen::VectorXd> grad_m;
};

struct ModelMetrics {
    Eigen::VectorXd mae;      // per head: objective then measures
    double cell_hit_rate = 0.0;
    double mean_manhattan = 0.0;
};

/// Two-stage surrogate: an occupancy predictor expanding the parameter
/// vector (treated as a 1x1 image) into per-agent occupancy grids, and a
/// downstream predictor combining a parameter branch with a convolutional
/// grid branch into the objective and measure heads. Targets and inputs are
/// z-scored with dataset statistics.
class SurrogateModel {
public:
    explicit SurrogateModel(SurrogateConfig cfg) : cfg_(cfg)
    {
        core::Rng rng(cfg_.seed);
        const int n = cfg_.param_dim;
        const int C = cfg_.channels;
        const int k = cfg_.measure_dim;

        // The last deconvolution emits raw logits for the softmax; batch
        // normalization + ReLU there floors the logits at zero and stalls
        // training on concentrated targets.
        occupancy_.add<autodiff::Dense>(n, 64 * 4 * 4, rng);
        occupancy_.add<autodiff::Deconv2D>(64, 4, 4, 16, 4, 2, 1, rng);
        occupancy_.add<autodiff::BatchNorm>(16);
        occupancy_.add<autodiff::ReLU>();
        occupancy_.add<autodiff::Deconv2D>(16, 8, 8, 8, 4, 2, 1, rng);
        occupancy_.add<autodiff::BatchNorm>(8);
        occupancy_.add<autodiff::ReLU>();
        occupancy_.add<autodiff::Deconv2D>(8, 16, 16, C, 4, 2, 1, rng);
        occupancy_.add<autodiff::ChannelSoftmax>();

        param_branch_.add<autodiff::Dense>(n, 64, rng);
        param_branch_.add<autodiff::BatchNorm>(64);
        param_branch_.add<autodiff::ReLU>();
        param_branch_.add<autodiff::Dense>(64, 64, rng);
        param_branch_.add<autodiff::BatchNorm>(64);
        param_branch_.add<autodiff::ReLU>();

        grid_branch_.add<autodiff::Conv2D>(C, 32, 32, 8, 3, 2, 1, rng);
        grid_branch_.add<autodiff::BatchNorm>(8);
        grid_branch_.add<autodiff::LeakyReLU>(0.01);
        grid_branch_.add<autodiff::Conv2D>(8, 16, 16, 16, 3, 2, 1, rng);
        grid_branch_.add<autodiff::BatchNorm>(16);
        grid_branch_.add<autodiff::LeakyReLU>(0.01);

        head_.add<autodiff::Dense>(64 + 16 * 8 * 8, k + 1, rng);

        in_mean_ = Eigen::VectorXd::Zero(n);
        in_std_ = Eigen::VectorXd::Ones(n);
        out_mean_ = Eigen::VectorXd::Zero(k + 1);
        out_std_ = Eigen::VectorXd::Ones(k + 1);
    }

    const SurrogateConfig& config() const { return cfg_; }

    /// Occupancy prediction: C normalized grids.
    std::vector<Eigen::VectorXd> predict_occupancy(const Eigen::VectorXd& theta) const
    {
        check_theta(theta);
        Tensor in = standardized_input(theta);
        auto acts = occupancy_.forward(in, Mode::Inference);
        return split_grids(acts.back());
    }

    Prediction predict(const Eigen::VectorXd& theta) const
    {
        check_theta(theta);
        Tensor in = standardized_input(theta);
        auto occ = occupancy_.forward(in, Mode::Inference);
        auto par = param_branch_.forward(in, Mode::Inference);
        Tensor grid_in = occ.back();
        auto grd = grid_branch_.forward(grid_in, Mode::Inference);
        Tensor cat = concat_features(par.back(), grd.back());
        auto out = head_.forward(cat, Mode::Inference);

        Prediction p;
        const auto& y = out.back().v;
        p.f = y[0] * out_std_[0] + out_mean_[0];
        p.m.resize(cfg_.measure_dim);
        for (int j = 0; j < cfg_.measure_dim; j++)
            p.m[j] = y[j + 1] * out_std_[j + 1] + out_mean_[j + 1];
        return p;
    }

    /// Prediction with input gradients: each head is backpropagated through
    /// the downstream networks and the frozen occupancy predictor to theta.
    GradPrediction predict_with_grads(const Eigen::VectorXd& theta)
    {
        check_theta(theta);
        Tensor in = standardized_input(theta);
        auto occ = occupancy_.forward(in, Mode::Inference);
        auto par = param_branch_.forward(in, Mode::Inference);
        auto grd = grid_branch_.forward(occ.back(), Mode::Inference);
        Tensor cat = concat_features(par.back(), grd.back());
        auto out = head_.forward(cat, Mode::Inference);

        GradPrediction p;
        const auto& y = out.back().v;
        p.f = y[0] * out_std_[0] + out_mean_[0];
        p.m.resize(cfg_.measure_dim);
        for (int j = 0; j < cfg_.measure_dim; j++)
            p.m[j] = y[j + 1] * out_std_[j + 1] + out_mean_[j + 1];

        const int k1 = cfg_.measure_dim + 1;
        const Eigen::Index pf = 64;
        for (int h = 0; h < k1; h++) {
            Eigen::VectorXd gy = Eigen::VectorXd::Zero(k1);
            gy[h] = out_std_[h]; // chain through target de-standardization
            Eigen::VectorXd gcat = head_.backward(out, gy, Mode::Inference, false);
            Eigen::VectorXd gpar = gcat.segment(0, pf);
            Eigen::VectorXd ggrd = gcat.segment(pf, gcat.size() - pf);
            Eigen::VectorXd gx = param_branch_.backward(par, gpar, Mode::Inference, false);
            Eigen::VectorXd ggrid_in = grid_branch_.backward(grd, ggrd, Mode::Inference, false);
            gx += occupancy_.backward(occ, ggrid_in, Mode::Inference, false);
            // chain through input standardization
            Eigen::VectorXd gtheta = gx.cwiseQuotient(in_std_);
            if (h == 0)
                p.grad_f = gtheta;
            else
                p.grad_m.push_back(gtheta);
        }
        return p;
    }

    /// Trains the occupancy predictor on KL loss; refreshes the input
    /// statistics from the dataset. Returns per-epoch mean loss.
    std::vector<double> train_occupancy(const Dataset& data, core::Rng& rng)
    {
        if (data.empty())
            throw std::invalid_argument("train_occupancy: empty dataset");
        fit_input_stats(data);
        autodiff::Adam opt({cfg_.lr});
        opt.attach(occupancy_.params());

        std::vector<double> history;
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < cfg_.epochs; epoch++) {
            shuffle(order, rng);
            double total = 0.0;
            int batches = 0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg_.batch_size)) {
                const std::size_t bs = std::min(static_cast<std::size_t>(cfg_.batch_size), order.size() - start);
                Tensor in = batch_inputs(data, order, start, bs);
                Tensor target = batch_grids(data, order, start, bs);
                auto acts = occupancy_.forward(in, Mode::Training);
                auto [loss, grad] = autodiff::loss_kl(acts.back(), target);
                occupancy_.zero_grads();
                occupancy_.backward(acts, grad, Mode::Training);
                opt.step();
                total += loss;
                batches++;
            }
            history.push_back(total / std::max(1, batches));
        }
        return history;
    }

    /// Trains the downstream predictor on MSE against z-scored targets,
    /// feeding occupancy predictions as the grid-branch input. The occupancy
    /// weights stay frozen.
    std::vector<double> train_downstream(const Dataset& data, core::Rng& rng)
    {
        if (data.empty())
            throw std::invalid_argument("train_downstream: empty dataset");
        fit_output_stats(data);
        autodiff::Adam opt({cfg_.lr});
        auto params = param_branch_.params();
        for (auto* p : grid_branch_.params())
            params.push_back(p);
        for (auto* p : head_.params())
            params.push_back(p);
        opt.attach(params);

        const int k1 = cfg_.measure_dim + 1;
        std::vector<double> history;
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < cfg_.epochs; epoch++) {
            shuffle(order, rng);
            double total = 0.0;
            int batches = 0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg_.batch_size)) {
                const std::size_t bs = std::min(static_cast<std::size_t>(cfg_.batch_size), order.size() - start);
                Tensor in = batch_inputs(data, order, start, bs);

                // Grid input from the frozen occupancy predictor.
                auto occ = occupancy_.forward(in, Mode::Inference);

                auto par = param_branch_.forward(in, Mode::Training);
                auto grd = grid_branch_.forward(occ.back(), Mode::Training);
                Tensor cat = concat_features(par.back(), grd.back());
                auto out = head_.forward(cat, Mode::Training);

                Eigen::VectorXd target(static_cast<Eigen::Index>(bs) * k1);
                for (std::size_t b = 0; b < bs; b++) {
                    const auto& s = data[order[start + b]];
                    target[static_cast<Eigen::Index>(b) * k1] = (s.f - out_mean_[0]) / out_std_[0];
                    for (int j = 0; j < cfg_.measure_dim; j++)
                        target[static_cast<Eigen::Index>(b) * k1 + j + 1] = (s.m[j] - out_mean_[j + 1]) / out_std_[j + 1];
                }
                auto [loss, grad] = autodiff::loss_mse(out.back().v, target);

                param_branch_.zero_grads();
                grid_branch_.zero_grads();
                head_.zero_grads();
                Eigen::VectorXd gcat = head_.backward(out, grad, Mode::Training);
                const Eigen::Index pf = 64;
                Eigen::MatrixXd gc = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    gcat.data(), static_cast<Eigen::Index>(bs), pf + 1024);
                Eigen::VectorXd gpar(static_cast<Eigen::Index>(bs) * pf), ggrd(static_cast<Eigen::Index>(bs) * 1024);
                for (std::size_t b = 0; b < bs; b++) {
                    gpar.segment(static_cast<Eigen::Index>(b) * pf, pf) = gc.row(static_cast<Eigen::Index>(b)).segment(0, pf);
                    ggrd.segment(static_cast<Eigen::Index>(b) * 1024, 1024) = gc.row(static_cast<Eigen::Index>(b)).segment(pf, 1024);
                }
                param_branch_.backward(par, gpar, Mode::Training);
                grid_branch_.backward(grd, ggrd, Mode::Training);
                opt.step();
                total += loss;
                batches++;
            }
            history.push_back(total / std::max(1, batches));
        }
        return history;
    }

    void save(const std::string& path) const
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("SurrogateModel::save: cannot open " + path);
        const char magic[8] = {'S', 'G', 'C', 'K', 'P', 'T', '0', '1'};
        os.write(magic, 8);
        for (int v : {cfg_.param_dim, cfg_.measure_dim, cfg_.channels, cfg_.grid_n, cfg_.batch_size, cfg_.epochs})
            autodiff::detail::write_i32(os, v);
        autodiff::detail::write_f64(os, cfg_.lr);
        os.write(reinterpret_cast<const char*>(&cfg_.seed), 8);
        occupancy_.save(os);
        param_branch_.save(os);
        grid_branch_.save(os);
        head_.save(os);
        write_vec(os, in_mean_);
        write_vec(os, in_std_);
        write_vec(os, out_mean_);
        write_vec(os, out_std_);
    }

    static SurrogateModel load(const std::string& path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw std::runtime_error("SurrogateModel::load: cannot open " + path);
        char magic[8];
        is.read(magic, 8);
        if (std::string(magic, 8) != "SGCKPT01")
            throw std::runtime_error("SurrogateModel::load: bad magic in " + path);
        SurrogateConfig cfg;
        cfg.param_dim = autodiff::detail::read_i32(is);
        cfg.measure_dim = autodiff::detail::read_i32(is);
        cfg.channels = autodiff::detail::read_i32(is);
        cfg.grid_n = autodiff::detail::read_i32(is);
        cfg.batch_size = autodiff::detail::read_i32(is);
        cfg.epochs = autodiff::detail::read_i32(is);
        cfg.lr = autodiff::detail::read_f64(is);
        is.read(reinterpret_cast<char*>(&cfg.seed), 8);
        SurrogateModel m(cfg);
        m.occupancy_ = Network::load(is);
        m.param_branch_ = Network::load(is);
        m.grid_branch_ = Network::load(is);
        m.head_ = Network::load(is);
        read_vec(is, m.in_mean_);
        read_vec(is, m.in_std_);
        read_vec(is, m.out_mean_);
        read_vec(is, m.out_std_);
        return m;
    }

    /// Bitwise snapshot of the occupancy parameters (freeze verification).
    Eigen::VectorXd occupancy_param_blob() const
    {
        Eigen::Index n = 0;
        for (const auto* p : occupancy_.params())
            n += p->v.size();
        for (const auto* b : occupancy_.buffers())
            n += b->v.size();
        Eigen::VectorXd blob(n);
        Eigen::Index at = 0;
        for (const auto* p : occupancy_.params()) {
            blob.segment(at, p->v.size()) = p->v;
            at += p->v.size();
        }
        for (const auto* b : occupancy_.buffers()) {
            blob.segment(at, b->v.size()) = b->v;
            at += b->v.size();
        }
        return blob;
    }

    Network& occupancy_net() { return occupancy_; }

private:
    void check_theta(const Eigen::VectorXd& theta) const
    {
        if (theta.size() != cfg_.param_dim)
            throw std::invalid_argument("surrogate: wrong parameter vector length");
    }

    Tensor standardized_input(const Eigen::VectorXd& theta) const
    {
        Tensor t({1, cfg_.param_dim});
        t.v = (theta - in_mean_).cwiseQuotient(in_std_);
        return t;
    }

    Tensor batch_inputs(const Dataset& data, const std::vector<std::size_t>& order,
        std::size_t start, std::size_t bs) const
    {
        Tensor t({static_cast<int>(bs), cfg_.param_dim});
        for (std::size_t b = 0; b < bs; b++)
            t.v.segment(static_cast<Eigen::Index>(b) * cfg_.param_dim, cfg_.param_dim) =
                (data[order[start + b]].theta - in_mean_).cwiseQuotient(in_std_);
        return t;
    }

    Tensor batch_grids(const Dataset& data, const std::vector<std::size_t>& order,
        std::size_t start, std::size_t bs) const
    {
        const Eigen::Index hw = static_cast<Eigen::Index>(cfg_.grid_n) * cfg_.grid_n;
        Tensor t({static_cast<int>(bs), cfg_.channels, cfg_.grid_n, cfg_.grid_n});
        for (std::size_t b = 0; b < bs; b++)
            for (int c = 0; c < cfg_.channels; c++)
                t.v.segment((static_cast<Eigen::Index>(b) * cfg_.channels + c) * hw, hw) =
                    data[order[start + b]].grids[static_cast<std::size_t>(c)];
        return t;
    }

    Tensor concat_features(const Tensor& par, const Tensor& grd) const
    {
        const int n = par.batch();
        const Eigen::Index pf = par.per_sample(), gf = grd.per_sample();
        Tensor cat({n, static_cast<int>(pf + gf)});
        for (int b = 0; b < n; b++) {
            cat.v.segment(b * (pf + gf), pf) = par.v.segment(b * pf, pf);
            cat.v.segment(b * (pf + gf) + pf, gf) = grd.v.segment(b * gf, gf);
        }
        return cat;
    }

    std::vector<Eigen::VectorXd> split_grids(const Tensor& out) const
    {
        const Eigen::Index hw = static_cast<Eigen::Index>(cfg_.grid_n) * cfg_.grid_n;
        std::vector<Eigen::VectorXd> grids;
        for (int c = 0; c < cfg_.channels; c++)
            grids.push_back(out.v.segment(c * hw, hw));
        return grids;
    }

    void fit_input_stats(const Dataset& data)
    {
        const double n = static_cast<double>(data.size());
        in_mean_.setZero();
        for (const auto& s : data.samples())
            in_mean_ += s.theta;
        in_mean_ /= n;
        in_std_.setZero();
        for (const auto& s : data.samples())
            in_std_ += (s.theta - in_mean_).cwiseAbs2();
        in_std_ = (in_std_ / n).cwiseSqrt();
        // Constant dimensions pass through unscaled instead of collapsing
        // every sample to an exactly-zero input.
        for (Eigen::Index i = 0; i < in_std_.size(); i++)
            if (in_std_[i] < 1e-12) {
                in_mean_[i] = 0.0;
                in_std_[i] = 1.0;
            }
    }

    void fit_output_stats(const Dataset& data)
    {
        const double n = static_cast<double>(data.size());
        const int k1 = cfg_.measure_dim + 1;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(k1), sq = Eigen::VectorXd::Zero(k1);
        for (const auto& s : data.samples()) {
            sum[0] += s.f;
            sq[0] += s.f * s.f;
            for (int j = 0; j < cfg_.measure_dim; j++) {
                sum[j + 1] += s.m[j];
                sq[j + 1] += s.m[j] * s.m[j];
            }
        }
        out_mean_ = sum / n;
        out_std_ = ((sq / n) - out_mean_.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-8);
    }

    static void shuffle(std::vector<std::size_t>& order, core::Rng& rng)
    {
        for (std::size_t i = order.size(); i > 1; i--)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }

    static void write_vec(std::ostream& os, const Eigen::VectorXd& v)
    {
        autodiff::detail::write_i32(os, static_cast<std::int32_t>(v.size()));
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
    }
    static void read_vec(std::istream& is, Eigen::VectorXd& v)
    {
        const int n = autodiff::detail::read_i32(is);
        v.resize(n);
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
    }

    SurrogateConfig cfg_;
    Network occupancy_, param_branch_, grid_branch_, head_;
    Eigen::VectorXd in_mean_, in_std_, out_mean_, out_std_;
};

/// Per-head MAE plus archive-cell placement quality of arbitrary predictions.
template <typename PredictFn>
inline ModelMetrics evaluate_predictions(PredictFn&& predict_fn, const Dataset& test,
    const qd::ArchiveSpec& spec)
{
    if (test.empty())
        throw std::invalid_argument("evaluate_model: empty dataset");
    const int k1 = test.measure_dim() + 1;
    ModelMetrics mm;
    mm.mae = Eigen::VectorXd::Zero(k1);
    int hits = 0;
    double manhattan = 0.0;
    for (const auto& s : test.samples()) {
        const Prediction p = predict_fn(s.theta);
        mm.mae[0] += std::abs(p.f - s.f);
        for (int j = 0; j < test.measure_dim(); j++)
            mm.mae[j + 1] += std::abs(p.m[j] - s.m[j]);
        const auto true_cell = qd::cell_coords(spec, s.m);
        const auto pred_cell = qd::cell_coords(spec, p.m);
        if (true_cell == pred_cell)
            hits++;
        for (std::size_t d = 0; d < true_cell.size(); d++)
            manhattan += std::abs(true_cell[d] - pred_cell[d]);
    }
    const double n = static_cast<double>(test.size());
    mm.mae /= n;
    mm.cell_hit_rate = hits / n;
    mm.mean_manhattan = manhattan / n;
    return mm;
}

inline ModelMetrics evaluate_model(const SurrogateModel& model, const Dataset& test,
    const qd::ArchiveSpec& spec)
{
    return evaluate_predictions([&](const Eigen::VectorXd& t) { return model.predict(t); }, test, spec);
}

} // namespace sasgen::surrogate
