#pragma once

#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <sasgen/autodiff/layers.hpp>

namespace sasgen::autodiff {

/// A sequential stack of layers. `forward` returns the full activation list
/// (input first, final output last) so that `backward` has no hidden state.
class Network {
public:
    Network() = default;

    template <typename L, typename... Args>
    L& add(Args&&... args)
    {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::size_t num_layers() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    std::vector<Tensor> forward(const Tensor& input, Mode mode) const
    {
        std::vector<Tensor> acts(layers_.size() + 1);
        acts[0] = input;
        for (std::size_t i = 0; i < layers_.size(); i++) {
            try {
                layers_[i]->out_shape(acts[i].shape);
            }
            catch (const std::invalid_argument& e) {
                throw std::invalid_argument("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what());
            }
            layers_[i]->forward(acts[i], acts[i + 1], mode);
        }
        return acts;
    }

    /// Backpropagates `gout` (gradient w.r.t. the final output) through the
    /// stack. Accumulates parameter gradients unless `param_grads` is false
    /// and returns the gradient w.r.t. the network input.
    VectorXd backward(const std::vector<Tensor>& acts, const VectorXd& gout, Mode mode,
        bool param_grads = true)
    {
        if (acts.size() != layers_.size() + 1)
            throw std::invalid_argument("backward: activation list does not match network depth");
        if (gout.size() != acts.back().v.size())
            throw std::invalid_argument("backward: output gradient size mismatch");
        VectorXd g = gout;
        VectorXd gin;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            layers_[i]->backward(acts[i], acts[i + 1], g, gin, mode, param_grads);
            g.swap(gin);
        }
        return g;
    }

    std::vector<Tensor*> params()
    {
        std::vector<Tensor*> ps;
        for (auto& l : layers_)
            for (Tensor* p : l->params())
                ps.push_back(p);
        return ps;
    }

    std::vector<const Tensor*> params() const
    {
        std::vector<const Tensor*> ps;
        for (const auto& l : layers_)
            for (const Tensor* p : l->params())
                ps.push_back(p);
        return ps;
    }

    std::vector<Tensor*> buffers()
    {
        std::vector<Tensor*> bs;
        for (auto& l : layers_)
            for (Tensor* b : l->buffers())
                bs.push_back(b);
        return bs;
    }

    std::vector<const Tensor*> buffers() const
    {
        std::vector<const Tensor*> bs;
        for (const auto& l : layers_)
            for (const Tensor* b : l->buffers())
                bs.push_back(b);
        return bs;
    }

    void zero_grads()
    {
        for (Tensor* p : params())
            p->zero_grad();
    }

    void save(std::ostream& os) const
    {
        detail::write_i32(os, static_cast<std::int32_t>(layers_.size()));
        for (const auto& l : layers_) {
            const std::string k = l->kind();
            detail::write_i32(os, static_cast<std::int32_t>(k.size()));
            os.write(k.data(), static_cast<std::streamsize>(k.size()));
            l->write_spec(os);
        }
        for (const Tensor* p : params())
            write_tensor(os, *p);
        for (const Tensor* b : buffers())
            write_tensor(os, *b);
    }

    static Network load(std::istream& is)
    {
        Network net;
        core::Rng dummy(0);
        const int n = detail::read_i32(is);
        for (int i = 0; i < n; i++) {
            const int len = detail::read_i32(is);
            std::string kind(static_cast<std::size_t>(len), '\0');
            is.read(kind.data(), len);
            if (kind == "Dense") {
                const int fi = detail::read_i32(is), fo = detail::read_i32(is);
                net.add<Dense>(fi, fo, dummy);
            }
            else if (kind == "ReLU") {
                net.add<ReLU>();
            }
            else if (kind == "LeakyReLU") {
                net.add<LeakyReLU>(detail::read_f64(is));
            }
            else if (kind == "ChannelSoftmax") {
                net.add<ChannelSoftmax>();
            }
            else if (kind == "BatchNorm") {
                const int c = detail::read_i32(is);
                const double m = detail::read_f64(is), e = detail::read_f64(is);
                net.add<BatchNorm>(c, m, e);
            }
            else if (kind == "Conv2D" || kind == "Deconv2D") {
                int a[7];
                for (int& x : a)
                    x = detail::read_i32(is);
                if (kind == "Conv2D")
                    net.add<Conv2D>(a[0], a[1], a[2], a[3], a[4], a[5], a[6], dummy);
                else
                    net.add<Deconv2D>(a[0], a[1], a[2], a[3], a[4], a[5], a[6], dummy);
            }
            else {
                throw std::runtime_error("Network::load: unknown layer kind '" + kind + "'");
            }
        }
        for (Tensor* p : net.params())
            read_tensor(is, *p);
        for (Tensor* b : net.buffers())
            read_tensor(is, *b);
        return net;
    }

private:
    static void write_tensor(std::ostream& os, const Tensor& t)
    {
        detail::write_i32(os, static_cast<std::int32_t>(t.v.size()));
        os.write(reinterpret_cast<const char*>(t.v.data()), static_cast<std::streamsize>(t.v.size() * 8));
    }

    static void read_tensor(std::istream& is, Tensor& t)
    {
        const int n = detail::read_i32(is);
        if (n != t.v.size())
            throw std::runtime_error("Network::load: tensor size mismatch");
        is.read(reinterpret_cast<char*>(t.v.data()), static_cast<std::streamsize>(t.v.size() * 8));
    }

    std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace sasgen::autodiff
