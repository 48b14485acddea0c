#pragma once

#include <algorithm>
#include <cstring>
#include <vector>

#include <sasgen/autodiff/network.hpp>
#include <sasgen/core/random.hpp>

namespace sasgen::autodiff {

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
    int excluded = 0; // coordinates skipped because a ReLU kink was crossed
};

namespace detail {

    // Sign pattern of every ReLU/LeakyReLU input; a coordinate whose +/- eps
    // evaluations disagree here sits on a nondifferentiable kink.
    inline std::vector<char> relu_signs(const Network& net, const std::vector<Tensor>& acts)
    {
        std::vector<char> signs;
        for (std::size_t i = 0; i < net.num_layers(); i++) {
            const std::string k = net.layer(i).kind();
            if (k != "ReLU" && k != "LeakyReLU")
                continue;
            for (Eigen::Index j = 0; j < acts[i].v.size(); j++)
                signs.push_back(acts[i].v[j] > 0.0 ? 1 : 0);
        }
        return signs;
    }

} // namespace detail

/// Central-difference check of the analytic gradients (parameters and input)
/// of the scalar r . net(input), with r a fixed random projection. Checks a
/// random subset of at least `min_coords` coordinates and excludes those
/// where the perturbation crosses a ReLU kink.
inline GradCheckResult finite_diff_check(Network& net, const Tensor& input, double eps,
    int min_coords = 32, std::uint64_t seed = 12345, Mode mode = Mode::Inference)
{
    if (!(eps > 0.0 && eps <= 1e-2))
        throw std::invalid_argument("finite_diff_check: eps must be in (0, 1e-2]");
    core::Rng rng(seed);

    auto acts = net.forward(input, mode);
    VectorXd r(acts.back().v.size());
    for (Eigen::Index i = 0; i < r.size(); i++)
        r[i] = rng.uniform(-1.0, 1.0);

    net.zero_grads();
    const VectorXd gin = net.backward(acts, r, mode, true);

    auto params = net.params();
    std::vector<double*> slots;
    std::vector<double> analytic;
    for (std::size_t p = 0; p < params.size(); p++)
        for (Eigen::Index i = 0; i < params[p]->v.size(); i++) {
            slots.push_back(params[p]->v.data() + i);
            analytic.push_back(params[p]->g[i]);
        }
    Tensor probe = input;
    for (Eigen::Index i = 0; i < probe.v.size(); i++) {
        slots.push_back(probe.v.data() + i);
        analytic.push_back(gin[i]);
    }

    const int total = static_cast<int>(slots.size());
    const int n_check = std::min(total, std::max(min_coords, 32));
    std::vector<int> order(total);
    for (int i = 0; i < total; i++)
        order[i] = i;
    for (int i = total - 1; i > 0; i--)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);

    GradCheckResult res;
    for (int c = 0; c < n_check; c++) {
        const int idx = order[c];
        double* slot = slots[idx];
        const double old = *slot;

        *slot = old + eps;
        auto ap = net.forward(probe, mode);
        const double fp = r.dot(ap.back().v);
        const auto sp = detail::relu_signs(net, ap);

        *slot = old - eps;
        auto am = net.forward(probe, mode);
        const double fm = r.dot(am.back().v);
        const auto sm = detail::relu_signs(net, am);
        *slot = old;

        if (sp != sm) {
            res.excluded++;
            continue;
        }
        const double fd = (fp - fm) / (2.0 * eps);
        const double a = analytic[idx];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-30});
        const double rel = std::abs(a - fd) < 1e-12 ? 0.0 : std::abs(a - fd) / denom;
        res.max_rel_error = std::max(res.max_rel_error, rel);
        res.checked++;
    }
    return res;
}

} // namespace sasgen::autodiff
