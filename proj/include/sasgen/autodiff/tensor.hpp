#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sasgen::autodiff {

using Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatMap = Eigen::Map<RowMat>;
using ConstRowMatMap = Eigen::Map<const RowMat>;

/// Dense row-major tensor. The gradient buffer `g` is either empty or the
/// same size as the value buffer.
struct Tensor {
    std::vector<int> shape;
    VectorXd v;
    VectorXd g;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s))
    {
        v = VectorXd::Zero(count(shape));
    }

    static Eigen::Index count(const std::vector<int>& s)
    {
        Eigen::Index n = 1;
        for (int d : s)
            n *= d;
        return n;
    }

    Eigen::Index size() const { return v.size(); }

    void alloc_grad()
    {
        if (g.size() != v.size())
            g = VectorXd::Zero(v.size());
    }

    void zero_grad()
    {
        if (g.size() != v.size())
            g = VectorXd::Zero(v.size());
        else
            g.setZero();
    }

    // Leading dimension is the batch.
    int batch() const { return shape.empty() ? 0 : shape[0]; }

    Eigen::Index per_sample() const
    {
        return shape.empty() ? 0 : size() / std::max(1, shape[0]);
    }
};

inline std::string shape_str(const std::vector<int>& s)
{
    std::string r = "(";
    for (std::size_t i = 0; i < s.size(); i++) {
        if (i)
            r += ",";
        r += std::to_string(s[i]);
    }
    return r + ")";
}

} // namespace sasgen::autodiff
