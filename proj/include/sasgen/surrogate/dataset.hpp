#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sasgen::surrogate {

using Eigen::VectorXd;

/// One labeled scenario: repaired parameters, ground-truth objective and
/// measures, and per-agent occupancy grids.
struct TrainingSample {
    VectorXd theta;
    double f = 0.0;
    VectorXd m;
    std::vector<VectorXd> grids; // C grids, each grid_n * grid_n, summing to 1
};

/// Append-only record store with a versioned binary file format.
class Dataset {
public:
    Dataset() = default;
    Dataset(int param_dim, int measure_dim, int channels, int grid_n = 32)
        : param_dim_(param_dim), measure_dim_(measure_dim), channels_(channels), grid_n_(grid_n)
    {
    }

    int param_dim() const { return param_dim_; }
    int measure_dim() const { return measure_dim_; }
    int channels() const { return channels_; }
    int grid_n() const { return grid_n_; }

    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const TrainingSample& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<TrainingSample>& samples() const { return samples_; }

    void append(TrainingSample s)
    {
        if (s.theta.size() != param_dim_ || s.m.size() != measure_dim_
            || static_cast<int>(s.grids.size()) != channels_)
            throw std::invalid_argument("Dataset::append: sample schema mismatch");
        for (const auto& g : s.grids)
            if (g.size() != static_cast<Eigen::Index>(grid_n_) * grid_n_)
                throw std::invalid_argument("Dataset::append: grid size mismatch");
        samples_.push_back(std::move(s));
    }

    void save(const std::string& path) const
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("Dataset::save: cannot open " + path);
        const char magic[8] = {'S', 'G', 'D', 'A', 'T', 'A', '0', '1'};
        os.write(magic, 8);
        write_i64(os, param_dim_);
        write_i64(os, measure_dim_);
        write_i64(os, channels_);
        write_i64(os, grid_n_);
        write_i64(os, static_cast<std::int64_t>(samples_.size()));
        for (const auto& s : samples_) {
            os.write(reinterpret_cast<const char*>(s.theta.data()), param_dim_ * 8);
            os.write(reinterpret_cast<const char*>(&s.f), 8);
            os.write(reinterpret_cast<const char*>(s.m.data()), measure_dim_ * 8);
            for (const auto& g : s.grids)
                os.write(reinterpret_cast<const char*>(g.data()), static_cast<std::streamsize>(g.size() * 8));
        }
    }

    static Dataset load(const std::string& path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw std::runtime_error("Dataset::load: cannot open " + path);
        char magic[8];
        is.read(magic, 8);
        if (std::string(magic, 8) != "SGDATA01")
            throw std::runtime_error("Dataset::load: bad magic in " + path);
        Dataset d;
        d.param_dim_ = static_cast<int>(read_i64(is));
        d.measure_dim_ = static_cast<int>(read_i64(is));
        d.channels_ = static_cast<int>(read_i64(is));
        d.grid_n_ = static_cast<int>(read_i64(is));
        const std::int64_t n = read_i64(is);
        d.samples_.resize(static_cast<std::size_t>(n));
        for (auto& s : d.samples_) {
            s.theta.resize(d.param_dim_);
            is.read(reinterpret_cast<char*>(s.theta.data()), d.param_dim_ * 8);
            is.read(reinterpret_cast<char*>(&s.f), 8);
            s.m.resize(d.measure_dim_);
            is.read(reinterpret_cast<char*>(s.m.data()), d.measure_dim_ * 8);
            s.grids.resize(static_cast<std::size_t>(d.channels_));
            for (auto& g : s.grids) {
                g.resize(static_cast<Eigen::Index>(d.grid_n_) * d.grid_n_);
                is.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(g.size() * 8));
            }
        }
        if (!is)
            throw std::runtime_error("Dataset::load: truncated file " + path);
        return d;
    }

private:
    static void write_i64(std::ostream& os, std::int64_t x) { os.write(reinterpret_cast<const char*>(&x), 8); }
    static std::int64_t read_i64(std::istream& is)
    {
        std::int64_t x = 0;
        is.read(reinterpret_cast<char*>(&x), 8);
        return x;
    }

    int param_dim_ = 0, measure_dim_ = 0, channels_ = 0, grid_n_ = 32;
    std::vector<TrainingSample> samples_;
};

} // namespace sasgen::surrogate
