#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace sasgen::qd {

using Eigen::VectorXd;

/// Uniform tessellation of measure space. The first listed measure maps to
/// the first archive dimension.
struct ArchiveSpec {
    struct Dim {
        double lo;
        double hi;
        int bins;
    };
    std::vector<Dim> dims;

    ArchiveSpec() = default;
    explicit ArchiveSpec(std::vector<Dim> d) : dims(std::move(d))
    {
        for (const auto& dim : dims)
            if (!(dim.lo < dim.hi) || dim.bins < 1)
                throw std::invalid_argument("ArchiveSpec: require lo < hi and bins >= 1");
    }

    int measure_dim() const { return static_cast<int>(dims.size()); }

    int total_cells() const
    {
        int n = 1;
        for (const auto& d : dims)
            n *= d.bins;
        return n;
    }

    // Domain presets.
    static ArchiveSpec teleop()
    {
        return ArchiveSpec({{0.0, 0.32, 25}, {0.0, 0.112, 100}});
    }
    static ArchiveSpec collab_one()
    {
        return ArchiveSpec({{0.05, 0.32, 27}, {0.35, 1.0, 65}});
    }
    static ArchiveSpec collab_two()
    {
        return ArchiveSpec({{1.0, 5.0, 20}, {0.0, 5.0, 50}});
    }
};

/// Per-dimension bin index; out-of-range measures clamp to the boundary cells.
inline std::vector<int> cell_coords(const ArchiveSpec& spec, const VectorXd& m)
{
    if (m.size() != spec.measure_dim())
        throw std::invalid_argument("cell_coords: measure dimension mismatch");
    std::vector<int> c(spec.dims.size());
    for (std::size_t i = 0; i < spec.dims.size(); i++) {
        if (std::isnan(m[static_cast<Eigen::Index>(i)]))
            throw std::invalid_argument("cell_coords: NaN measure rejected");
        const auto& d = spec.dims[i];
        const double t = (m[static_cast<Eigen::Index>(i)] - d.lo) / (d.hi - d.lo) * d.bins;
        int b = static_cast<int>(std::floor(t));
        b = std::max(0, std::min(d.bins - 1, b));
        c[i] = b;
    }
    return c;
}

inline int cell_index(const ArchiveSpec& spec, const VectorXd& m)
{
    const auto c = cell_coords(spec, m);
    int idx = 0;
    for (std::size_t i = 0; i < c.size(); i++)
        idx = idx * spec.dims[i].bins + c[i];
    return idx;
}

struct Elite {
    VectorXd theta;
    double f = 0.0;
    VectorXd m;
    long eval_index = -1;       // ground-truth evaluation ordinal, -1 for surrogate
    double displacement = 0.0;  // repair displacement of this scenario
};

enum class AddStatus { Inserted, Replaced, Rejected };

struct AddResult {
    AddStatus status = AddStatus::Rejected;
    double improvement = 0.0; // f minus the displaced threshold/incumbent value
    int cell = -1;
};

/// Grid archive. In flat mode (MAP-Elites) a candidate replaces the incumbent
/// only on strict improvement. In soft mode (CMA-MAE) each cell carries an
/// acceptance threshold that anneals toward accepted objectives at rate alpha.
class Archive {
public:
    explicit Archive(ArchiveSpec spec, bool soft = false, double alpha = 0.1, double min_f = 0.0)
        : spec_(std::move(spec)), soft_(soft), alpha_(alpha), min_f_(min_f)
    {
        if (soft_ && !(alpha_ >= 0.0 && alpha_ <= 1.0))
            throw std::invalid_argument("Archive: alpha must be in [0, 1]");
        cells_.assign(static_cast<std::size_t>(spec_.total_cells()), std::nullopt);
        if (soft_)
            thresholds_.assign(cells_.size(), min_f_);
    }

    const ArchiveSpec& spec() const { return spec_; }
    bool soft() const { return soft_; }

    AddResult add_map_elites(const Elite& cand)
    {
        const int idx = cell_index(spec_, cand.m);
        auto& slot = cells_[static_cast<std::size_t>(idx)];
        AddResult r;
        r.cell = idx;
        if (!slot) {
            r.improvement = cand.f;
            slot = cand;
            r.status = AddStatus::Inserted;
            occupied_++;
        }
        else if (cand.f > slot->f) {
            r.improvement = cand.f - slot->f;
            slot = cand;
            r.status = AddStatus::Replaced;
        }
        else {
            r.improvement = cand.f - slot->f;
            r.status = AddStatus::Rejected;
        }
        return r;
    }

    /// Soft-archive addition; returns the improvement over the cell threshold.
    AddResult add_cma_mae(const Elite& cand)
    {
        if (!soft_)
            throw std::logic_error("add_cma_mae requires a soft archive");
        const int idx = cell_index(spec_, cand.m);
        double& t = thresholds_[static_cast<std::size_t>(idx)];
        AddResult r;
        r.cell = idx;
        r.improvement = cand.f - t;
        if (cand.f > t) {
            auto& slot = cells_[static_cast<std::size_t>(idx)];
            r.status = slot ? AddStatus::Replaced : AddStatus::Inserted;
            if (!slot)
                occupied_++;
            slot = cand;
            t = (1.0 - alpha_) * t + alpha_ * cand.f;
        }
        return r;
    }

    AddResult add(const Elite& cand) { return soft_ ? add_cma_mae(cand) : add_map_elites(cand); }

    double qd_score() const
    {
        double s = 0.0;
        for (const auto& c : cells_)
            if (c)
                s += c->f;
        return s;
    }

    int occupied() const { return occupied_; }
    int total_cells() const { return static_cast<int>(cells_.size()); }

    const std::optional<Elite>& cell(int idx) const { return cells_[static_cast<std::size_t>(idx)]; }
    double threshold(int idx) const { return soft_ ? thresholds_[static_cast<std::size_t>(idx)] : min_f_; }

    std::vector<const Elite*> elites() const
    {
        std::vector<const Elite*> es;
        es.reserve(static_cast<std::size_t>(occupied_));
        for (const auto& c : cells_)
            if (c)
                es.push_back(&*c);
        return es;
    }

    std::vector<int> occupied_cells() const
    {
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(occupied_));
        for (std::size_t i = 0; i < cells_.size(); i++)
            if (cells_[i])
                idx.push_back(static_cast<int>(i));
        return idx;
    }

    void clear()
    {
        for (auto& c : cells_)
            c.reset();
        if (soft_)
            thresholds_.assign(cells_.size(), min_f_);
        occupied_ = 0;
    }

private:
    ArchiveSpec spec_;
    bool soft_;
    double alpha_;
    double min_f_;
    std::vector<std::optional<Elite>> cells_;
    std::vector<double> thresholds_;
    int occupied_ = 0;
};

} // namespace sasgen::qd
