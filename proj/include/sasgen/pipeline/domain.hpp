#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <sasgen/core/random.hpp>
#include <sasgen/qd/archive.hpp>
#include <sasgen/repair/repair.hpp>
#include <sasgen/sim/collab.hpp>
#include <sasgen/sim/teleop.hpp>

namespace sasgen::pipeline {

using Eigen::Vector2d;
using Eigen::VectorXd;

enum class DomainKind { Teleop, TeleopBlend, CollabI, CollabII, CollabIHumanSearch, CollabISuccess };

inline DomainKind parse_domain(const std::string& s)
{
    if (s == "teleop")
        return DomainKind::Teleop;
    if (s == "teleop-blend")
        return DomainKind::TeleopBlend;
    if (s == "collab-I")
        return DomainKind::CollabI;
    if (s == "collab-II")
        return DomainKind::CollabII;
    if (s == "collab-I-human-search")
        return DomainKind::CollabIHumanSearch;
    if (s == "collab-I-success")
        return DomainKind::CollabISuccess;
    throw std::invalid_argument("unknown domain '" + s + "'");
}

inline const char* domain_name(DomainKind k)
{
    switch (k) {
    case DomainKind::Teleop: return "teleop";
    case DomainKind::TeleopBlend: return "teleop-blend";
    case DomainKind::CollabI: return "collab-I";
    case DomainKind::CollabII: return "collab-II";
    case DomainKind::CollabIHumanSearch: return "collab-I-human-search";
    case DomainKind::CollabISuccess: return "collab-I-success";
    }
    return "?";
}

inline bool is_teleop(DomainKind k) { return k == DomainKind::Teleop || k == DomainKind::TeleopBlend; }

struct EvalResult {
    bool ok = true;
    VectorXd theta;        // repaired parameters, as stored everywhere downstream
    double f_raw = 0.0;    // raw objective (seconds)
    double f_train = 0.0;  // regularized objective for the training archive
    VectorXd m;
    std::vector<VectorXd> grids;
    double displacement = 0.0;
    std::uint64_t sim_seed = 0;
};

/// Binds one experimental domain: parameter layout and bounds, repair,
/// simulation, objective/measure extraction, and QD presets.
class Domain {
public:
    static constexpr double kNoiseCap = 0.112 * 0.112 / 5.0;
    static constexpr double kBetaHLo = 500.0, kBetaHHi = 5000.0;
    static constexpr double kVMultLo = 0.8, kVMultHi = 1.5;

    Domain(DomainKind kind, sim::SimConfig sim_cfg, double reg_weight)
        : kind_(kind), sim_(sim_cfg), reg_weight_(reg_weight)
    {
        if (kind_ == DomainKind::TeleopBlend)
            sim_.teleop_cap = 20.0;
    }

    DomainKind kind() const { return kind_; }
    const sim::SimConfig& sim_config() const { return sim_; }
    double reg_weight() const { return reg_weight_; }

    int param_dim() const
    {
        switch (kind_) {
        case DomainKind::Teleop:
        case DomainKind::TeleopBlend: return 9;
        case DomainKind::CollabIHumanSearch: return 8;
        default: return 6;
        }
    }

    int measure_dim() const { return 2; }
    int channels() const { return is_teleop(kind_) ? 1 : 2; }

    double objective_cap() const
    {
        return is_teleop(kind_) ? sim_.teleop_cap : sim_.collab_cap;
    }

    qd::ArchiveSpec archive_spec() const
    {
        switch (kind_) {
        case DomainKind::Teleop:
        case DomainKind::TeleopBlend: return qd::ArchiveSpec::teleop();
        case DomainKind::CollabII: return qd::ArchiveSpec::collab_two();
        default: return qd::ArchiveSpec::collab_one();
        }
    }

    VectorXd lower_bounds() const
    {
        VectorXd lo(param_dim());
        if (is_teleop(kind_)) {
            const auto& w = sim_.teleop_workspace;
            lo << w.x_min, w.y_min, w.x_min, w.y_min, 0, 0, 0, 0, 0;
            return lo;
        }
        const auto& l = sim_.region_left;
        const auto& r = sim_.region_right;
        for (int g = 0; g < 3; g++) {
            lo[2 * g] = std::min(l.x_min, r.x_min);
            lo[2 * g + 1] = std::min(l.y_min, r.y_min);
        }
        if (kind_ == DomainKind::CollabIHumanSearch) {
            lo[6] = kBetaHLo;
            lo[7] = kVMultLo;
        }
        return lo;
    }

    VectorXd upper_bounds() const
    {
        VectorXd hi(param_dim());
        if (is_teleop(kind_)) {
            const auto& w = sim_.teleop_workspace;
            hi << w.x_max, w.y_max, w.x_max, w.y_max, kNoiseCap, kNoiseCap, kNoiseCap, kNoiseCap, kNoiseCap;
            return hi;
        }
        const auto& l = sim_.region_left;
        const auto& r = sim_.region_right;
        for (int g = 0; g < 3; g++) {
            hi[2 * g] = std::max(l.x_max, r.x_max);
            hi[2 * g + 1] = std::max(l.y_max, r.y_max);
        }
        if (kind_ == DomainKind::CollabIHumanSearch) {
            hi[6] = kBetaHHi;
            hi[7] = kVMultHi;
        }
        return hi;
    }

    VectorXd initial_theta() const { return 0.5 * (lower_bounds() + upper_bounds()); }

    /// MAP-Elites isotropic perturbation scale per parameter.
    VectorXd map_elites_sigma() const
    {
        VectorXd s(param_dim());
        if (is_teleop(kind_)) {
            s << 0.01, 0.01, 0.01, 0.01, 0.005, 0.005, 0.005, 0.005, 0.005;
            return s;
        }
        s.setConstant(0.1);
        return s;
    }

    double cma_sigma0() const { return is_teleop(kind_) ? 0.01 : 1.0; }

    /// Repairs a raw parameter vector: clamp for teleoperation, the exact
    /// placement program for collaboration. Returns the repaired vector and
    /// the displacement sum feeding the regularization.
    std::pair<VectorXd, double> repair_params(const VectorXd& theta) const
    {
        if (theta.size() != param_dim())
            throw std::invalid_argument("repair_params: wrong parameter count");
        if (is_teleop(kind_)) {
            auto r = repair::repair_teleop(theta, sim_.teleop_workspace, 2, 0.0, kNoiseCap);
            return {r.theta, r.displacement};
        }
        repair::RepairProblem p;
        p.regions = {sim_.region_left, sim_.region_right};
        for (int g = 0; g < 3; g++) {
            p.positions.emplace_back(theta[2 * g], theta[2 * g + 1]);
            p.half_side.push_back(sim_.goal_half_side);
        }
        const auto r = repair::repair(p);
        VectorXd out = theta;
        for (int g = 0; g < 3; g++) {
            out[2 * g] = r.positions[static_cast<std::size_t>(g)].x();
            out[2 * g + 1] = r.positions[static_cast<std::size_t>(g)].y();
        }
        if (kind_ == DomainKind::CollabIHumanSearch) {
            // Human-model parameters clamp to their bounds; the displacement
            // penalty stays in meters of object motion.
            out[6] = std::clamp(out[6], kBetaHLo, kBetaHHi);
            out[7] = std::clamp(out[7], kVMultLo, kVMultHi);
        }
        return {out, r.displacement};
    }

    sim::SimOutcome simulate(const VectorXd& theta_repaired, std::uint64_t sim_seed) const
    {
        if (is_teleop(kind_)) {
            sim::TeleopScenario sc;
            sc.goal1 = Vector2d(theta_repaired[0], theta_repaired[1]);
            sc.goal2 = Vector2d(theta_repaired[2], theta_repaired[3]);
            sc.eta = theta_repaired.segment(4, 5);
            const auto policy = kind_ == DomainKind::TeleopBlend ? sim::TeleopPolicy::Blend
                                                                 : sim::TeleopPolicy::SharedAutonomy;
            return sim::simulate_teleop(sc, sim_, policy);
        }
        sim::CollabScenario sc;
        for (int g = 0; g < 3; g++)
            sc.goals.emplace_back(theta_repaired[2 * g], theta_repaired[2 * g + 1]);
        if (kind_ == DomainKind::CollabIHumanSearch) {
            sc.softmax_human = true;
            sc.beta_h = theta_repaired[6];
            sc.v_mult = theta_repaired[7];
        }
        return sim::simulate_collab(sc, sim_, sim_seed);
    }

    double objective(const sim::SimOutcome& out) const
    {
        if (kind_ == DomainKind::CollabISuccess)
            return sim_.collab_cap - out.f;
        return out.f;
    }

    VectorXd measures(const sim::SimOutcome& out) const
    {
        if (is_teleop(kind_))
            return out.m;
        VectorXd m(2);
        if (kind_ == DomainKind::CollabII)
            m << out.m[2], out.m[3];
        else
            m << out.m[0], out.m[1];
        return m;
    }

    /// Full ground-truth evaluation of a raw candidate.
    EvalResult evaluate(const VectorXd& theta, std::uint64_t master_seed) const
    {
        EvalResult r;
        auto [repaired, disp] = repair_params(theta);
        r.theta = repaired;
        r.displacement = disp;
        r.sim_seed = core::hash_vector(master_seed, repaired);
        const auto out = simulate(repaired, r.sim_seed);
        if (!out.ok) {
            r.ok = false;
            return r;
        }
        r.f_raw = objective(out);
        r.f_train = repair::regularize(r.f_raw, disp, reg_weight_);
        r.m = measures(out);
        r.grids = out.grids;
        return r;
    }

    /// Uniform sampling from the valid regions: goals sampled per region with
    /// overlap rejection (collaboration) or uniformly in the box (teleop).
    VectorXd sample_random(core::Rng& rng) const
    {
        if (is_teleop(kind_)) {
            VectorXd theta(9);
            const auto& w = sim_.teleop_workspace;
            for (int g = 0; g < 2; g++) {
                theta[2 * g] = rng.uniform(w.x_min, w.x_max);
                theta[2 * g + 1] = rng.uniform(w.y_min, w.y_max);
            }
            for (int i = 4; i < 9; i++)
                theta[i] = rng.uniform(0.0, kNoiseCap);
            return theta;
        }
        VectorXd theta(param_dim());
        std::vector<Vector2d> placed;
        const double s = 2.0 * sim_.goal_half_side;
        for (int g = 0; g < 3; g++) {
            Vector2d p;
            for (int tries = 0; tries < 100; tries++) {
                const auto& reg = rng.uniform() < 0.5 ? sim_.region_left : sim_.region_right;
                p = Vector2d(rng.uniform(reg.x_min, reg.x_max), rng.uniform(reg.y_min, reg.y_max));
                bool clash = false;
                for (const auto& q : placed)
                    clash = clash || (std::abs(p.x() - q.x()) < s && std::abs(p.y() - q.y()) < s);
                if (!clash)
                    break;
                // after 100 tries the overlapping sample is accepted; the
                // repair stage resolves it
            }
            placed.push_back(p);
            theta[2 * g] = p.x();
            theta[2 * g + 1] = p.y();
        }
        if (kind_ == DomainKind::CollabIHumanSearch) {
            theta[6] = rng.uniform(kBetaHLo, kBetaHHi);
            theta[7] = rng.uniform(kVMultLo, kVMultHi);
        }
        return theta;
    }

private:
    DomainKind kind_;
    sim::SimConfig sim_;
    double reg_weight_;
};

} // namespace sasgen::pipeline
