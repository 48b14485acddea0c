#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sasgen/pipeline/experiment.hpp>

namespace sasgen::io {

/// Flat key-value configuration with dotted section keys. Lines are
/// `key = value`; '#' starts a comment; unknown keys are rejected.
class KvConfig {
public:
    static KvConfig parse_file(const std::string& path)
    {
        std::ifstream is(path);
        if (!is)
            throw std::invalid_argument("config: cannot open " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str());
    }

    static KvConfig parse(const std::string& text)
    {
        KvConfig kv;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            lineno++;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line = line.substr(0, hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty())
                continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty() || value.empty())
                throw std::invalid_argument("config: empty key or value on line " + std::to_string(lineno));
            kv.values_[key] = value;
        }
        return kv;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key)
    {
        auto it = values_.find(key);
        if (it == values_.end())
            throw std::invalid_argument("config: missing required key '" + key + "'");
        used_.insert({key, true});
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback)
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return fallback;
        used_.insert({key, true});
        return it->second;
    }

    double get_double(const std::string& key, double fallback)
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return fallback;
        used_.insert({key, true});
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size())
                throw std::invalid_argument("");
            return v;
        }
        catch (...) {
            throw std::invalid_argument("config: key '" + key + "' is not a number: " + it->second);
        }
    }

    long get_long(const std::string& key, long fallback)
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return fallback;
        used_.insert({key, true});
        try {
            std::size_t pos = 0;
            const long v = std::stol(it->second, &pos);
            if (pos != it->second.size())
                throw std::invalid_argument("");
            return v;
        }
        catch (...) {
            throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
        }
    }

    /// Any key never consumed by a getter is a typo.
    void reject_unknown() const
    {
        for (const auto& [k, v] : values_)
            if (!used_.count(k))
                throw std::invalid_argument("config: unknown key '" + k + "'");
    }

private:
    static std::string trim(const std::string& s)
    {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos)
            return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
    std::map<std::string, bool> used_;
};

/// Reads an experiment configuration; every key except `domain` and
/// `algorithm` has a default documented in configs/reference.cfg.
inline pipeline::ExperimentConfig experiment_from_kv(KvConfig kv)
{
    pipeline::ExperimentConfig cfg;
    cfg.domain = pipeline::parse_domain(kv.get_string("domain"));
    cfg.algorithm = pipeline::parse_algorithm(kv.get_string("algorithm"));
    cfg.budget = kv.get_long("budget", cfg.budget);
    cfg.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(cfg.seed)));
    cfg.batch = static_cast<int>(kv.get_long("batch", cfg.batch));
    cfg.n_exploit = static_cast<int>(kv.get_long("n_exploit", cfg.n_exploit));
    cfg.k_sel = static_cast<int>(kv.get_long("k_sel", cfg.k_sel));
    cfg.random_batch = static_cast<int>(kv.get_long("random_batch", cfg.random_batch));
    cfg.reg_weight = kv.get_double("reg.weight", cfg.reg_weight);
    cfg.alpha = kv.get_double("archive.alpha", cfg.alpha);
    cfg.min_f = kv.get_double("archive.min_f", cfg.min_f);
    cfg.surrogate_epochs = static_cast<int>(kv.get_long("surrogate.epochs", cfg.surrogate_epochs));
    cfg.surrogate_lr = kv.get_double("surrogate.lr", cfg.surrogate_lr);
    cfg.surrogate_batch = static_cast<int>(kv.get_long("surrogate.batch", cfg.surrogate_batch));
    cfg.workers = static_cast<int>(kv.get_long("workers", cfg.workers));

    auto& s = cfg.sim;
    s.dt = kv.get_double("sim.dt", s.dt);
    s.human_speed = kv.get_double("sim.human_speed", s.human_speed);
    s.robot_speed = kv.get_double("sim.robot_speed", s.robot_speed);
    s.t_work = kv.get_double("sim.t_work", s.t_work);
    s.t_reset = kv.get_double("sim.t_reset", s.t_reset);
    s.reach_radius = kv.get_double("sim.reach_radius", s.reach_radius);
    s.waypoint_tolerance = kv.get_double("sim.waypoint_tolerance", s.waypoint_tolerance);
    s.beta_belief_teleop = kv.get_double("sim.beta_belief_teleop", s.beta_belief_teleop);
    s.beta_belief_collab = kv.get_double("sim.beta_belief_collab", s.beta_belief_collab);
    s.blend_threshold = kv.get_double("sim.blend_threshold", s.blend_threshold);
    s.teleop_cap = kv.get_double("sim.teleop_cap", s.teleop_cap);
    s.collab_cap = kv.get_double("sim.collab_cap", s.collab_cap);
    s.replan_radius = kv.get_double("sim.replan_radius", s.replan_radius);
    s.goal_half_side = kv.get_double("sim.goal_half_side", s.goal_half_side);
    s.mdp_cell = kv.get_double("sim.mdp_cell", s.mdp_cell);
    s.mdp_gamma = kv.get_double("sim.mdp_gamma", s.mdp_gamma);
    s.mdp_temperature = kv.get_double("sim.mdp_temperature", s.mdp_temperature);

    kv.reject_unknown();
    cfg.validate();
    return cfg;
}

} // namespace sasgen::io
