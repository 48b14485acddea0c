#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <string>

#include <json.hpp>

#include <sasgen/pipeline/experiment.hpp>

namespace sasgen::io {

using nlohmann::json;

inline json experiment_to_json(const pipeline::ExperimentConfig& c)
{
    json j;
    j["domain"] = pipeline::domain_name(c.domain);
    j["algorithm"] = pipeline::algorithm_name(c.algorithm);
    j["budget"] = c.budget;
    j["seed"] = c.seed;
    j["batch"] = c.batch;
    j["n_exploit"] = c.n_exploit;
    j["k_sel"] = c.k_sel;
    j["random_batch"] = c.random_batch;
    j["reg_weight"] = c.reg_weight;
    j["alpha"] = c.alpha;
    j["min_f"] = c.min_f;
    j["surrogate"] = {{"epochs", c.surrogate_epochs}, {"lr", c.surrogate_lr}, {"batch", c.surrogate_batch}};
    j["workers"] = c.workers;
    const auto& s = c.sim;
    j["sim"] = {
        {"dt", s.dt},
        {"human_speed", s.human_speed},
        {"robot_speed", s.robot_speed},
        {"t_work", s.t_work},
        {"t_reset", s.t_reset},
        {"reach_radius", s.reach_radius},
        {"waypoint_tolerance", s.waypoint_tolerance},
        {"beta_belief_teleop", s.beta_belief_teleop},
        {"beta_belief_collab", s.beta_belief_collab},
        {"blend_threshold", s.blend_threshold},
        {"teleop_cap", s.teleop_cap},
        {"collab_cap", s.collab_cap},
        {"replan_radius", s.replan_radius},
        {"goal_half_side", s.goal_half_side},
        {"mdp_cell", s.mdp_cell},
        {"mdp_gamma", s.mdp_gamma},
        {"mdp_temperature", s.mdp_temperature},
    };
    return j;
}

inline pipeline::ExperimentConfig experiment_from_json(const json& j)
{
    pipeline::ExperimentConfig c;
    c.domain = pipeline::parse_domain(j.at("domain").get<std::string>());
    c.algorithm = pipeline::parse_algorithm(j.at("algorithm").get<std::string>());
    c.budget = j.at("budget").get<long>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.batch = j.at("batch").get<int>();
    c.n_exploit = j.at("n_exploit").get<int>();
    c.k_sel = j.at("k_sel").get<int>();
    c.random_batch = j.at("random_batch").get<int>();
    c.reg_weight = j.at("reg_weight").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.min_f = j.at("min_f").get<double>();
    c.surrogate_epochs = j.at("surrogate").at("epochs").get<int>();
    c.surrogate_lr = j.at("surrogate").at("lr").get<double>();
    c.surrogate_batch = j.at("surrogate").at("batch").get<int>();
    c.workers = j.at("workers").get<int>();
    auto& s = c.sim;
    const auto& js = j.at("sim");
    s.dt = js.at("dt").get<double>();
    s.human_speed = js.at("human_speed").get<double>();
    s.robot_speed = js.at("robot_speed").get<double>();
    s.t_work = js.at("t_work").get<double>();
    s.t_reset = js.at("t_reset").get<double>();
    s.reach_radius = js.at("reach_radius").get<double>();
    s.waypoint_tolerance = js.at("waypoint_tolerance").get<double>();
    s.beta_belief_teleop = js.at("beta_belief_teleop").get<double>();
    s.beta_belief_collab = js.at("beta_belief_collab").get<double>();
    s.blend_threshold = js.at("blend_threshold").get<double>();
    s.teleop_cap = js.at("teleop_cap").get<double>();
    s.collab_cap = js.at("collab_cap").get<double>();
    s.replan_radius = js.at("replan_radius").get<double>();
    s.goal_half_side = js.at("goal_half_side").get<double>();
    s.mdp_cell = js.at("mdp_cell").get<double>();
    s.mdp_gamma = js.at("mdp_gamma").get<double>();
    s.mdp_temperature = js.at("mdp_temperature").get<double>();
    return c;
}

inline std::string timestamp_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

} // namespace sasgen::io
