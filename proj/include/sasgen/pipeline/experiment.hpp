#pragma once

#include <stdexcept>
#include <string>

#include <sasgen/pipeline/domain.hpp>

namespace sasgen::pipeline {

enum class Algorithm { Dsas, Sas, CmaMae, MapElites, Random };

inline Algorithm parse_algorithm(const std::string& s)
{
    if (s == "dsas")
        return Algorithm::Dsas;
    if (s == "sas")
        return Algorithm::Sas;
    if (s == "cma-mae")
        return Algorithm::CmaMae;
    if (s == "map-elites")
        return Algorithm::MapElites;
    if (s == "random")
        return Algorithm::Random;
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

inline const char* algorithm_name(Algorithm a)
{
    switch (a) {
    case Algorithm::Dsas: return "dsas";
    case Algorithm::Sas: return "sas";
    case Algorithm::CmaMae: return "cma-mae";
    case Algorithm::MapElites: return "map-elites";
    case Algorithm::Random: return "random";
    }
    return "?";
}

struct ExperimentConfig {
    DomainKind domain = DomainKind::Teleop;
    Algorithm algorithm = Algorithm::Random;
    long budget = 10000;
    std::uint64_t seed = 1;

    int batch = 36;         // CMA-ES lambda / branching batch / MAP-Elites batch
    int n_exploit = 100;    // inner-loop iterations per outer iteration
    int k_sel = 100;        // solutions labeled per outer iteration
    int random_batch = 100; // labeling batch for random search

    double reg_weight = 100.0; // seconds per meter of repair displacement
    double alpha = 0.1;        // soft-archive learning rate
    double min_f = 0.0;        // soft-archive initial threshold

    int surrogate_epochs = 100;
    double surrogate_lr = 1e-4;
    int surrogate_batch = 64;

    int workers = 0; // 0: SASGEN_WORKERS or hardware concurrency

    sim::SimConfig sim;

    void validate() const
    {
        if (budget <= 0)
            throw std::invalid_argument("config: budget must be positive");
        if (batch < 2)
            throw std::invalid_argument("config: batch must be at least 2");
        if (n_exploit < 0 || k_sel < 1 || random_batch < 1)
            throw std::invalid_argument("config: invalid loop sizes");
        if (alpha < 0.0 || alpha > 1.0)
            throw std::invalid_argument("config: alpha must be in [0, 1]");
        if (reg_weight < 0.0)
            throw std::invalid_argument("config: reg_weight must be nonnegative");
        if (surrogate_epochs < 1 || surrogate_batch < 1 || surrogate_lr <= 0.0)
            throw std::invalid_argument("config: invalid surrogate training settings");
        if (sim.dt <= 0.0 || sim.human_speed <= 0.0 || sim.robot_speed <= 0.0)
            throw std::invalid_argument("config: invalid simulation timing");
        if (!(sim.blend_threshold > 0.5 && sim.blend_threshold < 1.0))
            throw std::invalid_argument("config: blend threshold must be in (0.5, 1)");
    }
};

} // namespace sasgen::pipeline
