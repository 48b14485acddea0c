#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <sasgen/io/archive_csv.hpp>
#include <sasgen/io/heatmap.hpp>
#include <sasgen/io/kv_config.hpp>
#include <sasgen/io/manifest.hpp>
#include <sasgen/pipeline/runner.hpp>

namespace sasgen::cli {

namespace fs = std::filesystem;
using io::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
};

inline int cmd_run(const RunOptions& opt, std::ostream& log = std::cout)
{
    pipeline::ExperimentConfig cfg;
    try {
        cfg = io::experiment_from_kv(io::KvConfig::parse_file(opt.config_path));
        if (opt.seed_override)
            cfg.seed = *opt.seed_override;
    }
    catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        fs::create_directories(opt.out_dir);
        const std::string started = io::timestamp_now();

        pipeline::Runner runner(cfg);
        std::vector<std::string> checkpoints;
        auto hook = [&](int outer, const surrogate::SurrogateModel& model) {
            char name[64];
            std::snprintf(name, sizeof(name), "model_%04d.bin", outer);
            const std::string path = (fs::path(opt.out_dir) / name).string();
            model.save(path);
            checkpoints.push_back(name);
        };
        auto res = runner.run(hook);

        const fs::path out(opt.out_dir);
        io::write_archive_csv(*res.final_archive, (out / "archive_final.csv").string());
        io::write_archive_csv(*res.training_archive, (out / "archive_training.csv").string());
        res.dataset.save((out / "dataset.bin").string());

        {
            std::ofstream ms((out / "metrics.csv").string());
            ms << "evals,wall_clock_s,qd_score,occupied,training_qd_score\n";
            for (const auto& row : res.history)
                ms << row.evals << "," << io::format_g9(row.wall_clock) << ","
                   << io::format_g9(row.qd_score) << "," << row.occupied << ","
                   << io::format_g9(row.training_qd_score) << "\n";
        }

        const pipeline::Domain dom(cfg.domain, cfg.sim, cfg.reg_weight);
        const auto spec = dom.archive_spec();
        io::HeatmapOptions hopt;
        hopt.bins_i = spec.dims[0].bins;
        hopt.bins_j = spec.dims[1].bins;
        hopt.cap = dom.objective_cap();
        hopt.axis_note = std::string("domain: ") + pipeline::domain_name(cfg.domain);
        io::write_heatmap(io::read_archive_csv((out / "archive_final.csv").string()),
            (out / "heatmap.ppm").string(), hopt);

        json manifest;
        manifest["config"] = io::experiment_to_json(cfg);
        manifest["master_seed"] = cfg.seed;
        manifest["started"] = started;
        manifest["finished"] = io::timestamp_now();
        manifest["evaluations"] = res.evals;
        manifest["qd_score"] = res.final_archive->qd_score();
        manifest["occupied_cells"] = res.final_archive->occupied();
        json arts = {{"archive_final", "archive_final.csv"}, {"archive_training", "archive_training.csv"},
            {"dataset", "dataset.bin"}, {"metrics", "metrics.csv"}, {"heatmap", "heatmap.ppm"},
            {"heatmap_axes", "heatmap.ppm.txt"}};
        if (!checkpoints.empty())
            arts["model_checkpoints"] = checkpoints;
        manifest["artifacts"] = arts;
        std::ofstream mf((out / "manifest.json").string());
        mf << manifest.dump(2) << "\n";

        log << "run complete: " << res.evals << " evaluations, qd-score "
            << io::format_g9(res.final_archive->qd_score()) << ", " << res.final_archive->occupied()
            << " cells\n";
        return kExitOk;
    }
    catch (const std::exception& e) {
        log << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

struct HeatmapOptionsCli {
    std::string archive_csv;
    std::string image_path;
    int bins_i = 0;
    int bins_j = 0;
    double cap = 0.0;
};

inline int cmd_heatmap(const HeatmapOptionsCli& opt, std::ostream& log = std::cout)
{
    std::vector<io::ArchiveRow> rows;
    try {
        rows = io::read_archive_csv(opt.archive_csv);
    }
    catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        io::HeatmapOptions h;
        h.bins_i = opt.bins_i;
        h.bins_j = opt.bins_j;
        h.cap = opt.cap;
        io::write_heatmap(rows, opt.image_path, h);
        return kExitOk;
    }
    catch (const std::exception& e) {
        log << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

/// Mean and standard error of the final QD-score and occupied cells per
/// algorithm, across run directories of one domain.
inline int cmd_summarize(const std::vector<std::string>& run_dirs, std::ostream& out = std::cout)
{
    if (run_dirs.empty()) {
        out << "config error: no run directories given\n";
        return kExitConfig;
    }
    struct Entry {
        double qd;
        double occupied;
    };
    std::map<std::string, std::vector<Entry>> by_algo;
    std::string domain;
    try {
        for (const auto& dir : run_dirs) {
            std::ifstream mf((fs::path(dir) / "manifest.json").string());
            if (!mf)
                throw std::invalid_argument("missing manifest in " + dir);
            json m = json::parse(mf);
            const std::string d = m.at("config").at("domain").get<std::string>();
            if (domain.empty())
                domain = d;
            else if (domain != d) {
                out << "config error: inconsistent domains across runs (" << domain << " vs " << d << ")\n";
                return kExitConfig;
            }
            const auto rows = io::read_archive_csv((fs::path(dir) / "archive_final.csv").string());
            double qd = 0.0;
            for (const auto& r : rows)
                qd += r.objective;
            by_algo[m.at("config").at("algorithm").get<std::string>()].push_back(
                {qd, static_cast<double>(rows.size())});
        }
    }
    catch (const std::exception& e) {
        out << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    out << "domain: " << domain << "\n";
    out << "algorithm      runs   qd-score (mean +/- se)      occupied (mean +/- se)\n";
    for (const auto& [algo, entries] : by_algo) {
        const double n = static_cast<double>(entries.size());
        double mq = 0, mo = 0;
        for (const auto& e : entries) {
            mq += e.qd;
            mo += e.occupied;
        }
        mq /= n;
        mo /= n;
        double vq = 0, vo = 0;
        for (const auto& e : entries) {
            vq += (e.qd - mq) * (e.qd - mq);
            vo += (e.occupied - mo) * (e.occupied - mo);
        }
        const double seq = n > 1 ? std::sqrt(vq / (n - 1.0) / n) : 0.0;
        const double seo = n > 1 ? std::sqrt(vo / (n - 1.0) / n) : 0.0;
        char line[160];
        std::snprintf(line, sizeof(line), "%-14s %4d   %12.2f +/- %-10.2f %10.1f +/- %.1f\n",
            algo.c_str(), static_cast<int>(n), mq, seq, mo, seo);
        out << line;
    }
    return kExitOk;
}

struct ReplayOptions {
    std::string run_dir;
    int cell_i = -1;
    int cell_j = -1;
    std::string trace_path; // default <run_dir>/replay_<i>_<j>.jsonl
};

/// Re-simulates the final-archive elite of a cell from the stored dataset
/// (the elite is the first maximum-objective sample mapping to that cell)
/// and writes a per-tick trace.
inline int cmd_replay(const ReplayOptions& opt, std::ostream& log = std::cout)
{
    pipeline::ExperimentConfig cfg;
    surrogate::Dataset data;
    try {
        std::ifstream mf((fs::path(opt.run_dir) / "manifest.json").string());
        if (!mf)
            throw std::invalid_argument("missing manifest in " + opt.run_dir);
        json m = json::parse(mf);
        cfg = io::experiment_from_json(m.at("config"));
        data = surrogate::Dataset::load((fs::path(opt.run_dir) / "dataset.bin").string());
    }
    catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const pipeline::Domain dom(cfg.domain, cfg.sim, cfg.reg_weight);
        const auto spec = dom.archive_spec();

        const surrogate::TrainingSample* elite = nullptr;
        for (const auto& s : data.samples()) {
            const auto c = qd::cell_coords(spec, s.m);
            if (c[0] != opt.cell_i || c[1] != opt.cell_j)
                continue;
            if (!elite || s.f > elite->f)
                elite = &s;
        }
        if (!elite) {
            log << "config error: cell (" << opt.cell_i << "," << opt.cell_j << ") is empty\n";
            return kExitConfig;
        }

        const std::uint64_t sim_seed = core::hash_vector(cfg.seed, elite->theta);
        const auto outcome = dom.simulate(elite->theta, sim_seed);
        if (!outcome.ok)
            throw std::runtime_error("replay simulation aborted: " + outcome.error);
        const double f = dom.objective(outcome);

        std::string path = opt.trace_path;
        if (path.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "replay_%d_%d.jsonl", opt.cell_i, opt.cell_j);
            path = (fs::path(opt.run_dir) / name).string();
        }
        std::ofstream ts(path);
        json head;
        head["cell"] = {opt.cell_i, opt.cell_j};
        head["stored_f"] = elite->f;
        head["replayed_f"] = f;
        head["sim_seed"] = sim_seed;
        head["theta"] = std::vector<double>(elite->theta.data(), elite->theta.data() + elite->theta.size());
        ts << head.dump() << "\n";
        for (const auto& rec : outcome.trace) {
            json r;
            r["t"] = rec.t;
            r["human"] = {rec.human_pos.x(), rec.human_pos.y()};
            r["robot"] = {rec.robot_pos.x(), rec.robot_pos.y()};
            r["human_state"] = sim::agent_state_name(rec.human_state);
            r["robot_state"] = sim::agent_state_name(rec.robot_state);
            r["belief"] = std::vector<double>(rec.belief.data(), rec.belief.data() + rec.belief.size());
            r["goal_to_go"] = rec.goal_to_go;
            ts << r.dump() << "\n";
        }
        log << "replayed f = " << io::format_g9(f) << " (stored " << io::format_g9(elite->f)
            << "), trace " << path << "\n";
        if (std::abs(f - elite->f) > 1e-9) {
            log << "runtime error: replayed objective deviates from the stored value\n";
            return kExitRuntime;
        }
        return kExitOk;
    }
    catch (const std::exception& e) {
        log << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace sasgen::cli
