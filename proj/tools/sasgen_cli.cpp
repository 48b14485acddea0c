#include <CLI11.hpp>

#include <sasgen/cli/commands.hpp>

int main(int argc, char** argv)
{
    CLI::App app{"Surrogate-assisted quality-diversity scenario generation for planar "
                 "human-robot interaction domains"};
    app.require_subcommand(1);

    sasgen::cli::RunOptions run_opt;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    auto* run = app.add_subcommand("run", "Execute an experiment from a config file");
    run->add_option("--config", run_opt.config_path, "Key-value config file")->required();
    run->add_option("--out", run_opt.out_dir, "Output directory for run artifacts")->required();
    run->add_option("--seed", seed_override, "Override the master seed")->each([&](const std::string&) {
        has_seed = true;
    });

    sasgen::cli::HeatmapOptionsCli hm_opt;
    auto* heatmap = app.add_subcommand("heatmap", "Render an archive CSV as a PPM heatmap");
    heatmap->add_option("--archive", hm_opt.archive_csv, "Archive CSV")->required();
    heatmap->add_option("--out", hm_opt.image_path, "Output image path (.ppm)")->required();
    heatmap->add_option("--bins-i", hm_opt.bins_i, "Cells along the first measure (0: infer)");
    heatmap->add_option("--bins-j", hm_opt.bins_j, "Cells along the second measure (0: infer)");
    heatmap->add_option("--cap", hm_opt.cap, "Objective color-scale maximum (0: file max)");

    std::vector<std::string> run_dirs;
    auto* summarize = app.add_subcommand("summarize", "Tabulate QD-scores across run directories");
    summarize->add_option("dirs", run_dirs, "Run directories")->required();

    sasgen::cli::ReplayOptions rp_opt;
    std::string cell_arg;
    auto* replay = app.add_subcommand("replay", "Re-simulate an archive elite and dump its trace");
    replay->add_option("--run", rp_opt.run_dir, "Run directory")->required();
    replay->add_option("--cell", cell_arg, "Cell index as i,j")->required();
    replay->add_option("--trace", rp_opt.trace_path, "Trace output path");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sasgen::cli::kExitConfig;
    }

    if (run->parsed()) {
        if (has_seed)
            run_opt.seed_override = seed_override;
        return sasgen::cli::cmd_run(run_opt);
    }
    if (heatmap->parsed())
        return sasgen::cli::cmd_heatmap(hm_opt);
    if (summarize->parsed())
        return sasgen::cli::cmd_summarize(run_dirs);
    if (replay->parsed()) {
        const auto comma = cell_arg.find(',');
        if (comma == std::string::npos) {
            std::cout << "config error: --cell expects i,j\n";
            return sasgen::cli::kExitConfig;
        }
        try {
            rp_opt.cell_i = std::stoi(cell_arg.substr(0, comma));
            rp_opt.cell_j = std::stoi(cell_arg.substr(comma + 1));
        }
        catch (...) {
            std::cout << "config error: --cell expects integer i,j\n";
            return sasgen::cli::kExitConfig;
        }
        return sasgen::cli::cmd_replay(rp_opt);
    }
    return sasgen::cli::kExitConfig;
}
