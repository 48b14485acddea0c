#include <catch2/catch_amalgamated.hpp>

#include <sasgen/cli/commands.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace sasgen;
using namespace sasgen::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("sasgen_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& body)
{
    const fs::path p = dir / "run.cfg";
    std::ofstream os(p);
    os << body;
    return p;
}

const std::string kTinyRandom = "domain = teleop\nalgorithm = random\nbudget = 50\nseed = 3\nrandom_batch = 25\n";

} // namespace

TEST_CASE("config parsing")
{
    SECTION("missing required key names the key")
    {
        auto kv = io::KvConfig::parse("algorithm = random\n");
        try {
            io::experiment_from_kv(kv);
            FAIL("expected missing-key error");
        }
        catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("domain") != std::string::npos);
        }
    }

    SECTION("unknown keys are rejected")
    {
        auto kv = io::KvConfig::parse("domain = teleop\nalgorithm = random\nsim.dtt = 0.1\n");
        CHECK_THROWS_AS(io::experiment_from_kv(std::move(kv)), std::invalid_argument);
    }

    SECTION("comments, blanks, and dotted keys parse")
    {
        auto kv = io::KvConfig::parse("# comment\n\ndomain = collab-I\nalgorithm = sas\nsim.dt = 0.1\n");
        auto cfg = io::experiment_from_kv(std::move(kv));
        CHECK(cfg.domain == pipeline::DomainKind::CollabI);
        CHECK(cfg.sim.dt == 0.1);
    }

    SECTION("the shipped reference file parses and matches the built-in defaults")
    {
        auto cfg = io::experiment_from_kv(io::KvConfig::parse_file("configs/reference.cfg"));
        pipeline::ExperimentConfig def;
        def.domain = pipeline::DomainKind::Teleop;
        def.algorithm = pipeline::Algorithm::Random;
        CHECK(io::experiment_to_json(cfg) == io::experiment_to_json(def));
    }
}

TEST_CASE("cmd_run writes all declared artifacts and exit codes behave")
{
    const auto dir = temp_dir("run");
    const auto out = dir / "out";

    SECTION("bad config exits 2 with the key name")
    {
        const auto cfg = write_config(dir, "algorithm = random\n");
        std::stringstream log;
        CHECK(cmd_run({cfg.string(), out.string(), {}}, log) == kExitConfig);
        CHECK(log.str().find("domain") != std::string::npos);
    }

    SECTION("valid tiny run exits 0 and produces the manifest artifacts")
    {
        const auto cfg = write_config(dir, kTinyRandom);
        std::stringstream log;
        REQUIRE(cmd_run({cfg.string(), out.string(), {}}, log) == kExitOk);
        io::json manifest = io::json::parse(slurp(out / "manifest.json"));
        for (const auto& [k, v] : manifest.at("artifacts").items()) {
            if (v.is_string())
                CHECK(fs::exists(out / v.get<std::string>()));
        }
        CHECK(manifest.at("evaluations").get<long>() == 50);
    }

    SECTION("same config and seed produce byte-identical archive CSVs")
    {
        const auto cfg = write_config(dir, kTinyRandom);
        const auto out1 = dir / "r1", out2 = dir / "r2";
        std::stringstream log;
        REQUIRE(cmd_run({cfg.string(), out1.string(), {}}, log) == kExitOk);
        REQUIRE(cmd_run({cfg.string(), out2.string(), {}}, log) == kExitOk);
        CHECK(slurp(out1 / "archive_final.csv") == slurp(out2 / "archive_final.csv"));
        CHECK(slurp(out1 / "archive_training.csv") == slurp(out2 / "archive_training.csv"));
    }

    fs::remove_all(dir);
}

TEST_CASE("archive csv round-trips through export, parse, export")
{
    const auto dir = temp_dir("csv");
    const auto cfg = write_config(dir, kTinyRandom);
    const auto out = dir / "out";
    std::stringstream log;
    REQUIRE(cmd_run({cfg.string(), out.string(), {}}, log) == kExitOk);

    const auto rows = io::read_archive_csv((out / "archive_final.csv").string());
    REQUIRE(!rows.empty());

    // Re-export through a fresh archive built from the parsed rows.
    qd::Archive rebuilt(qd::ArchiveSpec::teleop());
    for (const auto& r : rows) {
        qd::Elite e;
        e.theta = r.theta;
        e.f = r.objective;
        e.m = r.m;
        rebuilt.add_map_elites(e);
    }
    const auto path2 = (dir / "roundtrip.csv").string();
    io::write_archive_csv(rebuilt, path2);
    CHECK(slurp(out / "archive_final.csv") == slurp(path2));
    fs::remove_all(dir);
}

TEST_CASE("cmd_heatmap renders rasters and is byte-stable")
{
    const auto dir = temp_dir("heatmap");
    const auto cfg = write_config(dir, kTinyRandom);
    const auto out = dir / "out";
    std::stringstream log;
    REQUIRE(cmd_run({cfg.string(), out.string(), {}}, log) == kExitOk);

    SECTION("teleoperation archive renders a 25 x 100 cell raster")
    {
        // The run itself emits a heatmap at the archive dimensions.
        const std::string ppm = slurp(out / "heatmap.ppm");
        CHECK(ppm.rfind("P6\n400 100\n255\n", 0) == 0); // 100 cols * 4 px, 25 rows * 4 px

        HeatmapOptionsCli h;
        h.archive_csv = (out / "archive_final.csv").string();
        h.image_path = (dir / "again.ppm").string();
        h.bins_i = 25;
        h.bins_j = 100;
        h.cap = 10.0;
        REQUIRE(cmd_heatmap(h, log) == kExitOk);
        CHECK(slurp(out / "heatmap.ppm") == slurp(dir / "again.ppm"));
        CHECK(fs::exists(dir / "again.ppm.txt"));
    }

    SECTION("empty archive renders all-background")
    {
        const auto empty_csv = dir / "empty.csv";
        std::ofstream(empty_csv) << "cell_i,cell_j,measure_0,measure_1,objective\n";
        HeatmapOptionsCli h;
        h.archive_csv = empty_csv.string();
        h.image_path = (dir / "empty.ppm").string();
        h.bins_i = 5;
        h.bins_j = 5;
        REQUIRE(cmd_heatmap(h, log) == kExitOk);
        const std::string ppm = slurp(dir / "empty.ppm");
        const std::string body = ppm.substr(ppm.find("255\n") + 4);
        for (unsigned char c : body)
            CHECK(static_cast<int>(c) == 38);
    }

    SECTION("malformed csv exits 2")
    {
        const auto bad = dir / "bad.csv";
        std::ofstream(bad) << "not,a,real,header\n1,2,3,4\n";
        HeatmapOptionsCli h;
        h.archive_csv = bad.string();
        h.image_path = (dir / "bad.ppm").string();
        CHECK(cmd_heatmap(h, log) == kExitConfig);
    }

    fs::remove_all(dir);
}

TEST_CASE("cmd_summarize groups runs by algorithm")
{
    const auto dir = temp_dir("summ");
    const auto cfg = write_config(dir, kTinyRandom);
    const auto r1 = dir / "r1", r2 = dir / "r2";
    std::stringstream log;
    REQUIRE(cmd_run({cfg.string(), r1.string(), {}}, log) == kExitOk);
    REQUIRE(cmd_run({cfg.string(), r2.string(), std::uint64_t{9}}, log) == kExitOk);

    SECTION("table covers the runs")
    {
        std::stringstream out;
        REQUIRE(cmd_summarize({r1.string(), r2.string()}, out) == kExitOk);
        CHECK(out.str().find("random") != std::string::npos);
        CHECK(out.str().find("domain: teleop") != std::string::npos);
    }

    SECTION("single run has zero standard error")
    {
        std::stringstream out;
        REQUIRE(cmd_summarize({r1.string()}, out) == kExitOk);
        CHECK(out.str().find("+/- 0.00") != std::string::npos);
    }

    SECTION("inconsistent domains exit 2")
    {
        const auto collab_cfg = write_config(dir, "domain = collab-I\nalgorithm = random\nbudget = 10\nseed = 1\n");
        const auto r3 = dir / "r3";
        REQUIRE(cmd_run({collab_cfg.string(), r3.string(), {}}, log) == kExitOk);
        std::stringstream out;
        CHECK(cmd_summarize({r1.string(), r3.string()}, out) == kExitConfig);
    }

    fs::remove_all(dir);
}

TEST_CASE("cmd_replay reproduces the stored objective")
{
    const auto dir = temp_dir("replay");
    const auto cfg = write_config(dir, "domain = collab-I\nalgorithm = random\nbudget = 20\nseed = 5\nrandom_batch = 20\n");
    const auto out = dir / "out";
    std::stringstream log;
    REQUIRE(cmd_run({cfg.string(), out.string(), {}}, log) == kExitOk);

    const auto rows = io::read_archive_csv((out / "archive_final.csv").string());
    REQUIRE(!rows.empty());
    const auto& pick = rows.front();

    ReplayOptions rp;
    rp.run_dir = out.string();
    rp.cell_i = pick.cell_i;
    rp.cell_j = pick.cell_j;
    std::stringstream rlog;
    REQUIRE(cmd_replay(rp, rlog) == kExitOk);

    // First trace line carries stored and replayed objectives.
    char name[64];
    std::snprintf(name, sizeof(name), "replay_%d_%d.jsonl", pick.cell_i, pick.cell_j);
    std::ifstream ts(out / name);
    std::string first;
    REQUIRE(std::getline(ts, first));
    auto head = io::json::parse(first);
    const double stored = head.at("stored_f").get<double>();
    const double replayed = head.at("replayed_f").get<double>();
    CHECK(std::abs(stored - replayed) <= 1e-9);

    // Tick count tracks f / dt (within one tick).
    long ticks = 0;
    std::string line;
    while (std::getline(ts, line))
        ticks++;
    CHECK(std::abs(ticks - static_cast<long>(std::lround(replayed / 0.05))) <= 1);

    SECTION("empty cell exits 2")
    {
        ReplayOptions bad = rp;
        bad.cell_i = 26; // outside any populated cell after 20 evals
        bad.cell_j = 64;
        bool found = false;
        for (const auto& r : rows)
            found = found || (r.cell_i == bad.cell_i && r.cell_j == bad.cell_j);
        if (!found) {
            std::stringstream blog;
            CHECK(cmd_replay(bad, blog) == kExitConfig);
        }
    }

    SECTION("nonexistent run dir exits 2")
    {
        ReplayOptions bad = rp;
        bad.run_dir = (dir / "nope").string();
        std::stringstream blog;
        CHECK(cmd_replay(bad, blog) == kExitConfig);
    }

    fs::remove_all(dir);
}

TEST_CASE("the installed binary responds to basic invocations")
{
    const auto dir = temp_dir("bin");
    const auto cfg = write_config(dir, kTinyRandom);
    const std::string bin = SASGEN_CLI_PATH;

    auto shell = [](const std::string& cmd) { return std::system(cmd.c_str()) >> 8; };
    CHECK(shell(bin + " run --config " + cfg.string() + " --out " + (dir / "out").string()
              + " > /dev/null")
        == 0);
    CHECK(shell(bin + " run --config " + (dir / "missing.cfg").string() + " --out "
              + (dir / "out2").string() + " > /dev/null")
        == 2);
    CHECK(shell(bin + " summarize " + (dir / "out").string() + " > /dev/null") == 0);
    fs::remove_all(dir);
}
