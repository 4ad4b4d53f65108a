#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

// CLI_BIN is the built binary's path, injected by the build.

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("roadcell-cli-" + std::to_string(counter.fetch_add(1)) + "-" +
                std::to_string(static_cast<unsigned>(::getpid())));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const std::string p = (path / name).string();
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args, const TempDir& dir) {
    const fs::path out_f = dir.path / "cmd_stdout.txt";
    const fs::path err_f = dir.path / "cmd_stderr.txt";
    const std::string cmd = std::string(CLI_BIN) + " " + args + " > " +
                            out_f.string() + " 2> " + err_f.string();
    const int raw = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_f);
    r.err = slurp(err_f);
    return r;
}

long line_count(const fs::path& path) {
    const std::string text = slurp(path);
    return std::count(text.begin(), text.end(), '\n');
}

constexpr const char* kCorridorCsv =
    "bs_id,detector_id,range_miles\n"
    "BS0,det0,2.0\n"
    "BS1,det1,2.5\n";

// Small everywhere: 3 weeks of data, 1:1:1 split, tiny model, short training.
std::string small_config() {
    return "{\n"
           "  \"name\": \"cli-test\",\n"
           "  \"corridor\": \"corridor.csv\",\n"
           "  \"roads\": {\"synth\": {\"weeks\": 3, \"seed\": 5}},\n"
           "  \"feature_sets\": [\"C\", \"FSC\"],\n"
           "  \"seeds\": [1, 2],\n"
           "  \"history\": 3,\n"
           "  \"split_ratios\": [1, 1, 1],\n"
           "  \"train_config\": {\"hidden_size\": 2, \"max_epochs\": 2, \"patience\": 2}\n"
           "}\n";
}

}  // namespace

TEST_CASE("bad invocations exit 1, help exits 0") {
    TempDir dir;
    CHECK(run_cli("", dir).code == 1);
    CHECK(run_cli("--help", dir).code == 0);
    CHECK(run_cli("synth-road --weeks 0 --out " + (dir.path / "x").string(), dir).code ==
          1);
    const CmdResult unknown = run_cli("frobnicate", dir);
    CHECK(unknown.code == 1);
    CHECK(!unknown.err.empty());
}

TEST_CASE("synth-road writes one deterministic file per site") {
    TempDir dir;
    const std::string a = (dir.path / "a").string();
    const std::string b = (dir.path / "b").string();
    const CmdResult first =
        run_cli("synth-road --weeks 2 --sites 3 --seed 7 --out " + a, dir);
    CHECK(first.code == 0);
    CHECK(first.out.find("det2.csv") != std::string::npos);
    for (const char* name : {"det0.csv", "det1.csv", "det2.csv"})
        CHECK(line_count(fs::path(a) / name) == 1 + 2 * 5 * 288);

    CHECK(run_cli("synth-road --weeks 2 --sites 3 --seed 7 --out " + b, dir).code == 0);
    for (const char* name : {"det0.csv", "det1.csv", "det2.csv"})
        CHECK(slurp(fs::path(a) / name) == slurp(fs::path(b) / name));
}

TEST_CASE("generate fails loudly when a detector file is missing") {
    TempDir dir;
    dir.file("corridor.csv", kCorridorCsv);
    fs::create_directories(dir.path / "roads");
    const CmdResult r = run_cli("generate --corridor " +
                                    (dir.path / "corridor.csv").string() + " --data " +
                                    (dir.path / "roads").string() + " --out " +
                                    (dir.path / "gen").string(),
                                dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("det0") != std::string::npos);
}

TEST_CASE("generate on zero-flow roads yields all-zero series") {
    TempDir dir;
    dir.file("corridor.csv", kCorridorCsv);
    dir.file("zero.json",
             "{\"base_flow\": 0, \"am_peak_flow\": 0, \"pm_peak_flow\": 0,"
             " \"day_scale_min\": 1, \"day_scale_max\": 1}");
    const CmdResult r = run_cli(
        "generate --corridor " + (dir.path / "corridor.csv").string() +
            " --synth-weeks 1 --profile " + (dir.path / "zero.json").string() +
            " --out " + (dir.path / "gen").string(),
        dir);
    CHECK(r.code == 0);
    std::istringstream in(slurp(dir.path / "gen" / "BS1.csv"));
    std::string line;
    std::getline(in, line);
    long rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.substr(line.find(',')) == ",0,0,0");
        ++rows;
    }
    CHECK(rows == 5 * 288);
    CHECK(fs::exists(dir.path / "gen" / "manifest.json"));
}

TEST_CASE("run is reproducible and parallelism-invariant") {
    TempDir dir;
    dir.file("corridor.csv", kCorridorCsv);
    dir.file("exp.json", small_config());
    const std::string base = "run --config " + (dir.path / "exp.json").string();

    const CmdResult first = run_cli(base + " --jobs 1 --out " + (dir.path / "r1").string(), dir);
    CHECK(first.code == 0);
    CHECK(first.out.find("Prediction error by feature set") != std::string::npos);
    CHECK(run_cli(base + " --jobs 1 --out " + (dir.path / "r2").string(), dir).code == 0);
    CHECK(run_cli(base + " --jobs 2 --out " + (dir.path / "r3").string(), dir).code == 0);

    const std::string report = slurp(dir.path / "r1" / "report.json");
    CHECK(!report.empty());
    CHECK(report == slurp(dir.path / "r2" / "report.json"));
    CHECK(report == slurp(dir.path / "r3" / "report.json"));
    CHECK(fs::exists(dir.path / "r1" / "report.txt"));
    CHECK(fs::exists(dir.path / "r1" / "plot_improvement_C_to_FSC.csv"));

    const auto manifest = nlohmann::json::parse(slurp(dir.path / "r1" / "manifest.json"));
    CHECK(manifest["effective"]["seeds"] == nlohmann::json({1, 2}));
    CHECK(manifest["jobs"] == 1);
}

TEST_CASE("run with noise writes a second report pair") {
    TempDir dir;
    dir.file("corridor.csv", kCorridorCsv);
    dir.file("exp.json", small_config());
    const CmdResult r = run_cli("run --config " + (dir.path / "exp.json").string() +
                                    " --seeds 1 --noise 0.05 --out " +
                                    (dir.path / "out").string(),
                                dir);
    CHECK(r.code == 0);
    const auto noisy = nlohmann::json::parse(slurp(dir.path / "out" / "report_noise.json"));
    CHECK(noisy["noise_sigma"] == 0.05);
    const auto clean = nlohmann::json::parse(slurp(dir.path / "out" / "report.json"));
    CHECK(clean["noise_sigma"] == 0.0);
    CHECK(fs::exists(dir.path / "out" / "noise_plot_improvement_C_to_FSC.csv"));
}

TEST_CASE("diverging training exits 3 and names the cell") {
    TempDir dir;
    dir.file("corridor.csv", kCorridorCsv);
    dir.file("exp.json",
             "{\"corridor\": \"corridor.csv\","
             " \"roads\": {\"synth\": {\"weeks\": 3, \"seed\": 5}},"
             " \"feature_sets\": [\"C\"], \"seeds\": [1], \"history\": 3,"
             " \"split_ratios\": [1, 1, 1],"
             " \"train_config\": {\"hidden_size\": 2, \"max_epochs\": 2,"
             "  \"patience\": 2, \"learning_rate\": 1e300}}");
    const CmdResult r = run_cli("run --config " + (dir.path / "exp.json").string() +
                                    " --out " + (dir.path / "out").string(),
                                dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("diverged") != std::string::npos);
    CHECK(r.err.find("site BS0") != std::string::npos);
}

TEST_CASE("report merges disjoint runs and rejects mismatched history") {
    TempDir dir;
    dir.file("corridor.csv", kCorridorCsv);
    dir.file("other.csv",
             "bs_id,detector_id,range_miles\nBSX,detx,2.0\nBSY,dety,2.5\n");
    dir.file("a.json", small_config());
    std::string b = small_config();
    const std::string needle = "\"corridor\": \"corridor.csv\"";
    b.replace(b.find(needle), needle.size(), "\"corridor\": \"other.csv\"");
    dir.file("b.json", b);

    REQUIRE(run_cli("run --config " + (dir.path / "a.json").string() + " --seeds 1" +
                        " --feature-sets C --out " + (dir.path / "ra").string(),
                    dir).code == 0);
    REQUIRE(run_cli("run --config " + (dir.path / "b.json").string() + " --seeds 1" +
                        " --feature-sets C --out " + (dir.path / "rb").string(),
                    dir).code == 0);

    const CmdResult merged = run_cli("report " + (dir.path / "ra").string() + " " +
                                         (dir.path / "rb").string() + " --out " +
                                         (dir.path / "merged").string(),
                                     dir);
    CHECK(merged.code == 0);
    CHECK(merged.out.find("BS0") != std::string::npos);
    CHECK(merged.out.find("BSX") != std::string::npos);
    const auto mj = nlohmann::json::parse(slurp(dir.path / "merged" / "report.json"));
    CHECK(mj["sites"].size() == 4);

    // Same corridor again under a different history: merge must refuse.
    std::string c = b;
    const std::string h = "\"history\": 3";
    c.replace(c.find(h), h.size(), "\"history\": 4");
    dir.file("c.json", c);
    REQUIRE(run_cli("run --config " + (dir.path / "c.json").string() + " --seeds 1" +
                        " --feature-sets C --out " + (dir.path / "rc").string(),
                    dir).code == 0);
    const CmdResult clash = run_cli(
        "report " + (dir.path / "ra").string() + " " + (dir.path / "rc").string(), dir);
    CHECK(clash.code == 2);
    CHECK(clash.err.find("history") != std::string::npos);

    CHECK(run_cli("report " + (dir.path / "nosuch").string(), dir).code == 2);
}
