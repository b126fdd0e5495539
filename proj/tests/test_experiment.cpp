#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rflnn/experiment.hpp"
#include "rflnn/serialization.hpp"

using namespace rflnn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

int run_cli(const std::string& args, const fs::path& out_file) {
    const std::string cmd = std::string(RFLNN_CLI) + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallFp = R"({
  "experiment": "fp-sinc",
  "seeds": [1, 2],
  "models": {
    "elm": {"nodes_per_step": 2, "steps": 4},
    "stacked_bls": {"feature_nodes": 2, "enhancement_nodes": 4, "blocks": 2}
  }
})";

const char* kSmallPoisson = R"({
  "experiment": "poisson-bench",
  "seeds": [1, 2],
  "poisson": {"problem": "1d", "n": 32, "tols": [1e-2, 1e-4], "repetitions": 1, "growth_steps": 2, "timing": false}
})";

} // namespace

TEST_CASE("schema errors name the field") {
    CHECK(starts_with(config_error(R"({"experiment": "fp-sinc", "models": {"bls": {"feature_nodes": -3}}})"),
                      "models.bls.feature_nodes: must be >= 1"));
    CHECK(starts_with(config_error(R"({"experiment": "nope"})"), "experiment: must be one of"));
    CHECK(starts_with(config_error(R"({})"), "experiment: is required"));
    CHECK(starts_with(config_error(R"({"experiment": "fp-sinc", "colour": 1})"), "colour: unknown key"));
    CHECK(starts_with(config_error(R"({"experiment": "fp-sinc", "seeds": [1, "a"]})"), "seeds[1]: expected integer"));
    CHECK(starts_with(config_error(R"({"experiment": "poisson-bench", "poisson": {"n": 1}})"), "poisson.n: must be >= 2"));
    CHECK(starts_with(config_error(R"({"experiment": "poisson-bench", "compare": {}})"), "compare: not used"));
    CHECK(starts_with(config_error(R"({"experiment": "fp-dataset"})"), "dataset: is required"));
    CHECK(starts_with(config_error(
                          R"({"experiment": "freq-guided-compare", "compare": {"guided_schedule": {"kind": "geometric", "base": 1}}})"),
                      "compare.guided_schedule.rate: is required"));
    CHECK(starts_with(config_error(R"({"experiment": "fp-dataset", "dataset": {"kind": "csv", "path": "/nope.csv"}})"),
                      "dataset.path: no such file"));
    CHECK(starts_with(config_error("{\"experiment\": "), "config: invalid JSON"));
    CHECK(starts_with(config_error(R"({"experiment": "fp-sinc", "models": {"bls": {"blocks": 2}}})"),
                      "models.bls.blocks: only applies to stacked_bls"));
}

TEST_CASE("config defaults and hash") {
    const auto c = parse_config(R"({"experiment": "freq-guided-compare"})");
    CHECK(c.kind == ExperimentKind::freq_guided_compare);
    CHECK(c.compare.runs == 30);
    CHECK(c.seeds.size() == 30);
    CHECK(c.bls.lambda == 0.0);
    CHECK(c.hash.size() == 16);
    CHECK(parse_config(R"({ "experiment" : "freq-guided-compare" })").hash == c.hash);
    CHECK(parse_config(R"({"experiment": "freq-guided-compare", "jobs": 2})").hash != c.hash);

    const auto p = parse_config(R"({"experiment": "poisson-bench", "poisson": {"problem": "2d"}})");
    CHECK(p.poisson.n == 64);
    CHECK(p.poisson.bench.rule == StopRule::residual);
    CHECK(p.poisson.bench.growth_steps == default_growth_steps(2));
    CHECK(p.poisson.bench.tols.size() == 6);

    const auto f = parse_config(R"({"experiment": "fp-sinc"})");
    CHECK(f.fp.plans.size() == 3);
    CHECK(f.seeds.size() == 20);

    // FNV-1a 64 test vectors.
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("output directory falls back to the environment") {
    ::setenv(kOutputDirEnv, "/tmp/rflnn_env_out", 1);
    CHECK(default_output_dir() == fs::path("/tmp/rflnn_env_out"));
    ::unsetenv(kOutputDirEnv);
    CHECK(default_output_dir() == fs::path("rflnn-output"));
}

TEST_CASE("fp-sinc run writes traces and a manifest") {
    TempDir dir("rflnn_exp_fp");
    const auto cfg = parse_config(kSmallFp);
    const auto r = run_experiment(cfg, {dir.path, std::nullopt});
    CHECK(fs::exists(dir.path / "traces/elm/seed_1.csv"));
    CHECK(fs::exists(dir.path / "traces/stacked_bls/seed_2.json"));
    CHECK_FALSE(fs::exists(dir.path / "traces/bls"));
    const std::string trace = read_text_file(dir.path / "traces/elm/seed_1.csv");
    CHECK(starts_with(trace, "step,peak_alpha,delta_d\n"));
    // Final models after the last growth step.
    CHECK(elm_from_json(read_text_file(dir.path / "models/elm/seed_1.json")).hidden.nodes() == 8);
    CHECK(stacked_bls_from_json(read_text_file(dir.path / "models/stacked_bls/seed_2.json")).block_count() == 2);

    const auto m = json::parse(read_text_file(dir.path / "run_manifest.json"));
    CHECK(m["status"] == "complete");
    CHECK(m["config_hash"] == cfg.hash);
    CHECK(m["seeds"] == json::array({1, 2}));
    CHECK(m["library_version"] == kLibraryVersion);
    CHECK(m["artifacts"].size() == r.artifacts.size() - 1);
    CHECK(r.summary.find("elm:") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
    TempDir a("rflnn_exp_rerun_a");
    TempDir b("rflnn_exp_rerun_b");
    for (const char* text : {kSmallFp, kSmallPoisson}) {
        const auto cfg = parse_config(text);
        const auto ra = run_experiment(cfg, {a.path, 1});
        const auto rb = run_experiment(cfg, {b.path, 2});
        REQUIRE(ra.artifacts == rb.artifacts);
        for (const auto& f : ra.artifacts)
            CHECK_MESSAGE(read_text_file(a.path / f) == read_text_file(b.path / f), f);
    }
}

TEST_CASE("poisson-bench writes a 6 x 2 table") {
    TempDir dir("rflnn_exp_poisson");
    const auto cfg = parse_config(
        R"({"experiment": "poisson-bench", "seeds": [1], "poisson": {"n": 64, "repetitions": 1}})");
    run_experiment(cfg, {dir.path, std::nullopt});
    std::istringstream csv(read_text_file(dir.path / "benchmark.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "problem,method,tol,median_seconds,iterations,residual,error_vs_truth");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 12);
    CHECK(fs::exists(dir.path / "benchmark_table.csv"));
    CHECK(fs::exists(dir.path / "solution_direct.csv"));
}

TEST_CASE("runtime failure leaves a partial manifest") {
    TempDir dir("rflnn_exp_partial");
    // An all-zero csv feature column makes the projection degenerate.
    const fs::path csv = dir.path / "flat.csv";
    std::ofstream(csv) << "x,label\n0,a\n0,b\n0,a\n0,b\n";
    const auto cfg = parse_config(R"({"experiment": "fp-dataset", "seeds": [1],
        "dataset": {"kind": "csv", "path": ")" + csv.string() + R"(", "split": 1}})");
    CHECK_THROWS(run_experiment(cfg, {dir.path / "out", std::nullopt}));
    const auto m = json::parse(read_text_file(dir.path / "out/run_manifest.json"));
    CHECK(m["status"] == "partial");
    CHECK(m.contains("error"));
}

TEST_CASE("command line exit codes") {
    TempDir dir("rflnn_exp_cli");
    const fs::path log = dir.path / "log.txt";
    const fs::path good = dir.path / "good.json";
    const fs::path bad = dir.path / "bad.json";
    std::ofstream(good) << kSmallPoisson;
    std::ofstream(bad) << R"({"experiment": "fp-sinc", "models": {"elm": {"nodes_per_step": -1}}})";

    CHECK(run_cli("validate " + good.string(), log) == 0);
    CHECK(run_cli("validate " + bad.string(), log) == 2);
    CHECK(read_text_file(log).find("models.elm.nodes_per_step") != std::string::npos);
    CHECK(run_cli("run " + bad.string(), log) == 2);
    CHECK(run_cli("run " + (dir.path / "missing.json").string(), log) == 2);
    CHECK(run_cli("frobnicate", log) == 2);

    const fs::path out = dir.path / "env_out";
    CHECK(run_cli("run " + good.string() + " -o " + out.string(), log) == 0);
    CHECK(fs::exists(out / "benchmark.csv"));
    const std::string env_run = "env RFLNN_OUTPUT_DIR=" + (dir.path / "from_env").string() + " " + RFLNN_CLI +
                                " run " + good.string() + " > " + log.string() + " 2>&1";
    CHECK(std::system(env_run.c_str()) == 0);
    CHECK(fs::exists(dir.path / "from_env/run_manifest.json"));

    const fs::path flat = dir.path / "flat.csv";
    std::ofstream(flat) << "x,label\n0,a\n0,b\n";
    const fs::path rt = dir.path / "rt.json";
    std::ofstream(rt) << R"({"experiment": "fp-dataset", "seeds": [1], "output_dir": "rt_out",
        "dataset": {"kind": "csv", "path": "flat.csv", "split": 1}})";
    CHECK(run_cli("run " + rt.string(), log) == 1);

    CHECK(run_cli("datasets fetch-manifest mnist", log) == 0);
    CHECK(json::parse(read_text_file(log))["files"].size() == 4);
    CHECK(run_cli("datasets fetch-manifest cifar", log) == 2);
}
