#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ranklab/cli_app.hpp"

using namespace ranklab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(RANKLAB_TEST_TMP) / "cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int invoke(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "ranklab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

const char* kSmallConfig = R"({
  "model": {"type": "atlas", "n": 3, "g": 0.1, "sigma": 0.2},
  "grid": {"T": 1.0, "M": 256},
  "monte_carlo": {"paths": 8, "master_seed": 42},
  "experiments": ["verify_prop1"]
})";

}  // namespace

TEST(ParseConfig, DefaultsAndEcho) {
    const RunConfig cfg = parse_config(kSmallConfig);
    EXPECT_EQ(cfg.model.n(), 3u);
    EXPECT_EQ(cfg.steps, 256u);
    EXPECT_EQ(cfg.master_seed, 42u);
    EXPECT_EQ(cfg.generating_function, "entropy");
    EXPECT_EQ(cfg.resolved_levels(), (std::vector<std::size_t>{16, 64, 256}));
    const RunConfig again = parse_config(cfg.echo().dump());
    EXPECT_EQ(again.echo(), cfg.echo());
}

TEST(ParseConfig, KeyOrderDoesNotMatter) {
    const char* reordered = R"({
      "experiments": ["verify_prop1"],
      "monte_carlo": {"master_seed": 42, "paths": 8},
      "grid": {"M": 256, "T": 1.0},
      "model": {"sigma": 0.2, "g": 0.1, "n": 3, "type": "atlas"}
    })";
    EXPECT_EQ(parse_config(reordered).echo(), parse_config(kSmallConfig).echo());
}

TEST(ParseConfig, RankBasedModel) {
    const RunConfig cfg = parse_config(R"({
      "model": {"type": "rank_based", "drifts": [-0.1, 0.0, 0.2], "volatilities": [0.2, 0.3, 0.4]},
      "grid": {"T": 2.0, "M": 64},
      "monte_carlo": {"paths": 1},
      "experiments": ["simulate"]
    })");
    EXPECT_EQ(cfg.model.n(), 3u);
    EXPECT_FALSE(cfg.model.as_rank_based().is_atlas());
    EXPECT_EQ(cfg.model.as_rank_based().initial_log.size(), 0);
}

TEST(ParseConfig, DiagnosticsNameLineAndKey) {
    const std::string text =
        "{\n"
        "  \"model\": {\"type\": \"atlas\", \"n\": 3, \"g\": 0.1, \"sigma\": 0.2},\n"
        "  \"grid\": {\"T\": 1.0, \"M\": 0},\n"
        "  \"monte_carlo\": {\"paths\": 4, \"colour\": 1},\n"
        "  \"experiments\": [\"verify_lemma9\"]\n"
        "}\n";
    try {
        parse_config(text);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const auto& d = e.diagnostics();
        ASSERT_GE(d.size(), 3u);
        auto has = [&](const std::string& needle) {
            return std::any_of(d.begin(), d.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
        };
        EXPECT_TRUE(has("line 3: grid"));
        EXPECT_TRUE(has("line 4: monte_carlo.colour: unknown key"));
        EXPECT_TRUE(has("line 5: experiments: unknown experiment 'verify_lemma9'"));
    }
}

TEST(ParseConfig, MalformedJsonAndTypes) {
    EXPECT_THROW(parse_config("{\n  \"model\": \n"), ConfigError);
    EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
    const char* bad_type = R"({
      "model": {"type": "atlas", "n": "three", "g": 0.1, "sigma": 0.2},
      "grid": {"T": 1.0, "M": 16},
      "monte_carlo": {"paths": 1},
      "experiments": ["simulate"]
    })";
    EXPECT_THROW(parse_config(bad_type), ConfigError);
    const char* bad_levels = R"({
      "model": {"type": "atlas", "n": 2, "g": 0.1, "sigma": 0.2},
      "grid": {"T": 1.0, "M": 100},
      "monte_carlo": {"paths": 1},
      "experiments": ["convergence"]
    })";
    EXPECT_THROW(parse_config(bad_levels), ConfigError);
}

TEST(Csv, HeaderOnlyAndRoundTrip) {
    const auto dir = scratch("csv");
    CsvTable empty{{"a", "b"}, {}};
    emit_csv(empty, (dir / "empty.csv").string());
    EXPECT_EQ(slurp(dir / "empty.csv"), "a,b\n");

    CsvTable table{{"id", "x", "name"}, {{std::int64_t{3}, 0.1, std::string("lemma2")},
                                         {std::int64_t{-1}, std::numeric_limits<double>::quiet_NaN(), std::string("p")}}};
    emit_csv(table, (dir / "t.csv").string());
    const auto rows = read_csv((dir / "t.csv").string());
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][0], "3");
    EXPECT_EQ(std::stod(rows[1][1]), 0.1);
    EXPECT_EQ(rows[2][1], "nan");
    EXPECT_EQ(format_double(1.0 / 3.0), "0.33333333333333331");
    EXPECT_THROW(read_csv((dir / "missing.csv").string()), IoError);
}

TEST(Run, Prop1WritesResidualFiles) {
    const auto dir = scratch("prop1");
    RunOptions opts;
    opts.output_dir = dir.string();
    std::ostringstream log;
    const auto files = run(parse_config(kSmallConfig), opts, log);
    ASSERT_EQ(files.size(), 2u);
    const auto rows = read_csv((dir / "prop1_residuals.csv").string());
    ASSERT_EQ(rows.size(), 1u + 8u * 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"path_id", "claim", "sup_residual", "endpoint_residual"}));
    EXPECT_EQ(rows[1][1], "prop1_rank1");
    const auto summary = nlohmann::json::parse(slurp(dir / "prop1_summary.json"));
    EXPECT_EQ(summary["experiment"], "verify_prop1");
    EXPECT_EQ(summary["results"].size(), 3u);
}

TEST(Run, Lemma2SummaryKeys) {
    const auto dir = scratch("lemma2");
    auto cfg = parse_config(kSmallConfig);
    cfg.experiments = {"verify_lemma2"};
    RunOptions opts;
    opts.output_dir = dir.string();
    std::ostringstream log;
    run(cfg, opts, log);
    const auto summary = nlohmann::json::parse(slurp(dir / "lemma2_summary.json"));
    for (const char* key : {"experiment", "config", "claim", "levels", "step", "mean_residual", "max_residual",
                            "stderr_residual", "mean_endpoint_residual", "fitted_rate"}) {
        EXPECT_TRUE(summary.contains(key)) << key;
    }
    EXPECT_TRUE(summary["fitted_rate"].is_null());
    EXPECT_EQ(summary["levels"], nlohmann::json::array({256}));
    EXPECT_EQ(parse_config(summary["config"].dump()).echo(), cfg.echo());
}

TEST(Run, DeterministicAcrossRerunsAndThreads) {
    auto cfg = parse_config(kSmallConfig);
    cfg.experiments = {"simulate", "verify_lemma4", "verify_prop3", "coincidence"};
    auto produce = [&](const std::string& name, int threads) {
        const auto dir = scratch(name);
        RunOptions opts{dir.string(), threads};
        std::ostringstream log;
        std::map<std::string, std::string> contents;
        for (const auto& f : run(cfg, opts, log)) contents[fs::path(f).filename().string()] = slurp(f);
        return contents;
    };
    const auto a = produce("det_a", 1);
    const auto b = produce("det_b", 1);
    const auto c = produce("det_c", 4);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a.size(), 9u);
}

TEST(Cli, Version) {
    std::string out;
    EXPECT_EQ(invoke({"version"}, &out), kExitOk);
    EXPECT_EQ(out, std::string("ranklab ") + version_string() + "\n");
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(invoke({}), kExitUsage);
    EXPECT_EQ(invoke({"frobnicate"}), kExitUsage);
    EXPECT_EQ(invoke({"run"}), kExitUsage);
}

TEST(Cli, InvalidConfigWritesNothing) {
    const auto dir = scratch("bad_grid");
    std::string text = kSmallConfig;
    text.replace(text.find("\"M\": 256"), 8, "\"M\": 0");
    const auto path = write_file(dir / "cfg.json", text);
    std::string err;
    EXPECT_EQ(invoke({"run", path, "--out", (dir / "out").string()}, nullptr, &err), kExitConfig);
    EXPECT_NE(err.find("grid"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out"));
    EXPECT_EQ(invoke({"validate", path}), kExitConfig);
}

TEST(Cli, IoErrors) {
    const auto dir = scratch("io");
    EXPECT_EQ(invoke({"run", (dir / "nope.json").string()}), kExitIo);
    const auto cfg = write_file(dir / "cfg.json", kSmallConfig);
    write_file(dir / "blocker", "not a directory");
    std::string err;
    EXPECT_EQ(invoke({"run", cfg, "--out", (dir / "blocker" / "sub").string()}, nullptr, &err), kExitIo);
    EXPECT_NE(err.find("i/o error"), std::string::npos);
}

TEST(Cli, NumericFailureReportsExperiment) {
    const auto dir = scratch("numeric");
    const auto cfg = write_file(dir / "cfg.json", R"({
      "model": {"type": "atlas", "n": 3, "g": 0.1, "sigma": 0.2, "initial_log": [0, -80, 0]},
      "grid": {"T": 1.0, "M": 16},
      "monte_carlo": {"paths": 2},
      "experiments": ["verify_prop3"]
    })");
    std::string err;
    EXPECT_EQ(invoke({"run", cfg, "--out", (dir / "out").string()}, nullptr, &err), kExitNumeric);
    EXPECT_NE(err.find("experiment verify_prop3"), std::string::npos);
    EXPECT_NE(err.find("path 0"), std::string::npos);
}

TEST(Cli, RunAndValidateSucceed) {
    const auto dir = scratch("ok");
    const auto cfg = write_file(dir / "cfg.json", kSmallConfig);
    std::string out;
    EXPECT_EQ(invoke({"validate", cfg}, &out), kExitOk);
    EXPECT_EQ(invoke({"run", cfg, "--out", (dir / "out").string(), "--threads", "2"}, &out), kExitOk);
    EXPECT_TRUE(fs::exists(dir / "out" / "prop1_summary.json"));
    EXPECT_EQ(invoke({"run", cfg, "--threads", "0"}), kExitUsage);
}
