#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cheaptalk/cli.hpp"

namespace cheaptalk::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out, err;
};

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "cheaptalk_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const json& config) {
  const auto path = scratch_dir() / name;
  std::ofstream(path) << config.dump(2);
  return path.string();
}

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "cheaptalk");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  CliRun r;
  r.code = main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

json record(const CliRun& r) { return json::parse(r.out); }

const json kGaussian2 = {{"source", {{"family", "iid-gaussian"}, {"dimension", 2}}}, {"bias", {1, 1}}};

TEST(Config, DefaultsFilledIn) {
  const json c = normalize_config(kGaussian2, "verify");
  EXPECT_EQ(c["solver"]["tolerance"], 1e-8);
  EXPECT_EQ(c["solver"]["samples"], 1'000'000);
  EXPECT_EQ(c["solver"]["seed"], 42);
  EXPECT_EQ(c["solver"]["grid_levels"], 1024);
  EXPECT_EQ(c["source"]["params"]["variance"], 1.0);
  EXPECT_EQ(c["policy"]["kind"], "reveal-plus-quantize");
}

TEST(Config, RejectsMalformedInput) {
  json c = kGaussian2;
  c["solver"] = {{"K", 2}, {"colour", "red"}};
  EXPECT_THROW(normalize_config(c, "solve"), ConfigError);
  c = kGaussian2;
  c["bias"] = {1, 1, 1};
  EXPECT_THROW(normalize_config(c, "solve"), ConfigError);
  c = kGaussian2;
  c["source"]["family"] = "cauchy";
  EXPECT_THROW(normalize_config(c, "solve"), ConfigError);
  c = kGaussian2;
  c["solver"] = {{"damping", 0}};
  EXPECT_THROW(normalize_config(c, "solve"), ConfigError);
  c = kGaussian2;
  c["source"]["params"] = {{"variance", -1}};
  EXPECT_THROW(normalize_config(c, "solve"), ConfigError);
  EXPECT_THROW(normalize_config(json::object(), "solve"), ConfigError);
  EXPECT_THROW(normalize_config(kGaussian2, "plot"), ConfigError);
  EXPECT_NO_THROW(normalize_config(json{{"rd", {{"distortion", 0.5}}}}, "rd"));
}

TEST(Config, DottedOverrides) {
  json c = kGaussian2;
  set_dotted(c, "solver.seed", 7);
  set_dotted(c, "source.params.variance", 2.5);
  EXPECT_EQ(c["solver"]["seed"], 7);
  EXPECT_EQ(c["source"]["params"]["variance"], 2.5);
  EXPECT_THROW(set_dotted(c, "bias.x", 1), ConfigError);
  EXPECT_THROW(set_dotted(c, "solver..seed", 1), ConfigError);
  EXPECT_EQ(parse_override_value("7"), json(7));
  EXPECT_EQ(parse_override_value("[1,2]"), json({1, 2}));
  EXPECT_EQ(parse_override_value("quadrature"), json("quadrature"));
}

TEST(Config, HashIsCanonical) {
  const json a = json::parse(R"({"b": 1, "a": [1, 2]})");
  const json b = json::parse(R"({"a": [1, 2], "b": 1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(json::parse(R"({"a": [2, 1], "b": 1})")));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Cli, ClassifyAntisymmetricUniform) {
  const auto path = write_config("classify.json", {{"source", {{"family", "iid-uniform"}, {"dimension", 2}}},
                                                   {"bias", {1, -1}},
                                                   {"solver", {{"samples", 100000}}}});
  const CliRun r = run({"classify", "--config", path});
  EXPECT_EQ(r.code, 0);
  const json rec = record(r);
  EXPECT_EQ(rec["result"]["exists"], "exists");
  EXPECT_EQ(rec["result"]["theorem_case"], "antisymmetric-bias");
  EXPECT_EQ(rec["command"], "classify");
}

TEST(Cli, ClassifyNotExistsExitsOne) {
  const auto path = write_config("classify_exp.json", {{"source", {{"family", "iid-exponential"}, {"dimension", 2}}},
                                                       {"bias", {1, 2}},
                                                       {"solver", {{"samples", 100000}}}});
  const CliRun r = run({"classify", "--config", path});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(record(r)["result"]["exists"], "not-exists");
}

TEST(Cli, PlantedViolationExitsOne) {
  json c = {{"source", {{"family", "iid-gaussian"}, {"dimension", 2}}},
            {"bias", {1, 0}},
            {"solver", {{"samples", 20000}}},
            {"policy", {{"kind", "quantizer"}, {"actions", {{-0.5, 0}, {0.5, 0}}}}}};
  const CliRun r = run({"verify", "--config", write_config("planted.json", c)});
  EXPECT_EQ(r.code, 1);
  const json rec = record(r);
  EXPECT_LT(rec["result"]["certificate"]["min_pairwise_geo_slack"].get<double>(), 0.0);
  EXPECT_FALSE(rec["result"]["certificate"]["pass"].get<bool>());
}

TEST(Cli, MalformedSourceWritesNothing) {
  const auto out = scratch_dir() / "malformed.jsonl";
  fs::remove(out);
  json c = {{"source", {{"family", "iid-gaussian"}}}, {"bias", {1}}};
  const CliRun r = run({"solve", "--config", write_config("malformed.json", c), "--out", out.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(r.err.empty());

  EXPECT_EQ(run({"solve", "--config", "/nonexistent/config.json"}).code, 2);
  EXPECT_EQ(run({"solve"}).code, 2);
  EXPECT_EQ(run({"frobnicate", "--config", "x"}).code, 2);
  const auto path = write_config("unknown_override.json", kGaussian2);
  EXPECT_EQ(run({"solve", "--config", path, "--solver.colour=red"}).code, 2);
}

TEST(Cli, NumericalFailureExitsThree) {
  json c = {{"source", {{"family", "iid-uniform"}, {"dimension", 1}}},
            {"bias", {0.05}},
            {"solver", {{"K", 4}, {"algorithm", "scalar-shooting"}}}};
  CliRun r = run({"solve", "--config", write_config("infeasible.json", c)});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(record(r)["result"]["status"], "infeasible");
  EXPECT_EQ(record(r)["result"]["max_feasible_bins"], 3);

  c["solver"] = {{"K", 4}, {"samples", 20000}};
  r = run({"solve", "--config", write_config("bindeath.json", c)});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(record(r)["result"]["status"], "bin-death");
}

TEST(Cli, SolveWritesCsv) {
  json c = {{"source", {{"family", "iid-uniform"}, {"dimension", 1}}}, {"bias", {0.05}}, {"solver", {{"K", 3}}}};
  const auto csv = scratch_dir() / "actions.csv";
  const CliRun r = run({"solve", "--config", write_config("solve.json", c), "--csv", csv.string()});
  EXPECT_EQ(r.code, 0);
  std::ifstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "index,u1");
  EXPECT_EQ(first.substr(0, 2), "0,");
  EXPECT_NEAR(std::stod(first.substr(2)), 0.8 / 3.0, 1e-6);
}

TEST(Cli, SeedPrecedence) {
  const auto path = write_config("seed.json", {{"source", {{"family", "iid-gaussian"}, {"dimension", 2}}},
                                               {"bias", {1, 0}},
                                               {"solver", {{"samples", 20000}, {"seed", 1}}},
                                               {"policy", {{"kind", "non-informative"}}}});
  const auto hash_of = [](const CliRun& r) { return record(r)["config_hash"].get<std::string>(); };
  const CliRun file = run({"verify", "--config", path});
  const CliRun dotted = run({"verify", "--config", path, "--solver.seed=5"});
  const CliRun flag = run({"verify", "--config", path, "--seed", "5"});
  ::setenv("CHEAPTALK_SEED", "5", 1);
  const CliRun env = run({"verify", "--config", path});
  const CliRun env_and_dotted = run({"verify", "--config", path, "--solver.seed", "1"});
  ::unsetenv("CHEAPTALK_SEED");
  EXPECT_NE(hash_of(file), hash_of(dotted));
  EXPECT_EQ(hash_of(dotted), hash_of(flag));
  EXPECT_EQ(hash_of(dotted), hash_of(env));
  EXPECT_EQ(hash_of(file), hash_of(env_and_dotted));
  EXPECT_EQ(record(env)["result"], record(flag)["result"]);
  EXPECT_NE(record(file)["result"], record(flag)["result"]);
}

TEST(Cli, RdTransformAndSweep) {
  const auto rd = write_config("rd.json", {{"rd", {{"variance", 1}, {"distortion", 0.25}, {"bias", 1},
                                                   {"dimensions", {4}}}},
                                           {"solver", {{"samples", 20000}}}});
  CliRun r = run({"rd", "--config", rd});
  EXPECT_EQ(r.code, 0);
  json rec = record(r);
  EXPECT_EQ(rec["result"]["team_rate"], 1.0);
  EXPECT_EQ(rec["result"]["achievable"]["encoder_distortion"], 1.25);
  EXPECT_EQ(rec["result"]["experiment"][0]["n"], 4);

  const auto tr = write_config("transform.json", {{"bias", {3, 4, 0}}, {"transform", {{"kind", "bias-aligning"}}}});
  r = run({"transform", "--config", tr});
  EXPECT_EQ(r.code, 0);
  rec = record(r);
  EXPECT_NEAR(rec["result"]["transformed_bias"][2].get<double>(), 5.0, 1e-12);

  const auto sw = write_config("sweep.json", {{"source", {{"family", "iid-uniform"}, {"dimension", 1}}},
                                              {"bias", {0.05}},
                                              {"solver", {{"samples", 20000}}},
                                              {"sweep", {{"param", "solver.K"}, {"values", {1, 2, 4}},
                                                         {"command", "solve"}}}});
  r = run({"sweep", "--config", sw});
  EXPECT_EQ(r.code, 3);
  rec = record(r);
  ASSERT_EQ(rec["result"]["runs"].size(), 3u);
  EXPECT_EQ(rec["result"]["runs"][0]["exit_code"], 0);
  EXPECT_EQ(rec["result"]["runs"][2]["exit_code"], 3);

  json bad = json::parse(std::ifstream(sw));
  bad["sweep"]["values"] = {1, -2};
  EXPECT_EQ(run({"sweep", "--config", write_config("sweep_bad.json", bad)}).code, 2);
}

TEST(Cli, OutputAppendsJsonLines) {
  const auto out = scratch_dir() / "records.jsonl";
  fs::remove(out);
  const auto path = write_config("append.json", {{"bias", {1, 1}}, {"transform", {{"kind", "pair"}}}});
  EXPECT_EQ(run({"transform", "--config", path, "--out", out.string()}).code, 0);
  EXPECT_EQ(run({"transform", "--config", path, "--out", out.string()}).code, 0);
  std::ifstream in(out);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json rec = json::parse(line);
    EXPECT_TRUE(rec.contains("wall_clock_seconds"));
    ++lines;
  }
  EXPECT_EQ(lines, 2);
}

TEST(Cli, MonteCarloNumbersCarryStderr) {
  const auto path = write_config("stderr.json", {{"source", {{"family", "iid-gaussian"}, {"dimension", 2}}},
                                                 {"bias", {1, 1}},
                                                 {"solver", {{"samples", 20000}}},
                                                 {"policy", {{"kind", "linear"}}}});
  const json rec = record(run({"verify", "--config", path}));
  for (const auto& p : rec["result"]["curve"]) EXPECT_TRUE(p["estimate"].contains("stderr"));
}

}  // namespace
}  // namespace cheaptalk::cli
