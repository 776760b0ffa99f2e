#include <doctest.h>

#include "zonecast/cli.hpp"
#include "zonecast/csv.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace zonecast;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("zonecast_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Two zones over June and July: June trains, July is held out.
fs::path small_config(const fs::path& dir, const std::string& extra = "") {
  const auto path = dir / "run.cfg";
  csv::write_file(path, "[paths]\n"
                        "data_dir = " + (dir / "data").string() + "\n"
                        "work_dir = " + (dir / "work").string() + "\n"
                        "model_store = " + (dir / "models").string() + "\n"
                        "output_dir = " + (dir / "out").string() + "\n"
                        "[simulate]\nn_zones = 2\nmonths = 2\nstart = 2022-06-01T00:00:00Z\n"
                        "[features]\nlookback_steps = 4\nhorizon_steps = 96\n"
                        "[select]\nn_folds = 3\ncandidates = RANDOM_FOREST,GRADIENT_BOOSTING\n"
                        "[regressor.RANDOM_FOREST]\nn_trees = 10\n"
                        "[regressor.GRADIENT_BOOSTING]\nn_rounds = 20\n"
                        "[mpc]\ntotal_hours = 3\n" + extra);
  return path;
}

void pipeline(const fs::path& cfg) {
  for (const char* cmd : {"simulate", "ingest", "preprocess", "train", "evaluate"}) {
    const auto r = call({"--config", cfg.string(), cmd});
    INFO(cmd << ": " << r.err);
    REQUIRE(r.code == 0);
  }
}

}  // namespace

TEST_CASE("help exits 0 and lists the commands") {
  const auto r = call({"--help"});
  CHECK(r.code == 0);
  for (const char* cmd : {"ingest", "preprocess", "train", "forecast", "evaluate", "simulate", "optimize", "report"}) {
    CHECK(r.out.find(cmd) != std::string::npos);
  }
  CHECK(call({"train", "--help"}).code == 0);
}

TEST_CASE("usage errors exit 1") {
  CHECK(call({}).code == 1);
  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({"simulate", "--bogus"}).code == 1);
  CHECK(call({"train", "--step", "600"}).code == 1);
  CHECK(call({"--jobs", "0", "simulate"}).code == 1);
}

TEST_CASE("config errors exit 1 with the offending key") {
  const auto dir = fresh_dir("badcfg");
  csv::write_file(dir / "a.cfg", "[run]\ncolour = red\n");
  const auto r = call({"--config", (dir / "a.cfg").string(), "simulate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("run.colour") != std::string::npos);
  CHECK(call({"--config", (dir / "missing.cfg").string(), "simulate"}).code == 1);
}

TEST_CASE("evaluate without a model store exits 1 and names it") {
  const auto dir = fresh_dir("nostore");
  const auto cfg = small_config(dir);
  const auto r = call({"--config", cfg.string(), "evaluate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("models") != std::string::npos);
  // The failure is still recorded.
  const auto manifest = csv::read_file(dir / "out" / "runs.jsonl");
  const auto line = nlohmann::json::parse(manifest.substr(0, manifest.find('\n')));
  CHECK(line["command"] == "evaluate");
  CHECK(line["exit_code"] == 1);
  CHECK(line.contains("error"));
}

TEST_CASE("end-to-end pipeline is finite and reproducible") {
  const auto a = fresh_dir("e2e_a");
  const auto b = fresh_dir("e2e_b");
  pipeline(small_config(a));
  pipeline(small_config(b));

  const auto summary = nlohmann::json::parse(csv::read_file(a / "out" / "eval_900_summary.json"));
  CHECK(summary["n_windows"].get<int>() > 0);
  CHECK(std::isfinite(summary["pooled_mae_f"].get<double>()));
  CHECK(summary["pooled_mae_f"].get<double>() < 5.0);
  CHECK(csv::read_file(a / "out" / "eval_900.csv") == csv::read_file(b / "out" / "eval_900.csv"));
  CHECK(csv::read_file(a / "data" / "telemetry.csv") == csv::read_file(b / "data" / "telemetry.csv"));

  SUBCASE("forecast writes one trace per zone") {
    const auto cfg = (a / "run.cfg").string();
    REQUIRE(call({"--config", cfg, "forecast", "--zone", "zone_2"}).code == 0);
    CHECK(fs::exists(a / "out" / "forecast_zone_2_900.csv"));
    CHECK_FALSE(fs::exists(a / "out" / "forecast_zone_1_900.csv"));
  }
  SUBCASE("report writes both traces") {
    REQUIRE(call({"--config", (a / "run.cfg").string(), "report"}).code == 0);
    CHECK(fs::exists(a / "out" / "report" / "forecast_trace_900.csv"));
    CHECK(fs::exists(a / "out" / "report" / "mpc_trace.csv"));
  }
  SUBCASE("a different seed changes the data") {
    const auto c = fresh_dir("e2e_c");
    REQUIRE(call({"--config", small_config(c).string(), "--seed", "7", "simulate"}).code == 0);
    CHECK(csv::read_file(a / "data" / "telemetry.csv") != csv::read_file(c / "data" / "telemetry.csv"));
  }
  SUBCASE("manifest lines carry the run metadata") {
    const auto text = csv::read_file(a / "out" / "runs.jsonl");
    std::istringstream lines(text);
    std::string l;
    int n = 0;
    while (std::getline(lines, l)) {
      const auto j = nlohmann::json::parse(l);
      CHECK(j["exit_code"] == 0);
      CHECK(j["seed"] == 42);
      CHECK(j["config_hash"].get<std::string>().size() == 16);
      CHECK(j.contains("timings_s"));
      ++n;
    }
    CHECK(n >= 5);
  }
}

TEST_CASE("optimize writes traces and a summary; ZONECAST_CONFIG is honoured") {
  const auto dir = fresh_dir("opt");
  const auto cfg = small_config(dir);
  ::setenv("ZONECAST_CONFIG", cfg.string().c_str(), 1);
  const auto r = call({"optimize"});
  ::unsetenv("ZONECAST_CONFIG");
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto s = nlohmann::json::parse(csv::read_file(dir / "out" / "mpc_summary.json"));
  CHECK(s["total_hours"] == 3);
  CHECK(s["mpc"]["total_cost"].get<double>() <= s["baseline"]["total_cost"].get<double>() + 1e-9);
  CHECK(fs::exists(dir / "out" / "mpc_trace.csv"));
  CHECK(fs::exists(dir / "out" / "tariff.csv"));
}

TEST_CASE("optimize reads a tariff file and rejects a bad one") {
  const auto dir = fresh_dir("tariff");
  csv::write_file(dir / "good.csv",
                  "hour_start_rfc3339,price_per_kwh\n2022-07-12T00:00:00Z,0.1\n2022-07-12T01:00:00Z,0.5\n"
                  "2022-07-12T02:00:00Z,0.1\n");
  csv::write_file(dir / "bad.csv", "hour_start_rfc3339,price_per_kwh\n2022-07-12T00:00:00Z,-1\n");
  const auto text = csv::read_file(small_config(dir));
  const auto rest = text.substr(text.find('\n') + 1);
  csv::write_file(dir / "good.cfg", "[paths]\ntariff = " + (dir / "good.csv").string() + "\n" + rest);
  csv::write_file(dir / "bad.cfg", "[paths]\ntariff = " + (dir / "bad.csv").string() + "\n" + rest);
  CHECK(call({"--config", (dir / "good.cfg").string(), "optimize"}).code == 0);
  CHECK(csv::read_file(dir / "out" / "tariff.csv") == csv::read_file(dir / "good.csv"));
  CHECK(call({"--config", (dir / "bad.cfg").string(), "optimize"}).code == 1);
}
