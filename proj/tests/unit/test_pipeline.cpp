#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "recaudit/config.hpp"
#include "recaudit/pipeline.hpp"
#include "recaudit/report.hpp"
#include "recaudit/synthetic.hpp"

using namespace recaudit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("recaudit_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Ten rows over three entities, second-resolution stamps.
fs::path ten_row_fixture(const fs::path& dir) {
  const fs::path p = dir / "events.csv";
  std::ofstream out(p);
  out << "entity,item,timestamp\n"
         "u1,a,100\nu1,b,200\nu1,c,300\n"
         "u2,a,150\nu2,b,250\nu2,d,350\nu2,a,450\n"
         "u3,b,120\nu3,c,220\nu3,d,320\n";
  return p;
}

MetricReport sample_report(const std::string& model, const std::string& sampler) {
  MetricReport r;
  r.model = model;
  r.sampler = sampler;
  r.cutoffs = {1, 5, 20};
  r.recall = {0.1, 1.0 / 3.0, 0.7};
  r.mrr = {0.1, 0.2000000000000001, 1e-17};
  return r;
}

}  // namespace

TEST_CASE("unknown configuration keys are rejected by name") {
  Json doc = Json::parse(R"({"evall": {"cutoffs": [1, 5]}})");
  try {
    resolve_config(doc);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("evall.cutoffs") != std::string::npos);
  }
  Json nested = Json::parse(R"({"eval": {"cutof": 5}})");
  CHECK_THROWS_WITH_AS(resolve_config(nested), doctest::Contains("eval.cutof"), ConfigError);
  Json typed = Json::parse(R"({"threads": "many"})");
  CHECK_THROWS_AS(resolve_config(typed), ConfigError);
}

TEST_CASE("defaults resolve and every key is reported") {
  Json doc = Json::parse(R"({"input": {"path": "x.csv"}, "stages": ["ingest", "diagnose"]})");
  const auto cfg = resolve_config(doc);
  CHECK(cfg.stages == std::vector<std::string>{"ingest", "diagnose"});
  CHECK(cfg.resolved.contains("eval"));
  CHECK(cfg.resolved["eval"].contains("cutoffs"));
  CHECK(cfg.resolved["output"]["dir"] == "recaudit_out");
  CHECK_FALSE(cfg.seed.has_value());
}

TEST_CASE("stochastic settings require a seed") {
  Json doc = Json::parse(R"({"input": {"path": "x.csv"}, "eval": {"samplers": ["uniform:100"]}})");
  CHECK_THROWS_WITH_AS(resolve_config(doc), doctest::Contains("seed"), ConfigError);
  doc["seed"] = 7;
  const auto cfg = resolve_config(doc);
  CHECK(*cfg.seed == 7);
  CHECK(cfg.eval.eval.master_seed == 7);

  Json loo = Json::parse(R"({"input": {"path": "x.csv"}, "split": {"strategy": "loo", "selection": "random:5"}})");
  CHECK_THROWS_AS(resolve_config(loo), ConfigError);
  Json full = Json::parse(R"({"input": {"path": "x.csv"}, "eval": {"samplers": ["none", "top_popular:10"]}})");
  CHECK_NOTHROW(resolve_config(full));
}

TEST_CASE("stage dependencies are checked") {
  Json doc = Json::parse(R"({"input": {"path": "x.csv"}, "stages": ["ingest", "evaluate"]})");
  CHECK_THROWS_WITH_AS(resolve_config(doc), doctest::Contains("requires"), ConfigError);
  Json no_input = Json::parse(R"({"stages": ["ingest"]})");
  CHECK_THROWS_WITH_AS(resolve_config(no_input), doctest::Contains("input.path"), ConfigError);
  Json reordered = Json::parse(R"({"input": {"path": "x.csv"}, "stages": ["diagnose", "ingest"]})");
  CHECK(resolve_config(reordered).stages == std::vector<std::string>{"ingest", "diagnose"});
}

TEST_CASE("environment and command-line overrides layer on top") {
  Json doc = Json::parse(R"({"input": {"path": "x.csv"}, "eval": {"cutoffs": [1, 2]}})");
  const EnvList env{{"RECAUDIT_EVAL__CUTOFFS", "3,4"}, {"RECAUDIT_SEED", "11"}, {"HOME", "/root"}};
  auto cfg = load_config(doc, env, {});
  CHECK(cfg.eval.eval.cutoffs == std::vector<std::size_t>{3, 4});
  CHECK(*cfg.seed == 11);
  cfg = load_config(doc, env, {{"eval.cutoffs", "[7, 9]"}, {"output.dir", "elsewhere"}});
  CHECK(cfg.eval.eval.cutoffs == std::vector<std::size_t>{7, 9});
  CHECK(cfg.output.dir == "elsewhere");
  CHECK_THROWS_AS(load_config(doc, {{"RECAUDIT_EVAL__BOGUS", "1"}}, {}), ConfigError);
  CHECK_THROWS_AS(load_config(doc, {}, {{"eval.bogus", "1"}}), ConfigError);
}

TEST_CASE("metric csv has the documented header and round-trips") {
  const std::vector<MetricReport> reports{sample_report("markov", "none"), sample_report("popularity", "uniform:100")};
  std::stringstream csv;
  write_metrics_csv(reports, csv);
  const std::string text = csv.str();
  CHECK(text.rfind("model,sampler,cutoff,recall,mrr\n", 0) == 0);
  CHECK(text.find("markov,none,5,") != std::string::npos);

  const auto back = read_metrics_csv(csv);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].model == reports[i].model);
    CHECK(back[i].sampler == reports[i].sampler);
    CHECK(back[i].cutoffs == reports[i].cutoffs);
    CHECK(back[i].recall == reports[i].recall);
    CHECK(back[i].mrr == reports[i].mrr);
  }

  // JSON -> CSV -> JSON keeps every field the CSV represents.
  Json j = Json::array();
  for (const auto& r : reports) j.push_back(to_json(r));
  std::vector<MetricReport> from_json;
  for (const auto& x : j) from_json.push_back(metric_report_from_json(x));
  std::stringstream csv2;
  write_metrics_csv(from_json, csv2);
  const auto again = read_metrics_csv(csv2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(to_json(again[i])["metrics"][c] == j[i]["metrics"][c]);
    }
  }

  std::istringstream bad("model,cutoff\nx,1\n");
  CHECK_THROWS(read_metrics_csv(bad));
}

TEST_CASE("shortest round-trip number formatting") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, 0.0, 1.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("empty diagnostics sections are omitted") {
  DiagnosticsBundle d;
  CHECK(d.empty());
  CHECK(to_json(d) == Json::object());
  d.overlap = OverlapReport{};
  const auto j = to_json(d);
  CHECK(j.contains("overlap"));
  CHECK_FALSE(j.contains("collisions"));
  CHECK_FALSE(j.contains("sequentiality"));
  CHECK_FALSE(j.contains("new_transition_rate"));
  for (const auto& [key, value] : j.items()) CHECK_FALSE(value.is_null());
}

TEST_CASE("ingest and diagnose on a ten-row fixture") {
  const auto dir = scratch_dir("minimal");
  const auto input = ten_row_fixture(dir);
  Json doc;
  doc["stages"] = {"ingest", "diagnose"};
  doc["input"]["path"] = input.string();
  doc["output"]["dir"] = (dir / "out").string();
  const auto cfg = resolve_config(doc);
  const auto manifest = run_pipeline(cfg);
  CHECK(manifest.ok);
  REQUIRE(manifest.stages.size() == 2);
  CHECK(manifest.stages[0].name == "ingest");
  CHECK(manifest.stages[1].name == "diagnose");
  CHECK(exit_code(manifest) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "diagnostics.json"));
  const auto written = Json::parse(read_file(dir / "out" / "manifest.json"));
  CHECK(written["stages"].size() == 2);
  CHECK(written["config"]["eval"].contains("cutoffs"));
  CHECK(written["inputs"][0]["sha256"].get<std::string>().size() == 64);
  CHECK(written["warnings"].empty());
}

TEST_CASE("dry run plans without reading data") {
  Json doc;
  doc["input"]["path"] = "/nonexistent/input.csv";
  doc["seed"] = 1;
  doc["eval"]["samplers"] = {"none", "uniform:100"};
  const auto plan = dry_run_plan(resolve_config(doc));
  CHECK(plan["dry_run"] == true);
  CHECK(plan["plan"].size() == kStageOrder.size());
  CHECK(plan["config"]["seed"] == 1);
}

TEST_CASE("a failing stage is named and the partial manifest is written") {
  const auto dir = scratch_dir("failing");
  Json doc;
  doc["input"]["path"] = (dir / "missing.csv").string();
  doc["output"]["dir"] = (dir / "out").string();
  const auto manifest = run_pipeline(resolve_config(doc));
  CHECK_FALSE(manifest.ok);
  CHECK(*manifest.failed_stage == "ingest");
  CHECK(exit_code(manifest) == 1);
  const auto written = Json::parse(read_file(dir / "out" / "manifest.json"));
  CHECK(written["failed_stage"] == "ingest");
}

TEST_CASE("full runs surface audit warnings and reruns reproduce every report") {
  const auto dir = scratch_dir("rerun");
  synthetic::LogSpec spec;
  spec.users = 200;
  spec.drift.items = 150;
  spec.drift.days = 6;
  spec.drift.drift_day = 5;
  spec.activity = 0.5;
  {
    std::ofstream out(dir / "events.csv");
    synthetic::write_event_csv(synthetic::event_log(spec), out);
  }
  Json doc;
  doc["seed"] = 42;
  doc["input"]["path"] = (dir / "events.csv").string();
  doc["input"]["entity_column"] = "user_id";
  doc["input"]["item_column"] = "item_id";
  doc["input"]["type_column"] = "event_type";
  doc["preprocess"]["keep_event_type"] = "view";
  doc["preprocess"]["session_mode"] = "gap";
  doc["split"]["test_days"] = 1;
  doc["model"]["names"] = {"popularity", "markov", "cooccurrence"};
  doc["eval"]["samplers"] = {"none", "uniform:50", "popularity:20"};
  doc["output"]["dir"] = (dir / "first").string();
  const auto first = run_pipeline(resolve_config(doc));
  REQUIRE(first.ok);
  CHECK(exit_code(first) == 2);
  bool sampled_warning = false;
  for (const auto& w : first.warnings) sampled_warning |= w.code == "W-SAMPLED-METRICS";
  CHECK(sampled_warning);
  CHECK(first.stages.size() == 5);

  // Rerun from the written manifest into another directory.
  Json again = read_config_file((dir / "first" / "manifest.json").string());
  again["output"]["dir"] = (dir / "second").string();
  const auto second = run_pipeline(resolve_config(again));
  REQUIRE(second.reports.size() == first.reports.size());
  for (std::size_t i = 0; i < first.reports.size(); ++i) {
    CHECK(first.reports[i].path == second.reports[i].path);
    CHECK(first.reports[i].sha256 == second.reports[i].sha256);
    CHECK(read_file(dir / "first" / first.reports[i].path) == read_file(dir / "second" / second.reports[i].path));
  }
}
