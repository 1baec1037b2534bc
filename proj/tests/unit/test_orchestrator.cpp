#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pas/error.hpp"
#include "pas/experiment.hpp"
#include "pas/serialization.hpp"

using namespace pas;
namespace fs = std::filesystem;

namespace {

json small_config(const fs::path& out) {
  return {{"data", {{"synthetic", {{"n", 12}, {"seed", 3}}}}},
          {"k_test", 2},
          {"probe_k", 4},
          {"toy", {{"persona", {3, 3, 3, 3, 3}}, {"layers", 2}, {"heads", 8}, {"head_dim", 8}, {"seed", 7}}},
          {"output_dir", out.string()},
          {"seed", 5}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pas_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("orchestrator") {

TEST_CASE("missing required fields name the field") {
  json j = small_config("x");
  j.erase("output_dir");
  try {
    parse_experiment_config(j);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("output_dir") != std::string::npos);
  }
  json t = small_config("x");
  t["toy"].erase("seed");
  try {
    parse_experiment_config(t);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("toy.seed") != std::string::npos);
  }
}

TEST_CASE("config round trip and relative paths") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "c.json");
    f << small_config("rel_out").dump();
  }
  const auto cfg = load_experiment_config(dir / "c.json");
  CHECK(cfg.output_dir == dir / "rel_out");
  CHECK(cfg.k_test == 2);
  CHECK(cfg.toy.n_layers == 2);
  const auto again = parse_experiment_config(experiment_config_to_json(cfg));
  CHECK(dump(experiment_config_to_json(again)) == dump(experiment_config_to_json(cfg)));
}

TEST_CASE("pipeline writes artifacts and is deterministic apart from timing") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const auto ra = run_experiment(parse_experiment_config(small_config(a)));
  const auto rb = run_experiment(parse_experiment_config(small_config(b)));
  CHECK(fs::exists(a / "report.json"));
  CHECK(fs::exists(a / "test_set.json"));
  REQUIRE(ra.subjects.size() == 2);
  for (const auto& s : ra.subjects) {
    CHECK(fs::exists(subject_artifact_dir(a, s.alignment.subject_id) / "steering_set.json"));
    CHECK(fs::exists(subject_artifact_dir(a, s.alignment.subject_id) / "alignment.json"));
    CHECK(s.alignment.objective_at_alpha_star <= s.alignment.objective_at_zero);
  }
  CHECK(ra.methods.count("pas") == 1);
  CHECK(ra.methods.count("unsteered") == 1);
  CHECK(ra.methods.count("fewshot") == 1);

  json ja = report_to_json(ra), jb = report_to_json(rb);
  ja.erase("timing");
  jb.erase("timing");
  ja["config"].erase("output_dir");
  jb["config"].erase("output_dir");
  CHECK(ja.dump() == jb.dump());
  const auto first = subject_artifact_dir(a, ra.subjects[0].alignment.subject_id) / "steering_set.json";
  const auto second = subject_artifact_dir(b, rb.subjects[0].alignment.subject_id) / "steering_set.json";
  CHECK(dump(read_json_file(first)) == dump(read_json_file(second)));
}

TEST_CASE("stage failures carry the stage name") {
  json j = small_config(scratch("bad"));
  j["data"] = {{"csv", "/nonexistent/papi.csv"}};
  try {
    run_experiment(parse_experiment_config(j));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage data") != std::string::npos);
  }
}

}
