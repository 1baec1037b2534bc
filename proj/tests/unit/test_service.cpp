#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "pas/error.hpp"
#include "pas/evaluation.hpp"
#include "pas/serialization.hpp"
#include "pas/service.hpp"

using namespace pas;
namespace fs = std::filesystem;

namespace {

ExperimentConfig service_config(const fs::path& out) {
  ExperimentConfig c;
  c.data.synthetic_n = 10;
  c.data.synthetic_seed = 1;
  c.k_test = 2;
  c.probe_k = 4;
  c.toy.persona = TraitProfile{{3, 3, 3, 3, 3}};
  c.toy.n_layers = 2;
  c.toy.n_heads = 8;
  c.toy.head_dim = 8;
  c.toy.seed = 7;
  c.output_dir = out;
  c.seed = 9;
  return c;
}

// Runs a Service on a background thread for the lifetime of the object.
struct Running {
  explicit Running(const ExperimentConfig& c) : service(c) {
    port = service.bind("127.0.0.1", 0);
    thread = std::thread([this] { service.listen(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    for (int i = 0; i < 100 && !client->Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Running() {
    service.stop();
    thread.join();
  }
  json post(const std::string& path, const json& body, int& status) {
    auto r = client->Post(path, body.dump(), "application/json");
    REQUIRE(r);
    status = r->status;
    return json::parse(r->body);
  }
  json get(const std::string& path, int& status) {
    auto r = client->Get(path);
    REQUIRE(r);
    status = r->status;
    return json::parse(r->body);
  }
  json wait_job(const std::string& id) {
    int status = 0;
    for (int i = 0; i < 600; ++i) {
      json j = get("/jobs/" + id, status);
      if (j.at("state") == "done" || j.at("state") == "failed") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    FAIL("job did not finish");
    return {};
  }

  Service service;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

json far_answers(const CatalogPair& cats) {
  const auto s = synthesize_subject("far", TraitProfile{{1.2, 4.8, 4.6, 1.0, 4.9}}, 11, cats);
  return answers_to_json(s.answers120);
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("http API") {
  const fs::path out = fs::temp_directory_path() / "pas_test_service";
  fs::remove_all(out);
  const auto cats = synthetic_catalogs();
  Running r(service_config(out));
  int status = 0;

  CHECK(r.get("/health", status) == json{{"status", "ok"}});
  CHECK(status == 200);

  const json items = r.get("/items?catalog=ipip120", status);
  CHECK(items.at("items").size() == 120);
  r.get("/items?catalog=bogus", status);
  CHECK(status == 400);

  SUBCASE("incomplete answers list the missing item") {
    json answers = far_answers(cats);
    const std::string dropped = cats.ipip120.items[17].id;
    answers.erase(dropped);
    const json err = r.post("/subjects", {{"answers", answers}}, status);
    CHECK(status == 400);
    CHECK(err.at("error") == "MissingAnswer");
    CHECK(err.at("missing") == json::array({dropped}));
  }

  SUBCASE("malformed bodies and unknown routes") {
    auto bad = r.client->Post("/subjects", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body).contains("error"));
    r.get("/nope", status);
    CHECK(status == 404);
    r.get("/subjects/Udeadbeef/profile", status);
    CHECK(status == 404);
    r.get("/jobs/job-999999", status);
    CHECK(status == 404);
  }

  SUBCASE("subject, alignment, scoring and generation") {
    const json created = r.post("/subjects", {{"answers", far_answers(cats)}}, status);
    CHECK(status == 201);
    const std::string id = created.at("subject_id");
    CHECK(r.get("/subjects/" + id + "/profile", status) == created.at("profile"));

    r.post("/score", {{"subject_id", id}}, status);
    CHECK(status == 409);
    const json unsteered = r.post("/score", {{"subject_id", id}, {"alpha", 0.0}}, status);
    CHECK(status == 200);

    const json job = r.post("/align", {{"subject_id", id}, {"k", 4}}, status);
    CHECK(status == 202);
    const json done = r.wait_job(job.at("job_id"));
    REQUIRE(done.at("state") == "done");
    const double alpha_star = done.at("result").at("alpha_star");

    const json scored = r.post("/score", {{"subject_id", id}}, status);
    CHECK(status == 200);
    CHECK(scored.at("alpha").get<double>() == alpha_star);
    CHECK(scored.at("composite").get<double>() <= unsteered.at("composite").get<double>());
    r.post("/score", {{"subject_id", id}, {"alpha", 99.0}}, status);
    CHECK(status == 400);

    // alpha = 0 generation equals the unsteered model.
    const Item& item = cats.ipip120.items[3];
    const json gen = r.post("/generate", {{"subject_id", id}, {"item_id", item.id}, {"alpha", 0.0}}, status);
    CHECK(status == 200);
    const Transformer model(build_experiment_model(service_config(out)).checkpoint);
    const auto direct = answer_item_detailed(model, nullptr, item);
    CHECK(gen.at("option") == std::string(option_text(direct.option)));
    CHECK(gen.at("logliks").at("Very Accurate").get<double>() == doctest::Approx(direct.logliks[0]));
  }
}

TEST_CASE("bind failure") {
  const fs::path out = fs::temp_directory_path() / "pas_test_bind";
  fs::remove_all(out);
  Service service(service_config(out));
  // TEST-NET address: never assigned to a local interface.
  try {
    service.bind("203.0.113.7", 0);
    FAIL("expected BindError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BindError);
  }
}

TEST_CASE("restart resumes queued jobs") {
  const fs::path out = fs::temp_directory_path() / "pas_test_resume";
  fs::remove_all(out);
  const auto cats = synthetic_catalogs();
  std::string id;
  {
    Running r(service_config(out));
    int status = 0;
    id = r.post("/subjects", {{"answers", far_answers(cats)}}, status).at("subject_id");
  }
  // A job left queued by a stopped process.
  write_json_file(out / "service" / "jobs" / "job-000007.json",
                  {{"job_id", "job-000007"}, {"subject_id", id}, {"k", 4}, {"state", "queued"}});
  Running r(service_config(out));
  const json done = r.wait_job("job-000007");
  CHECK(done.at("state") == "done");
  int status = 0;
  const json next = r.post("/align", {{"subject_id", id}, {"k", 2}}, status);
  CHECK(next.at("job_id") == "job-000008");
  r.wait_job("job-000008");
}

}
