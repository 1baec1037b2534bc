#include "pas/service.hpp"

#include <cstdio>
#include <iostream>

#include <httplib.h>

#include "pas/error.hpp"
#include "pas/serialization.hpp"

namespace pas {

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::NotAligned: return 409;
    case ErrorCode::IoError:
    case ErrorCode::BindError: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message, json extra = json::object()) {
  extra["error"] = std::string(error_code_name(code));
  extra["message"] = message;
  send_json(res, http_status(code), extra);
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) fail(ErrorCode::SchemaError, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what());
  }
}

std::string body_string(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_string())
    fail(ErrorCode::SchemaError, std::string("field '") + name + "' must be a string");
  return j.at(name).get<std::string>();
}

std::optional<double> body_alpha(const json& j) {
  if (!j.contains("alpha") || j.at("alpha").is_null()) return std::nullopt;
  if (!j.at("alpha").is_number()) fail(ErrorCode::SchemaError, "field 'alpha' must be a number");
  return j.at("alpha").get<double>();
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json item_json(const Item& item) {
  return {{"id", item.id},
          {"text", item.text},
          {"trait", std::string(trait_name(item.trait))},
          {"keying", item.keying == Keying::Positive ? "+" : "-"}};
}

// Wraps a handler so every pas::Error becomes a JSON error response.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.detail());
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "InternalError"}, {"message", e.what()}});
    }
  };
}

}  // namespace

Service::Service(ExperimentConfig config)
    : config_(std::move(config)), state_dir_(config_.output_dir / "service") {
  catalogs_ = load_experiment_catalogs(config_);
  model_ = std::make_unique<Transformer>(build_experiment_model(config_).checkpoint);
  server_ = std::make_unique<httplib::Server>();

  std::filesystem::create_directories(state_dir_ / "subjects");
  std::filesystem::create_directories(state_dir_ / "alignments");
  std::filesystem::create_directories(state_dir_ / "jobs");
  write_json_file(state_dir_ / "config.json", experiment_config_to_json(config_));

  // Resume: the job counter continues after the highest id on disk and any
  // job that never finished is queued again.
  std::vector<std::pair<long, Job>> pending;
  for (const auto& entry : std::filesystem::directory_iterator(state_dir_ / "jobs")) {
    if (entry.path().extension() != ".json") continue;
    const json j = read_json_file(entry.path());
    const std::string id = j.at("job_id").get<std::string>();
    const long n = std::stol(id.substr(id.find('-') + 1));
    job_counter_ = std::max(job_counter_, n);
    const std::string state = j.at("state").get<std::string>();
    if (state == "queued" || state == "running")
      pending.push_back({n, Job{id, j.at("subject_id").get<std::string>(), j.at("k").get<int>()}});
  }
  std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [n, job] : pending) {
    write_json_file(state_dir_ / "jobs" / (job.id + ".json"),
                    {{"job_id", job.id}, {"subject_id", job.subject_id}, {"k", job.k}, {"state", "queued"}});
    queue_.push_back(job);
  }

  routes();
  worker_ = std::jthread([this](std::stop_token st) { worker_loop(st); });
}

Service::~Service() {
  stop();
  worker_.request_stop();
  cv_.notify_all();
}

int Service::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) bound = server_->bind_to_any_port(host);
  else if (!server_->bind_to_port(host, port)) bound = -1;
  if (bound <= 0) fail(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

std::string Service::next_job_id() {
  char buf[32];
  std::snprintf(buf, sizeof buf, "job-%06ld", ++job_counter_);
  return buf;
}

SubjectRecord Service::load_subject(const std::string& id) const {
  const auto path = state_dir_ / "subjects" / (id + ".json");
  if (id.empty() || id.find('/') != std::string::npos || !std::filesystem::exists(path))
    fail(ErrorCode::NotFound, "unknown subject " + id);
  return subject_from_json(read_json_file(path));
}

std::optional<AlignmentResult> Service::load_alignment(const std::string& subject_id) const {
  const auto path = state_dir_ / "alignments" / subject_id / "alignment.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  return alignment_from_json(read_json_file(path));
}

const Catalog& Service::scoring_catalog(const SubjectRecord& subject) const {
  return subject.answers300.size() == catalogs_.ipip300.items.size() ? catalogs_.ipip300 : catalogs_.ipip120;
}

void Service::worker_loop(std::stop_token stop) {
  while (true) {
    Job job;
    {
      std::unique_lock lock(mu_);
      if (!cv_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      job = queue_.front();
      queue_.pop_front();
    }
    run_job(job);
  }
}

void Service::run_job(const Job& job) {
  const auto job_path = state_dir_ / "jobs" / (job.id + ".json");
  json record = {{"job_id", job.id}, {"subject_id", job.subject_id}, {"k", job.k}, {"state", "running"}};
  {
    std::lock_guard lock(mu_);
    write_json_file(job_path, record);
  }
  try {
    const SubjectRecord subject = load_subject(job.subject_id);
    const AlignmentResult result = align_subject(*model_, subject, catalogs_, job.k, config_.search, config_.seed);
    // Only the worker writes alignments, one job at a time.
    const auto dir = state_dir_ / "alignments" / job.subject_id;
    write_json_file(dir / "steering_set.json", steering_set_to_json(result.steering_set));
    write_json_file(dir / "alignment.json", alignment_to_json(result));
    record["state"] = "done";
    record["result"] = alignment_to_json(result);
  } catch (const Error& e) {
    record["state"] = "failed";
    record["error"] = {{"error", std::string(error_code_name(e.code()))}, {"message", e.detail()}};
  } catch (const std::exception& e) {
    record["state"] = "failed";
    record["error"] = {{"error", "InternalError"}, {"message", e.what()}};
  }
  std::lock_guard lock(mu_);
  write_json_file(job_path, record);
}

void Service::routes() {
  httplib::Server& s = *server_;

  s.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  }));

  s.Get("/items", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.has_param("catalog") ? req.get_param_value("catalog") : "ipip120";
    const Catalog* catalog = nullptr;
    if (name == "ipip120") catalog = &catalogs_.ipip120;
    else if (name == "ipip300") catalog = &catalogs_.ipip300;
    else fail(ErrorCode::ValueError, "catalog must be ipip120 or ipip300");
    json items = json::array();
    for (const auto& item : catalog->items) items.push_back(item_json(item));
    send_json(res, 200, {{"catalog", name}, {"items", items}});
  }));

  s.Post("/subjects", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.contains("answers")) fail(ErrorCode::SchemaError, "field 'answers' is required");
    AnswerMap all = answers_from_json(body.at("answers"));
    SubjectRecord subject;
    std::vector<std::string> missing;
    for (const auto& item : catalogs_.ipip120.items) {
      auto it = all.find(item.id);
      if (it == all.end()) missing.push_back(item.id);
      else subject.answers120.emplace(item.id, it->second);
    }
    for (const auto& [id, option] : all) {
      if (catalogs_.ipip120.find(id)) continue;
      if (!catalogs_.ipip300.find(id)) fail(ErrorCode::ValueError, "unknown item id " + id);
      subject.answers300.emplace(id, option);
    }
    if (!missing.empty()) {
      send_error(res, ErrorCode::MissingAnswer,
                 std::to_string(missing.size()) + " IPIP120 item(s) unanswered, first " + missing.front(),
                 {{"missing", missing}});
      return;
    }
    // Overlapping IPIP300 items inherit the IPIP120 answers.
    if (!subject.answers300.empty()) {
      for (const auto& [id120, id300] : catalogs_.ipip300.overlap_map)
        subject.answers300.emplace(id300, subject.answers120.at(id120));
      if (subject.answers300.size() != catalogs_.ipip300.items.size()) subject.answers300.clear();
    }
    subject.subject_id = "U" + fnv1a_hex(answers_to_json(subject.answers120).dump() +
                                         answers_to_json(subject.answers300).dump());
    const TraitProfile profile = trait_profile(subject.answers120, catalogs_.ipip120);
    {
      std::lock_guard lock(mu_);
      write_json_file(state_dir_ / "subjects" / (subject.subject_id + ".json"), subject_to_json(subject));
    }
    send_json(res, 201, {{"subject_id", subject.subject_id}, {"profile", profile_to_json(profile)}});
  }));

  s.Get(R"(/subjects/([^/]+)/profile)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const SubjectRecord subject = load_subject(req.matches[1]);
    send_json(res, 200, profile_to_json(trait_profile(subject.answers120, catalogs_.ipip120)));
  }));

  s.Post("/align", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const std::string subject_id = body_string(body, "subject_id");
    int k = config_.probe_k;
    if (body.contains("k")) {
      if (!body.at("k").is_number_integer()) fail(ErrorCode::SchemaError, "field 'k' must be an integer");
      k = body.at("k").get<int>();
    }
    const int heads = model_->config().n_layers * model_->config().n_heads;
    if (k < 1 || k > heads) fail(ErrorCode::ValueError, "k must lie in 1.." + std::to_string(heads));
    load_subject(subject_id);
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = next_job_id();
      write_json_file(state_dir_ / "jobs" / (id + ".json"),
                      {{"job_id", id}, {"subject_id", subject_id}, {"k", k}, {"state", "queued"}});
      queue_.push_back({id, subject_id, k});
    }
    cv_.notify_one();
    send_json(res, 202, {{"job_id", id}});
  }));

  s.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto path = state_dir_ / "jobs" / (id + ".json");
    json record;
    {
      std::lock_guard lock(mu_);
      if (id.find('/') != std::string::npos || !std::filesystem::exists(path))
        fail(ErrorCode::NotFound, "unknown job " + id);
      record = read_json_file(path);
    }
    send_json(res, 200, record);
  }));

  s.Post("/score", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const SubjectRecord subject = load_subject(body_string(body, "subject_id"));
    const auto requested = body_alpha(body);
    const auto alignment = load_alignment(subject.subject_id);
    double alpha = 0.0;
    if (requested) {
      alpha = *requested;
      if (alpha < config_.search.lo || alpha > config_.search.hi)
        fail(ErrorCode::ValueError, "alpha outside the search interval");
    } else {
      if (!alignment) fail(ErrorCode::NotAligned, "subject " + subject.subject_id + " has no finished alignment");
      alpha = alignment->alpha_star;
    }
    if (alpha != 0.0 && !alignment)
      fail(ErrorCode::NotAligned, "subject " + subject.subject_id + " has no finished alignment");
    const Catalog& catalog = scoring_catalog(subject);
    AnswerMap answers;
    if (alignment) {
      const Steering steering = alignment->steering_set.at(alpha);
      answers = answer_catalog(*model_, &steering, catalog);
    } else {
      answers = answer_catalog(*model_, nullptr, catalog);
    }
    json out = report_to_json(aligned_score({answers}, {subject}, catalog, false));
    out["alpha"] = alpha;
    out["catalog"] = std::string(catalog_name(catalog.name));
    if (alignment) out["alpha_star"] = alignment->alpha_star;
    send_json(res, 200, out);
  }));

  s.Post("/generate", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const SubjectRecord subject = load_subject(body_string(body, "subject_id"));
    const std::string item_id = body_string(body, "item_id");
    const Item* item = catalogs_.ipip120.find(item_id);
    if (!item) item = catalogs_.ipip300.find(item_id);
    if (!item) fail(ErrorCode::NotFound, "unknown item " + item_id);
    const auto alignment = load_alignment(subject.subject_id);
    const auto requested = body_alpha(body);
    double alpha = 0.0;
    if (requested) alpha = *requested;
    else if (alignment) alpha = alignment->alpha_star;
    else fail(ErrorCode::NotAligned, "subject " + subject.subject_id + " has no finished alignment");
    if (alpha != 0.0 && !alignment)
      fail(ErrorCode::NotAligned, "subject " + subject.subject_id + " has no finished alignment");
    ItemAnswer answer;
    if (alignment) {
      const Steering steering = alignment->steering_set.at(alpha);
      answer = answer_item_detailed(*model_, &steering, *item);
    } else {
      answer = answer_item_detailed(*model_, nullptr, *item);
    }
    json logliks = json::object();
    for (std::size_t i = 0; i < kAnswerOptions.size(); ++i)
      logliks[std::string(option_text(kAnswerOptions[i]))] = answer.logliks[i];
    send_json(res, 200,
              {{"option", std::string(option_text(answer.option))}, {"logliks", logliks}, {"alpha", alpha},
               {"item_id", item->id}});
  }));

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty())
      send_json(res, 404, {{"error", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}});
  });
}

void serve(const ExperimentConfig& config, const std::string& host, int port) {
  Service service(config);
  const int bound = service.bind(host, port);
  std::cerr << "serving on " << host << ":" << bound << " (state in " << service.state_dir().string() << ")\n";
  service.listen();
}

}  // namespace pas
