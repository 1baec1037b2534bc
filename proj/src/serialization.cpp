#include "pas/serialization.hpp"

#include <fstream>
#include <sstream>

#include "pas/error.hpp"

namespace pas {

namespace {

template <class T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) fail(ErrorCode::SchemaError, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::SchemaError, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

json profile_to_json(const TraitProfile& profile) {
  json j = json::object();
  for (auto d : kAllTraits) j[std::string(trait_name(d))] = profile[d];
  return j;
}

TraitProfile profile_from_json(const json& j) {
  TraitProfile p;
  if (j.is_array()) {
    if (j.size() != kTraitCount) fail(ErrorCode::SchemaError, "profile array needs five values");
    for (std::size_t i = 0; i < kTraitCount; ++i) {
      if (!j[i].is_number()) fail(ErrorCode::SchemaError, "profile values must be numbers");
      p.mean[i] = j[i].get<double>();
    }
    return p;
  }
  for (auto d : kAllTraits) p[d] = field<double>(j, std::string(trait_name(d)).c_str());
  return p;
}

json steering_set_to_json(const SteeringSet& set) {
  json entries = json::array();
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    const auto& e = set.entries[i];
    entries.push_back({{"layer", e.locator.layer},
                       {"head", e.locator.head},
                       {"val_accuracy", i < set.val_accuracy.size() ? set.val_accuracy[i] : 0.0},
                       {"sigma", e.sigma},
                       {"direction", e.direction}});
  }
  return {{"provenance", {{"subject_id", set.subject_id}, {"seed", set.seed}, {"k", set.k}}},
          {"entries", entries}};
}

SteeringSet steering_set_from_json(const json& j) {
  SteeringSet set;
  const json prov = field<json>(j, "provenance");
  set.subject_id = field<std::string>(prov, "subject_id");
  set.seed = field<std::uint64_t>(prov, "seed");
  set.k = field<int>(prov, "k");
  for (const auto& e : field<json>(j, "entries")) {
    SteeringEntry entry;
    entry.locator = {field<int>(e, "layer"), field<int>(e, "head")};
    entry.sigma = field<double>(e, "sigma");
    entry.direction = field<std::vector<double>>(e, "direction");
    set.entries.push_back(std::move(entry));
    set.val_accuracy.push_back(field<double>(e, "val_accuracy"));
  }
  return set;
}

json alignment_to_json(const AlignmentResult& r) {
  return {{"subject_id", r.subject_id},
          {"alpha_star", r.alpha_star},
          {"objective_at_alpha_star", r.objective_at_alpha_star},
          {"objective_at_zero", r.objective_at_zero},
          {"eval_count", r.eval_count},
          {"steering_set", steering_set_to_json(r.steering_set)}};
}

AlignmentResult alignment_from_json(const json& j) {
  AlignmentResult r;
  r.subject_id = field<std::string>(j, "subject_id");
  r.alpha_star = field<double>(j, "alpha_star");
  r.objective_at_alpha_star = field<double>(j, "objective_at_alpha_star");
  r.objective_at_zero = field<double>(j, "objective_at_zero");
  r.eval_count = field<int>(j, "eval_count");
  r.steering_set = steering_set_from_json(field<json>(j, "steering_set"));
  return r;
}

json report_to_json(const AlignedScoreReport& report) {
  json per = json::object(), n = json::object();
  for (auto d : kAllTraits) {
    per[std::string(trait_name(d))] = report.per_dimension[trait_index(d)];
    n[std::string(trait_name(d))] = report.n_items[trait_index(d)];
  }
  return {{"per_dimension", per},
          {"composite", report.composite},
          {"n_items", n},
          {"n_subjects", report.n_subjects},
          {"exclude_train_overlap", report.exclude_train_overlap}};
}

json answers_to_json(const AnswerMap& answers) {
  json j = json::object();
  for (const auto& [id, option] : answers) j[id] = std::string(option_text(option));
  return j;
}

AnswerMap answers_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaError, "answers must be an object of item id to option");
  AnswerMap out;
  for (const auto& [id, v] : j.items()) {
    if (v.is_string()) {
      auto opt = parse_option_text(v.get<std::string>());
      if (!opt) fail(ErrorCode::ValueError, "unrecognised option for " + id + ": " + v.get<std::string>());
      out.emplace(id, *opt);
    } else if (v.is_number_integer()) {
      const int r = v.get<int>();
      if (r < 1 || r > 5) fail(ErrorCode::ValueError, "response for " + id + " outside 1..5");
      out.emplace(id, option_from_response(r));
    } else {
      fail(ErrorCode::SchemaError, "answer for " + id + " must be a string or integer");
    }
  }
  return out;
}

json subject_to_json(const SubjectRecord& s) {
  json j = {{"subject_id", s.subject_id},
            {"sex", s.sex},
            {"age", s.age},
            {"country", s.country},
            {"answers120", answers_to_json(s.answers120)},
            {"answers300", answers_to_json(s.answers300)}};
  if (s.latent) j["latent"] = profile_to_json(*s.latent);
  return j;
}

SubjectRecord subject_from_json(const json& j) {
  SubjectRecord s;
  s.subject_id = field<std::string>(j, "subject_id");
  s.sex = j.value("sex", "");
  s.age = j.value("age", 0);
  s.country = j.value("country", "");
  s.answers120 = answers_from_json(field<json>(j, "answers120"));
  if (j.contains("answers300")) s.answers300 = answers_from_json(j.at("answers300"));
  if (j.contains("latent")) s.latent = profile_from_json(j.at("latent"));
  return s;
}

json cluster_to_json(const ClusterSelection& c) {
  return {{"k", c.k},
          {"seed", c.seed},
          {"iterations", c.iterations},
          {"converged", c.converged},
          {"representatives", c.representatives},
          {"assignments", c.assignments},
          {"wcss_trace", c.wcss_trace}};
}

json toy_truth_to_json(const ToyGroundTruth& truth) {
  json planted = json::array();
  for (const auto& [loc, u] : truth.planted)
    planted.push_back({{"layer", loc.layer},
                       {"head", loc.head},
                       {"trait", std::string(trait_name(truth.band_trait.at(loc)))},
                       {"direction", u}});
  json copy = json::array();
  for (const auto& loc : truth.copy_heads) copy.push_back({{"layer", loc.layer}, {"head", loc.head}});
  return {{"persona", profile_to_json(truth.persona)},
          {"agreement_gain", truth.agreement_gain},
          {"band_heads", planted},
          {"copy_heads", copy}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const json& j) { write_text_atomic(path, dump(j)); }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

}  // namespace pas
