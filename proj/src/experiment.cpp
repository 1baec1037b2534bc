#include "pas/experiment.hpp"

#include <chrono>
#include <mutex>

#include "pas/error.hpp"
#include "pas/parallel.hpp"
#include "pas/serialization.hpp"

namespace pas {

namespace {

const json& require(const json& j, const std::string& path, const std::string& name) {
  if (!j.is_object() || !j.contains(name))
    fail(ErrorCode::ConfigError, "missing config field '" + (path.empty() ? name : path + "." + name) + "'");
  return j.at(name);
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, "config field '" + path + "' has the wrong type");
  }
}

template <class T>
T required(const json& j, const std::string& path, const std::string& name) {
  return get_as<T>(require(j, path, name), path.empty() ? name : path + "." + name);
}

template <class T>
T optional_field(const json& j, const std::string& path, const std::string& name, T fallback) {
  if (!j.contains(name)) return fallback;
  return get_as<T>(j.at(name), path.empty() ? name : path + "." + name);
}

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  template <class F>
  auto run(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      sink_.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        finish();
      } else {
        auto result = f();
        finish();
        return result;
      }
    } catch (const Error& e) {
      if (e.detail().rfind("stage ", 0) == 0) throw;
      throw Error(e.code(), "stage " + stage + ": " + e.detail());
    }
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
};

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  ExperimentConfig c;

  const json& data = require(j, "", "data");
  if (data.contains("csv")) {
    c.data.csv = required<std::string>(data, "data", "csv");
  } else if (data.contains("synthetic")) {
    const json& syn = data.at("synthetic");
    c.data.synthetic_n = required<std::size_t>(syn, "data.synthetic", "n");
    c.data.synthetic_seed = required<std::uint64_t>(syn, "data.synthetic", "seed");
  } else {
    fail(ErrorCode::ConfigError, "missing config field 'data.csv' or 'data.synthetic'");
  }
  if (j.contains("catalog_dir")) c.catalog_dir = required<std::string>(j, "", "catalog_dir");

  c.k_test = required<int>(j, "", "k_test");
  c.probe_k = required<int>(j, "", "probe_k");
  if (j.contains("search")) {
    const json& s = j.at("search");
    c.search.lo = optional_field(s, "search", "lo", c.search.lo);
    c.search.hi = optional_field(s, "search", "hi", c.search.hi);
    c.search.tolerance = optional_field(s, "search", "tolerance", c.search.tolerance);
    c.search.max_evals = optional_field(s, "search", "max_evals", c.search.max_evals);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    c.exclude_train_overlap = optional_field(e, "eval", "exclude_train_overlap", c.exclude_train_overlap);
    c.fewshot_baseline = optional_field(e, "eval", "fewshot_baseline", c.fewshot_baseline);
  }
  const json& toy = require(j, "", "toy");
  try {
    c.toy.persona = profile_from_json(require(toy, "toy", "persona"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, "config field 'toy.persona': " + e.detail());
  }
  c.toy.n_layers = optional_field(toy, "toy", "layers", c.toy.n_layers);
  c.toy.n_heads = optional_field(toy, "toy", "heads", c.toy.n_heads);
  c.toy.head_dim = optional_field(toy, "toy", "head_dim", c.toy.head_dim);
  c.toy.seed = required<std::uint64_t>(toy, "toy", "seed");

  c.output_dir = required<std::string>(j, "", "output_dir");
  c.seed = required<std::uint64_t>(j, "", "seed");
  c.kmeans_max_iters = optional_field(j, "", "kmeans_max_iters", c.kmeans_max_iters);

  if (c.k_test < 1) fail(ErrorCode::ConfigError, "k_test must be positive");
  if (c.probe_k < 1) fail(ErrorCode::ConfigError, "probe_k must be positive");
  if (!(c.search.lo < c.search.hi)) fail(ErrorCode::ConfigError, "search.lo must be below search.hi");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.detail());
  }
  ExperimentConfig c = parse_experiment_config(j);
  // Relative paths in the file are relative to the file.
  const auto base = path.parent_path();
  auto anchor = [&](std::filesystem::path& p) {
    if (p.is_relative()) p = base / p;
  };
  if (c.data.csv) anchor(*c.data.csv);
  if (c.catalog_dir) anchor(*c.catalog_dir);
  anchor(c.output_dir);
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json data = json::object();
  if (c.data.csv) data["csv"] = c.data.csv->string();
  else data["synthetic"] = {{"n", c.data.synthetic_n}, {"seed", c.data.synthetic_seed}};
  json j = {{"data", data},
            {"k_test", c.k_test},
            {"probe_k", c.probe_k},
            {"search",
             {{"lo", c.search.lo}, {"hi", c.search.hi}, {"tolerance", c.search.tolerance}, {"max_evals", c.search.max_evals}}},
            {"eval", {{"exclude_train_overlap", c.exclude_train_overlap}, {"fewshot_baseline", c.fewshot_baseline}}},
            {"toy",
             {{"persona", profile_to_json(c.toy.persona)},
              {"layers", c.toy.n_layers},
              {"heads", c.toy.n_heads},
              {"head_dim", c.toy.head_dim},
              {"seed", c.toy.seed}}},
            {"output_dir", c.output_dir.string()},
            {"seed", c.seed},
            {"kmeans_max_iters", c.kmeans_max_iters}};
  if (c.catalog_dir) j["catalog_dir"] = c.catalog_dir->string();
  return j;
}

CatalogPair load_experiment_catalogs(const ExperimentConfig& config) {
  return config.catalog_dir ? load_catalogs(*config.catalog_dir) : synthetic_catalogs();
}

PapiTable load_experiment_data(const ExperimentConfig& config, const CatalogPair& catalogs) {
  if (config.data.csv) return load_papi_csv(*config.data.csv, catalogs);
  return generate_synthetic(config.data.synthetic_n, config.data.synthetic_seed, catalogs);
}

ToyModel build_experiment_model(const ExperimentConfig& config) {
  const ToySpec& t = config.toy;
  return build_toy_persona_lm(t.persona, toy_config(t.n_layers, t.n_heads, t.head_dim), t.seed);
}

std::filesystem::path subject_artifact_dir(const std::filesystem::path& out, const std::string& subject_id) {
  return out / "subjects" / subject_id;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  StageTimer timer(report.timing);

  const CatalogPair catalogs = timer.run("catalogs", [&] { return load_experiment_catalogs(config); });
  const PapiTable table = timer.run("data", [&] { return load_experiment_data(config, catalogs); });
  report.clusters = timer.run("cluster", [&] {
    return kmeans_select(table, catalogs.ipip300, config.k_test, config.seed, config.kmeans_max_iters);
  });
  const ToyModel toy = timer.run("model", [&] { return build_experiment_model(config); });
  const Transformer model(toy.checkpoint);

  std::vector<SubjectRecord> subjects;
  for (const auto& id : report.clusters.test_ids()) subjects.push_back(table.subject(id));

  // Subjects are aligned one after another; each search is internally
  // parallel over items and heads.
  std::vector<AlignmentResult> alignments(subjects.size());
  timer.run("align", [&] {
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      try {
        alignments[i] = align_subject(model, subjects[i], catalogs, config.probe_k, config.search, config.seed);
      } catch (const Error& e) {
        throw Error(e.code(), "stage align, subject " + subjects[i].subject_id + ": " + e.detail());
      }
    }
  });

  std::vector<AnswerMap> pas_answers(subjects.size()), base_answers(subjects.size()), fewshot_answers;
  timer.run("evaluate", [&] {
    const AnswerMap unsteered = answer_catalog(model, nullptr, catalogs.ipip300);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      const Steering steering = alignments[i].steering();
      pas_answers[i] = answer_catalog(model, &steering, catalogs.ipip300);
      base_answers[i] = unsteered;
    }
    const bool ex = config.exclude_train_overlap;
    report.methods["pas"] = aligned_score(pas_answers, subjects, catalogs.ipip300, ex);
    report.methods["unsteered"] = aligned_score(base_answers, subjects, catalogs.ipip300, ex);
    if (config.fewshot_baseline) {
      fewshot_answers.resize(subjects.size());
      for (std::size_t i = 0; i < subjects.size(); ++i) {
        try {
          const std::string context = fewshot_context(subjects[i], catalogs.ipip120);
          auto ctx_tokens = model.tokenizer().encode_prompt({context, "", nullptr, ""});
          const KvCache cache = model.prefill(ctx_tokens, nullptr);
          AnswerOptions opts;
          opts.context = context;
          opts.context_cache = &cache;
          fewshot_answers[i] = answer_catalog(model, nullptr, catalogs.ipip300, opts);
        } catch (const Error& e) {
          throw Error(e.code(), "stage evaluate, subject " + subjects[i].subject_id + ": " + e.detail());
        }
      }
      report.methods["fewshot"] = aligned_score(fewshot_answers, subjects, catalogs.ipip300, ex);
    }
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      SubjectOutcome o;
      o.alignment = alignments[i];
      o.composite_pas = aligned_score({pas_answers[i]}, {subjects[i]}, catalogs.ipip300, ex).composite;
      o.composite_unsteered = aligned_score({base_answers[i]}, {subjects[i]}, catalogs.ipip300, ex).composite;
      if (config.fewshot_baseline)
        o.composite_fewshot = aligned_score({fewshot_answers[i]}, {subjects[i]}, catalogs.ipip300, ex).composite;
      report.subjects.push_back(std::move(o));
    }
  });

  timer.run("persist", [&] {
    const auto& out = config.output_dir;
    std::filesystem::create_directories(out);
    write_json_file(out / "test_set.json", cluster_to_json(report.clusters));
    for (const auto& o : report.subjects) {
      const auto dir = subject_artifact_dir(out, o.alignment.subject_id);
      write_json_file(dir / "steering_set.json", steering_set_to_json(o.alignment.steering_set));
      write_json_file(dir / "alignment.json", alignment_to_json(o.alignment));
    }
  });
  write_json_file(config.output_dir / "report.json", report_to_json(report));
  return report;
}

json report_to_json(const ExperimentReport& report) {
  json methods = json::object();
  for (const auto& [name, r] : report.methods) methods[name] = report_to_json(r);
  json subjects = json::array();
  for (const auto& o : report.subjects) {
    json s = {{"subject_id", o.alignment.subject_id},
              {"alpha_star", o.alignment.alpha_star},
              {"objective_at_alpha_star", o.alignment.objective_at_alpha_star},
              {"objective_at_zero", o.alignment.objective_at_zero},
              {"eval_count", o.alignment.eval_count},
              {"heads", o.alignment.steering_set.entries.size()},
              {"composite", {{"pas", o.composite_pas}, {"unsteered", o.composite_unsteered}}}};
    if (o.composite_fewshot) s["composite"]["fewshot"] = *o.composite_fewshot;
    subjects.push_back(std::move(s));
  }
  json timing = json::object();
  for (const auto& [stage, seconds] : report.timing) timing[stage] = seconds;
  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"config", experiment_config_to_json(report.config)},
          {"test_set", report.clusters.representatives},
          {"methods", methods},
          {"subjects", subjects},
          {"timing", timing}};
}

}  // namespace pas
