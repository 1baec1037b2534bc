// Command-line front end: one subcommand per pipeline stage plus `run` and `serve`.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pas/error.hpp"
#include "pas/experiment.hpp"
#include "pas/serialization.hpp"
#include "pas/service.hpp"

using namespace pas;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "seed override");
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = load_experiment_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

fs::path out_dir(const Common& c, const std::optional<ExperimentConfig>& cfg) {
  if (!c.out.empty()) return c.out;
  if (cfg) return cfg->output_dir;
  fail(ErrorCode::ConfigError, "missing config field 'output_dir' (or pass --out)");
}

CatalogPair catalogs_from(const std::string& dir) { return dir.empty() ? synthetic_catalogs() : load_catalogs(dir); }

TraitProfile parse_persona(const std::string& text) {
  TraitProfile p;
  std::stringstream ss(text);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= kTraitCount) fail(ErrorCode::ValueError, "persona takes five comma-separated values");
    p.mean[i++] = std::stod(part);
  }
  if (i != kTraitCount) fail(ErrorCode::ValueError, "persona takes five comma-separated values");
  return p;
}

SubjectRecord find_subject(const ExperimentConfig& cfg, const CatalogPair& catalogs, const std::string& id,
                           const std::string& file) {
  if (!file.empty()) return subject_from_json(read_json_file(file));
  if (id.empty()) fail(ErrorCode::ValueError, "pass --subject or --subject-file");
  return load_experiment_data(cfg, catalogs).subject(id);
}

void print(const json& j) { std::cout << dump(j); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personality activation search on a toy transformer"};
  app.require_subcommand(1);

  Common common;

  // synth
  std::size_t synth_n = 100;
  auto* synth = app.add_subcommand("synth", "generate a synthetic PAPI-style population");
  add_common(synth, common, false);
  synth->add_option("--n", synth_n, "number of subjects");

  // ingest
  std::string csv, catalog_dir;
  auto* ingest = app.add_subcommand("ingest", "validate a PAPI CSV and write per-subject profiles");
  add_common(ingest, common, false);
  ingest->add_option("--csv", csv, "PAPI CSV")->required();
  ingest->add_option("--catalogs", catalog_dir, "catalog directory (default: synthetic catalogs)");

  // cluster
  int k_test = 0, max_iters = 100;
  auto* cluster = app.add_subcommand("cluster", "select the test set with k-means");
  add_common(cluster, common, false);
  cluster->add_option("--csv", csv, "PAPI CSV (default: the config's data source)");
  cluster->add_option("--catalogs", catalog_dir, "catalog directory");
  cluster->add_option("--k", k_test, "number of clusters");
  cluster->add_option("--max-iters", max_iters, "Lloyd iteration cap");

  // build-toy
  std::string persona_text;
  int layers = 4, heads = 8, head_dim = 8;
  auto* build = app.add_subcommand("build-toy", "write the toy persona checkpoint and its ground truth");
  add_common(build, common, false);
  build->add_option("--persona", persona_text, "five levels in trait order A,C,E,N,O");
  build->add_option("--layers", layers);
  build->add_option("--heads", heads);
  build->add_option("--head-dim", head_dim);

  // align
  std::string subject_id, subject_file;
  std::optional<int> probe_k;
  double grid_step = 0.0;
  auto* align = app.add_subcommand("align", "align the toy model to one subject");
  add_common(align, common, true);
  align->add_option("--subject", subject_id, "subject id from the config's data source");
  align->add_option("--subject-file", subject_file, "subject JSON (as stored by the service)");
  align->add_option("--k", probe_k, "number of steered heads");
  align->add_option("--grid", grid_step, "also scan the objective on a grid with this step");

  // eval
  auto* eval = app.add_subcommand("eval", "score persisted alignments of the test set");
  add_common(eval, common, true);

  // ate
  int shift = 1;
  auto* ate = app.add_subcommand("ate", "average treatment effect of shifting a subject's answers");
  add_common(ate, common, true);
  ate->add_option("--subject", subject_id, "subject id")->required();
  ate->add_option("--shift", shift, "keyed-score shift applied to every answer");
  ate->add_option("--k", probe_k, "number of steered heads");

  // run
  auto* run = app.add_subcommand("run", "full experiment");
  add_common(run, common, true);

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "HTTP API");
  add_common(srv, common, true);
  srv->add_option("--host", host);
  srv->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<ExperimentConfig> cfg;
    if (!common.config.empty()) cfg = load_config(common);

    if (synth->parsed()) {
      const fs::path out = out_dir(common, cfg);
      const std::uint64_t seed = common.seed ? *common.seed : cfg ? cfg->data.synthetic_seed : 0;
      const CatalogPair catalogs = synthetic_catalogs();
      const PapiTable table = generate_synthetic(synth_n, seed, catalogs);
      save_catalogs(catalogs, out / "catalogs");
      save_papi_csv(table, catalogs, out / "papi.csv");
      std::cout << "wrote " << table.records.size() << " subjects to " << (out / "papi.csv").string() << "\n";
    } else if (ingest->parsed()) {
      const CatalogPair catalogs = catalogs_from(catalog_dir);
      const PapiTable table = load_papi_csv(csv, catalogs);
      json profiles = json::object();
      for (const auto& r : table.records) profiles[r.subject_id] = profile_to_json(trait_profile(r.answers120, catalogs.ipip120));
      const fs::path out = out_dir(common, cfg);
      write_json_file(out / "profiles.json", profiles);
      std::cout << "ingested " << table.records.size() << " subjects\n";
    } else if (cluster->parsed()) {
      CatalogPair catalogs;
      PapiTable table;
      if (!csv.empty()) {
        catalogs = catalogs_from(catalog_dir);
        table = load_papi_csv(csv, catalogs);
      } else if (cfg) {
        catalogs = load_experiment_catalogs(*cfg);
        table = load_experiment_data(*cfg, catalogs);
      } else {
        fail(ErrorCode::ConfigError, "pass --csv or --config");
      }
      const int k = k_test > 0 ? k_test : cfg ? cfg->k_test : 0;
      const std::uint64_t seed = common.seed ? *common.seed : cfg ? cfg->seed : 0;
      const auto selection = kmeans_select(table, catalogs.ipip300, k, seed, max_iters);
      write_json_file(out_dir(common, cfg) / "test_set.json", cluster_to_json(selection));
      print(json(selection.representatives));
    } else if (build->parsed()) {
      ToySpec spec;
      if (cfg) spec = cfg->toy;
      if (!persona_text.empty()) spec.persona = parse_persona(persona_text);
      else if (!cfg) spec.persona.mean.fill(3.0);
      if (!cfg || build->count("--layers")) spec.n_layers = layers;
      if (!cfg || build->count("--heads")) spec.n_heads = heads;
      if (!cfg || build->count("--head-dim")) spec.head_dim = head_dim;
      if (common.seed) spec.seed = *common.seed;
      const ToyModel toy = build_toy_persona_lm(spec.persona, toy_config(spec.n_layers, spec.n_heads, spec.head_dim), spec.seed);
      const fs::path out = out_dir(common, cfg);
      fs::create_directories(out);
      save_checkpoint(toy.checkpoint, out / "toy.ckpt");
      write_json_file(out / "truth.json", toy_truth_to_json(toy.truth));
      std::cout << "wrote " << (out / "toy.ckpt").string() << "\n";
    } else if (align->parsed()) {
      const CatalogPair catalogs = load_experiment_catalogs(*cfg);
      const SubjectRecord subject = find_subject(*cfg, catalogs, subject_id, subject_file);
      const Transformer model(build_experiment_model(*cfg).checkpoint);
      const int k = probe_k.value_or(cfg->probe_k);
      const AlignmentResult result = align_subject(model, subject, catalogs, k, cfg->search, cfg->seed);
      const fs::path dir = subject_artifact_dir(cfg->output_dir, subject.subject_id);
      write_json_file(dir / "steering_set.json", steering_set_to_json(result.steering_set));
      write_json_file(dir / "alignment.json", alignment_to_json(result));
      if (grid_step > 0.0) {
        json grid = json::array();
        for (const auto& [a, v] : grid_scan([&](double alpha) {
               return calibration_objective(model, result.steering_set, alpha, subject, catalogs.ipip120);
             }, cfg->search.lo, cfg->search.hi, grid_step))
          grid.push_back({{"alpha", a}, {"objective", v}});
        write_json_file(dir / "grid.json", grid);
      }
      json summary = alignment_to_json(result);
      summary.erase("steering_set");
      print(summary);
    } else if (eval->parsed()) {
      const CatalogPair catalogs = load_experiment_catalogs(*cfg);
      const PapiTable table = load_experiment_data(*cfg, catalogs);
      const auto selection = kmeans_select(table, catalogs.ipip300, cfg->k_test, cfg->seed, cfg->kmeans_max_iters);
      const Transformer model(build_experiment_model(*cfg).checkpoint);
      std::vector<SubjectRecord> subjects;
      std::vector<AnswerMap> pas_answers, base_answers;
      const AnswerMap unsteered = answer_catalog(model, nullptr, catalogs.ipip300);
      for (const auto& id : selection.test_ids()) {
        const fs::path path = subject_artifact_dir(cfg->output_dir, id) / "alignment.json";
        if (!fs::exists(path)) fail(ErrorCode::NotAligned, "no alignment for " + id + " (run `align` or `run` first)");
        const AlignmentResult r = alignment_from_json(read_json_file(path));
        const Steering steering = r.steering();
        subjects.push_back(table.subject(id));
        pas_answers.push_back(answer_catalog(model, &steering, catalogs.ipip300));
        base_answers.push_back(unsteered);
      }
      const json out = {{"pas", report_to_json(aligned_score(pas_answers, subjects, catalogs.ipip300, cfg->exclude_train_overlap))},
                        {"unsteered", report_to_json(aligned_score(base_answers, subjects, catalogs.ipip300, cfg->exclude_train_overlap))}};
      write_json_file(cfg->output_dir / "eval.json", out);
      print(out);
    } else if (ate->parsed()) {
      const CatalogPair catalogs = load_experiment_catalogs(*cfg);
      const SubjectRecord subject = find_subject(*cfg, catalogs, subject_id, "");
      const Transformer model(build_experiment_model(*cfg).checkpoint);
      const AteResult r = ate_experiment(model, subject, shift, catalogs, probe_k.value_or(cfg->probe_k), cfg->search, cfg->seed);
      TraitProfile delta;
      delta.mean = r.delta;
      const json out = {{"subject_id", subject.subject_id},
                        {"shift", shift},
                        {"y0", profile_to_json(r.y0)},
                        {"y1", profile_to_json(r.y1)},
                        {"delta", profile_to_json(delta)},
                        {"alpha_star", {{"original", r.original.alpha_star}, {"shifted", r.shifted.alpha_star}}}};
      write_json_file(cfg->output_dir / "ate" / (subject.subject_id + ".json"), out);
      print(out);
    } else if (run->parsed()) {
      const ExperimentReport report = run_experiment(*cfg);
      json methods = json::object();
      for (const auto& [name, r] : report.methods) methods[name] = r.composite;
      print({{"composite", methods}, {"report", (cfg->output_dir / "report.json").string()}});
    } else if (srv->parsed()) {
      serve(*cfg, host, port);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
