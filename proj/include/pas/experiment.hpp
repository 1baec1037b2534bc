#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pas/dataset.hpp"
#include "pas/evaluation.hpp"
#include "pas/steering.hpp"
#include "pas/toy_model.hpp"

namespace pas {

inline constexpr std::string_view kToolName = "pas";
inline constexpr std::string_view kToolVersion = "0.1.0";

struct DataSourceConfig {
  /// Either a PAPI CSV path or a synthetic population.
  std::optional<std::filesystem::path> csv;
  std::size_t synthetic_n = 0;
  std::uint64_t synthetic_seed = 0;
};

struct ToySpec {
  TraitProfile persona;
  int n_layers = 4;
  int n_heads = 8;
  int head_dim = 8;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  DataSourceConfig data;
  /// Directory with ipip120.jsonl / ipip300.jsonl; synthetic catalogs when unset.
  std::optional<std::filesystem::path> catalog_dir;
  int k_test = 0;
  int probe_k = 24;
  AlphaSearchConfig search;
  bool exclude_train_overlap = false;
  bool fewshot_baseline = true;
  ToySpec toy;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int kmeans_max_iters = 100;
};

/// Parses a config document. Missing required fields raise ConfigError naming
/// the field path, e.g. "output_dir" or "toy.seed".
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

struct SubjectOutcome {
  AlignmentResult alignment;
  double composite_pas = 0.0;
  double composite_unsteered = 0.0;
  std::optional<double> composite_fewshot;
};

struct ExperimentReport {
  ExperimentConfig config;
  ClusterSelection clusters;
  std::map<std::string, AlignedScoreReport> methods;  // "pas", "unsteered", "fewshot"
  std::vector<SubjectOutcome> subjects;
  std::vector<std::pair<std::string, double>> timing;  // stage -> seconds
};

/// Data -> test-set selection -> toy model -> per-subject alignment ->
/// scoring of PAS, unsteered and few-shot answers. Writes report.json,
/// test_set.json and per-subject steering/alignment artifacts under
/// config.output_dir. Stage failures are re-raised with the stage name and
/// subject id prepended.
ExperimentReport run_experiment(const ExperimentConfig& config);

nlohmann::json report_to_json(const ExperimentReport& report);

// Shared building blocks for the CLI and the service.
CatalogPair load_experiment_catalogs(const ExperimentConfig& config);
PapiTable load_experiment_data(const ExperimentConfig& config, const CatalogPair& catalogs);
ToyModel build_experiment_model(const ExperimentConfig& config);
std::filesystem::path subject_artifact_dir(const std::filesystem::path& out, const std::string& subject_id);

}  // namespace pas
