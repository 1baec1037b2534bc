#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pas/psychometrics.hpp"
#include "pas/transformer.hpp"

namespace pas {

enum class AnswerSuffix { Yes, No };

struct ProbeExample {
  std::string item_id;
  AnswerSuffix suffix = AnswerSuffix::Yes;
  int label = 0;
  std::string text;
  std::vector<TokenId> prompt_tokens;
};

/// Two prompts per non-neutral statement. Label 1 when the answer word
/// matches the subject's stance on the statement (an Accurate answer agrees,
/// an Inaccurate one disagrees);
/// neutral and Unknown answers are skipped.
std::vector<ProbeExample> make_probe_examples(const AnswerMap& answers120, const Catalog& catalog120,
                                              const Tokenizer& tokenizer);

/// Final-token, pre-projection head outputs: features[locator] has one row per example.
struct ActivationSet {
  std::map<HeadLocator, Matrix> features;
  std::vector<int> labels;
};

ActivationSet collect_activations(const ModelBackend& model, const std::vector<ProbeExample>& examples);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded per-class shuffle; round(60%) of each class goes to train.
DataSplit stratified_split(const std::vector<int>& labels, std::uint64_t seed, double train_fraction = 0.6);

/// Split over whole probe pairs: the Yes and No prompts of one statement land
/// on the same side. Each pair holds one example per label, so the split is
/// exactly stratified.
DataSplit paired_split(const std::vector<ProbeExample>& examples, std::uint64_t seed, double train_fraction = 0.6);

struct ProbeTrainingConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  double l2 = 1e-4;
};

struct HeadProbe {
  HeadLocator locator;
  std::vector<double> theta;
  double val_accuracy = 0.0;
};

double sigmoid(double z);

/// Bias-free logistic regression p = sigmoid(<theta, x>) by full-batch
/// gradient descent from zero; accuracy on the validation rows at p > 0.5.
HeadProbe train_probe(const Matrix& features, const std::vector<int>& labels, const DataSplit& split,
                      HeadLocator locator = {}, const ProbeTrainingConfig& config = {});
HeadProbe train_probe(const Matrix& features, const std::vector<int>& labels, std::uint64_t split_seed);

/// One probe per head, trained independently; output ordered by locator.
std::vector<HeadProbe> train_all_probes(const ActivationSet& activations, const DataSplit& split,
                                        const ProbeTrainingConfig& config = {});

inline constexpr int kDefaultHeadCount = 24;

struct SteeringSet {
  std::vector<SteeringEntry> entries;
  std::vector<double> val_accuracy;  // parallel to entries
  std::string subject_id;
  std::uint64_t seed = 0;
  int k = 0;

  Steering at(double alpha) const { return {entries, alpha}; }
  /// Stored numbers: K * (head_dim + 1).
  std::size_t parameter_count() const;
};

/// Top-K heads by validation accuracy (ties to lower (layer, head)). Each
/// direction is theta / |theta|, sign-flipped so label-1 training rows project
/// positively; sigma is the population std of training-row projections.
SteeringSet select_heads(const std::vector<HeadProbe>& probes, int k, const ActivationSet& activations,
                         const DataSplit& split);

}  // namespace pas
