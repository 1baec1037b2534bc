#include "pas/probes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pas/error.hpp"
#include "pas/parallel.hpp"
#include "pas/prompts.hpp"

namespace pas {

std::vector<ProbeExample> make_probe_examples(const AnswerMap& answers120, const Catalog& catalog120,
                                              const Tokenizer& tokenizer) {
  const auto parts = split_template(kProbeTemplate);
  std::vector<ProbeExample> out;
  for (const auto& item : catalog120.items) {
    auto it = answers120.find(item.id);
    if (it == answers120.end()) fail(ErrorCode::MissingAnswer, "no answer for item " + item.id);
    // Stance towards the statement itself: for a negatively keyed item,
    // agreeing means a low keyed score.
    const int response = response_value(it->second);
    if (response == 0 || response == 3) continue;
    const bool agrees = response >= 4;
    for (auto suffix : {AnswerSuffix::Yes, AnswerSuffix::No}) {
      const std::string word = suffix == AnswerSuffix::Yes ? "Yes" : "No";
      const std::string after = std::string(parts.after) + word;
      ProbeExample ex;
      ex.item_id = item.id;
      ex.suffix = suffix;
      ex.label = (suffix == AnswerSuffix::Yes) == agrees ? 1 : 0;
      ex.text = render_template(kProbeTemplate, item.text) + word;
      ex.prompt_tokens = tokenizer.encode_prompt({"", parts.before, &item, after});
      out.push_back(std::move(ex));
    }
  }
  if (out.empty()) fail(ErrorCode::InsufficientData, "every answered statement is neutral");
  return out;
}

ActivationSet collect_activations(const ModelBackend& model, const std::vector<ProbeExample>& examples) {
  if (examples.empty()) fail(ErrorCode::EmptyInput, "no probe examples");
  const auto heads = all_heads(model.config());
  const std::size_t D = model.config().head_dim;
  ActivationSet set;
  for (const auto& h : heads) set.features.emplace(h, Matrix(examples.size(), D));
  set.labels.resize(examples.size());
  ForwardOptions opts;
  opts.capture = heads;
  parallel_for(examples.size(), [&](std::size_t i) {
    const ForwardResult r = model.forward(examples[i].prompt_tokens, opts);
    for (const auto& h : heads) {
      const Matrix& c = r.captures.at(h);
      std::copy_n(c.row(c.rows - 1), D, set.features.at(h).row(i));
    }
    set.labels[i] = examples[i].label;
  });
  return set;
}

DataSplit stratified_split(const std::vector<int>& labels, std::uint64_t seed, double train_fraction) {
  std::mt19937_64 rng(seed);
  DataSplit split;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    else n_train = idx.size();
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + n_train);
    split.val.insert(split.val.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

DataSplit paired_split(const std::vector<ProbeExample>& examples, std::uint64_t seed, double train_fraction) {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& r = rows[examples[i].item_id];
    if (r.empty()) ids.push_back(examples[i].item_id);
    r.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(ids.size())));
  if (ids.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
  DataSplit split;
  for (std::size_t g = 0; g < ids.size(); ++g) {
    auto& side = g < n_train ? split.train : split.val;
    side.insert(side.end(), rows[ids[g]].begin(), rows[ids[g]].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace {

double dot(const double* a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

HeadProbe train_probe(const Matrix& features, const std::vector<int>& labels, const DataSplit& split,
                      HeadLocator locator, const ProbeTrainingConfig& config) {
  if (labels.size() != features.rows) fail(ErrorCode::ValueError, "labels and features differ in length");
  bool has0 = false, has1 = false;
  for (auto i : split.train) (labels[i] ? has1 : has0) = true;
  if (!has0 || !has1) fail(ErrorCode::SingleClassError, "probe training data holds a single class");

  const std::size_t D = features.cols;
  HeadProbe probe;
  probe.locator = locator;
  probe.theta.assign(D, 0.0);
  std::vector<double> grad(D);
  const double inv_n = 1.0 / static_cast<double>(split.train.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (auto i : split.train) {
      const double* x = features.row(i);
      const double err = sigmoid(dot(x, probe.theta)) - labels[i];
      for (std::size_t d = 0; d < D; ++d) grad[d] += err * x[d];
    }
    for (std::size_t d = 0; d < D; ++d)
      probe.theta[d] -= config.learning_rate * (grad[d] * inv_n + config.l2 * probe.theta[d]);
  }
  std::size_t correct = 0;
  for (auto i : split.val) {
    const int pred = sigmoid(dot(features.row(i), probe.theta)) > 0.5 ? 1 : 0;
    correct += pred == labels[i];
  }
  probe.val_accuracy = split.val.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(split.val.size());
  return probe;
}

HeadProbe train_probe(const Matrix& features, const std::vector<int>& labels, std::uint64_t split_seed) {
  bool has0 = false, has1 = false;
  for (int y : labels) (y ? has1 : has0) = true;
  if (!has0 || !has1) fail(ErrorCode::SingleClassError, "all probe labels are equal");
  return train_probe(features, labels, stratified_split(labels, split_seed));
}

std::vector<HeadProbe> train_all_probes(const ActivationSet& activations, const DataSplit& split,
                                        const ProbeTrainingConfig& config) {
  std::vector<HeadLocator> heads;
  for (const auto& [loc, m] : activations.features) heads.push_back(loc);
  std::vector<HeadProbe> probes(heads.size());
  parallel_for(heads.size(), [&](std::size_t i) {
    probes[i] = train_probe(activations.features.at(heads[i]), activations.labels, split, heads[i], config);
  });
  return probes;
}

std::size_t SteeringSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.direction.size() + 1;
  return n;
}

SteeringSet select_heads(const std::vector<HeadProbe>& probes, int k, const ActivationSet& activations,
                         const DataSplit& split) {
  if (k < 1 || static_cast<std::size_t>(k) > probes.size())
    fail(ErrorCode::ValueError, "K=" + std::to_string(k) + " outside 1.." + std::to_string(probes.size()));
  std::vector<const HeadProbe*> order;
  for (const auto& p : probes) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const HeadProbe* a, const HeadProbe* b) {
    if (a->val_accuracy != b->val_accuracy) return a->val_accuracy > b->val_accuracy;
    return a->locator < b->locator;
  });

  SteeringSet set;
  set.k = k;
  for (int i = 0; i < k; ++i) {
    const HeadProbe& p = *order[i];
    const Matrix& x = activations.features.at(p.locator);
    SteeringEntry e;
    e.locator = p.locator;
    double norm = 0.0;
    for (double v : p.theta) norm += v * v;
    norm = std::sqrt(norm);
    e.direction.assign(p.theta.size(), 0.0);
    if (norm == 0.0) {
      // Untrained probe: keep a valid unit vector but make the entry inert.
      e.direction[0] = 1.0;
      e.sigma = 0.0;
    } else {
      for (std::size_t d = 0; d < p.theta.size(); ++d) e.direction[d] = p.theta[d] / norm;
      std::vector<double> proj;
      double pos_sum = 0.0;
      for (auto r : split.train) {
        proj.push_back(dot(x.row(r), e.direction));
        if (activations.labels[r] == 1) pos_sum += proj.back();
      }
      if (pos_sum < 0.0) {
        for (auto& v : e.direction) v = -v;
        for (auto& v : proj) v = -v;
      }
      double mean = 0.0;
      for (double v : proj) mean += v;
      mean /= static_cast<double>(proj.size());
      double var = 0.0;
      for (double v : proj) var += (v - mean) * (v - mean);
      e.sigma = std::sqrt(var / static_cast<double>(proj.size()));
    }
    set.entries.push_back(std::move(e));
    set.val_accuracy.push_back(p.val_accuracy);
  }
  return set;
}

}  // namespace pas
