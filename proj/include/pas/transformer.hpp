#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "pas/checkpoint.hpp"
#include "pas/tokenizer.hpp"

namespace pas {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// One steered head: its pre-projection output becomes Att + alpha * sigma * direction.
struct SteeringEntry {
  HeadLocator locator;
  std::vector<double> direction;  // unit norm, length head_dim
  double sigma = 0.0;
  bool operator==(const SteeringEntry&) const = default;
};

struct Steering {
  std::vector<SteeringEntry> entries;
  double alpha = 0.0;
  bool operator==(const Steering&) const = default;
};

struct ForwardOptions {
  std::vector<HeadLocator> capture;
  const Steering* steering = nullptr;
};

struct ForwardResult {
  Matrix logits;                           // one row per new position
  std::map<HeadLocator, Matrix> captures;  // rows = new positions, cols = head_dim
};

/// Attention keys/values of an already-processed prefix. Only valid with the
/// steering it was built under.
struct KvCache {
  std::size_t length = 0;
  std::vector<std::vector<double>> keys;    // [layer * H + head] -> length x head_dim
  std::vector<std::vector<double>> values;  // same layout
  Steering steering;
};

/// Extension point for other model implementations: everything downstream
/// (probes, search, evaluation) talks to this interface only.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual const ModelConfig& config() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;
  virtual ForwardResult forward(std::span<const TokenId> tokens, const ForwardOptions& options = {},
                                const KvCache* prefix = nullptr) const = 0;
  virtual KvCache prefill(std::span<const TokenId> tokens, const Steering* steering) const = 0;
};

/// Decoder-only transformer: per layer
///   x <- x + sum_h Q_h Att_h(P_h x)        (causal softmax attention)
///   x <- x + W_out relu(W_in x + b_in) + b_out
/// then logits = U x. Computation is in double with fixed reduction order.
class Transformer final : public ModelBackend {
 public:
  explicit Transformer(Checkpoint checkpoint);

  const ModelConfig& config() const override { return checkpoint_.config; }
  const Tokenizer& tokenizer() const override { return *tokenizer_; }
  const Checkpoint& checkpoint() const { return checkpoint_; }

  ForwardResult forward(std::span<const TokenId> tokens, const ForwardOptions& options = {},
                        const KvCache* prefix = nullptr) const override;
  KvCache prefill(std::span<const TokenId> tokens, const Steering* steering) const override;

 private:
  struct HeadWeights {
    Matrix query, key, in_proj, out_proj;
  };
  struct LayerWeights {
    std::vector<HeadWeights> heads;
    Matrix w_in, w_out;
    std::vector<double> b_in, b_out;
  };

  ForwardResult run(std::span<const TokenId> tokens, const ForwardOptions& options, const KvCache* prefix,
                    KvCache* out_cache) const;

  Checkpoint checkpoint_;
  std::unique_ptr<Tokenizer> tokenizer_;
  Matrix embed_, unembed_;
  std::vector<LayerWeights> layers_;
};

/// Validates a steering set against the config (bounds, direction length).
void validate_steering(const ModelConfig& config, const Steering& steering);

std::vector<double> log_softmax(std::span<const double> logits);

/// Greedy decoding: argmax with ties to the lowest id, stopping after EOS.
std::vector<TokenId> generate_greedy(const ModelBackend& model, std::span<const TokenId> prompt, int max_new,
                                     const Steering* steering = nullptr);

/// Sum of log p(continuation[i] | prefix + continuation[:i]).
double sequence_loglik(const ModelBackend& model, std::span<const TokenId> prefix,
                       std::span<const TokenId> continuation, const Steering* steering = nullptr,
                       const KvCache* cache = nullptr);

std::vector<HeadLocator> all_heads(const ModelConfig& config);

}  // namespace pas
