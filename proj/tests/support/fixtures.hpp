#pragma once

// Shared test fixtures: a tiny hand-set checkpoint, an independent
// reference forward pass, and a scripted backend.

#include <cmath>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pas/checkpoint.hpp"
#include "pas/transformer.hpp"

namespace fixtures {

using pas::Checkpoint;
using pas::TokenId;

inline pas::Vocabulary tiny_vocab() {
  pas::Vocabulary v;
  v.tokens = {"<bos>", "<eos>", "a", "b", "c", "d"};
  v.roles = {{"bos", 0}, {"eos", 1}};
  return v;
}

/// Fills every tensor with seeded N(0, scale) values.
inline Checkpoint random_checkpoint(const pas::ModelConfig& config, std::uint64_t seed, double scale = 0.7) {
  Checkpoint ck = pas::allocate_checkpoint(config, tiny_vocab());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& [name, t] : ck.tensors)
    for (auto& v : t.data) v = static_cast<float>(n(rng));
  return ck;
}

/// 1 layer, 1 head, D = 2, vocab 6, MLP width 3.
inline Checkpoint d2_fixture() {
  pas::ModelConfig c{1, 1, 2, 6, 32, 3};
  return random_checkpoint(c, 20240601);
}

/// Straight transcription of the model equations with no shared code:
///   x_0 = E[t];  per layer  x += sum_h Q_h softmax_causal((Wq x)(Wk x)^T / sqrt(D)) (P_h x)
///                          x += W_out relu(W_in x + b_in) + b_out
///   logits = U x
/// Steering adds alpha * sigma * dir to the selected head outputs.
struct Reference {
  std::vector<std::vector<double>> logits;
  std::map<pas::HeadLocator, std::vector<std::vector<double>>> heads;
};

inline double w(const Checkpoint& ck, const std::string& name, std::size_t r, std::size_t c) {
  const auto& t = ck.tensors.at(name);
  return static_cast<double>(t.data[r * static_cast<std::size_t>(t.shape[1]) + c]);
}

inline double w1(const Checkpoint& ck, const std::string& name, std::size_t i) {
  return static_cast<double>(ck.tensors.at(name).data[i]);
}

inline Reference reference_forward(const Checkpoint& ck, const std::vector<TokenId>& tokens,
                                   const pas::Steering* steering = nullptr) {
  const auto& cfg = ck.config;
  const std::size_t T = tokens.size(), M = cfg.model_dim(), D = cfg.head_dim, V = cfg.vocab_size;
  std::vector<std::vector<double>> x(T, std::vector<double>(M));
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t m = 0; m < M; ++m) x[i][m] = w(ck, "embed", tokens[i], m);

  Reference ref;
  for (int l = 0; l < cfg.n_layers; ++l) {
    std::vector<std::vector<double>> add(T, std::vector<double>(M, 0.0));
    for (int h = 0; h < cfg.n_heads; ++h) {
      auto proj = [&](const char* what) {
        std::vector<std::vector<double>> out(T, std::vector<double>(D, 0.0));
        for (std::size_t i = 0; i < T; ++i)
          for (std::size_t d = 0; d < D; ++d)
            for (std::size_t m = 0; m < M; ++m) out[i][d] += w(ck, pas::head_tensor_name(l, h, what), d, m) * x[i][m];
        return out;
      };
      const auto q = proj("query"), k = proj("key"), v = proj("in_proj");
      std::vector<std::vector<double>> o(T, std::vector<double>(D, 0.0));
      for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> s(i + 1);
        double mx = -INFINITY;
        for (std::size_t j = 0; j <= i; ++j) {
          double dot = 0.0;
          for (std::size_t d = 0; d < D; ++d) dot += q[i][d] * k[j][d];
          s[j] = dot / std::sqrt(static_cast<double>(D));
          mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (auto& e : s) z += (e = std::exp(e - mx));
        for (std::size_t j = 0; j <= i; ++j)
          for (std::size_t d = 0; d < D; ++d) o[i][d] += s[j] / z * v[j][d];
      }
      if (steering)
        for (const auto& e : steering->entries)
          if (e.locator == pas::HeadLocator{l, h})
            for (auto& row : o)
              for (std::size_t d = 0; d < D; ++d) row[d] += steering->alpha * e.sigma * e.direction[d];
      ref.heads[{l, h}] = o;
      for (std::size_t i = 0; i < T; ++i)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t d = 0; d < D; ++d) add[i][m] += w(ck, pas::head_tensor_name(l, h, "out_proj"), m, d) * o[i][d];
    }
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t m = 0; m < M; ++m) x[i][m] += add[i][m];
    const std::string wi = pas::mlp_tensor_name(l, "w_in"), bi = pas::mlp_tensor_name(l, "b_in"),
                      wo = pas::mlp_tensor_name(l, "w_out"), bo = pas::mlp_tensor_name(l, "b_out");
    for (std::size_t i = 0; i < T; ++i) {
      std::vector<double> hidden(cfg.mlp_dim);
      for (int u = 0; u < cfg.mlp_dim; ++u) {
        double a = w1(ck, bi, u);
        for (std::size_t m = 0; m < M; ++m) a += w(ck, wi, u, m) * x[i][m];
        hidden[u] = a > 0.0 ? a : 0.0;
      }
      std::vector<double> out(M);
      for (std::size_t m = 0; m < M; ++m) {
        double a = w1(ck, bo, m);
        for (int u = 0; u < cfg.mlp_dim; ++u) a += w(ck, wo, m, u) * hidden[u];
        out[m] = a;
      }
      for (std::size_t m = 0; m < M; ++m) x[i][m] += out[m];
    }
  }
  ref.logits.assign(T, std::vector<double>(V, 0.0));
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t t = 0; t < V; ++t)
      for (std::size_t m = 0; m < M; ++m) ref.logits[i][t] += w(ck, "unembed", t, m) * x[i][m];
  return ref;
}

inline double reference_loglik(const Checkpoint& ck, const std::vector<TokenId>& prefix,
                               const std::vector<TokenId>& continuation) {
  std::vector<TokenId> seq = prefix;
  seq.insert(seq.end(), continuation.begin(), continuation.end());
  const auto ref = reference_forward(ck, seq);
  double total = 0.0;
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const auto& row = ref.logits[prefix.size() - 1 + i];
    double mx = -INFINITY;
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    total += row[continuation[i]] - mx - std::log(z);
  }
  return total;
}

/// Backend whose next-token logits are scripted: `next` maps the number of
/// tokens seen so far to a logit row; anything unscripted gets `fallback`.
class ScriptedBackend final : public pas::ModelBackend {
 public:
  ScriptedBackend(pas::Checkpoint vocab_source, std::vector<double> fallback)
      : ck_(std::move(vocab_source)), tok_(ck_.vocab), fallback_(std::move(fallback)) {}

  std::map<std::size_t, std::vector<double>> next;

  const pas::ModelConfig& config() const override { return ck_.config; }
  const pas::Tokenizer& tokenizer() const override { return tok_; }
  pas::ForwardResult forward(std::span<const TokenId> tokens, const pas::ForwardOptions&,
                             const pas::KvCache* prefix) const override {
    const std::size_t base = prefix ? prefix->length : 0;
    pas::ForwardResult r;
    r.logits = pas::Matrix(tokens.size(), fallback_.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto it = next.find(base + i + 1);
      const auto& row = it == next.end() ? fallback_ : it->second;
      std::copy(row.begin(), row.end(), r.logits.row(i));
    }
    return r;
  }
  pas::KvCache prefill(std::span<const TokenId> tokens, const pas::Steering* steering) const override {
    pas::KvCache c;
    c.length = tokens.size();
    if (steering) c.steering = *steering;
    return c;
  }

 private:
  pas::Checkpoint ck_;
  pas::Tokenizer tok_;
  std::vector<double> fallback_;
};

}  // namespace fixtures
