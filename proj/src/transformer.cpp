#include "pas/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pas/error.hpp"

namespace pas {

namespace {

Matrix to_matrix(const Tensor& t) {
  Matrix m(static_cast<std::size_t>(t.shape.at(0)), t.shape.size() > 1 ? static_cast<std::size_t>(t.shape[1]) : 1);
  for (std::size_t i = 0; i < t.data.size(); ++i) m.data[i] = static_cast<double>(t.data[i]);
  return m;
}

std::vector<double> to_vector(const Tensor& t) { return {t.data.begin(), t.data.end()}; }

// out[r] = sum_c m(r, c) * v[c], accumulated left to right.
void matvec(const Matrix& m, const double* v, double* out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * v[c];
    out[r] = s;
  }
}

void matvec_add(const Matrix& m, const double* v, double* out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * v[c];
    out[r] += s;
  }
}

}  // namespace

std::vector<HeadLocator> all_heads(const ModelConfig& config) {
  std::vector<HeadLocator> out;
  for (int l = 0; l < config.n_layers; ++l)
    for (int h = 0; h < config.n_heads; ++h) out.push_back({l, h});
  return out;
}

void validate_steering(const ModelConfig& config, const Steering& steering) {
  for (const auto& e : steering.entries) {
    if (e.locator.layer < 0 || e.locator.layer >= config.n_layers || e.locator.head < 0 ||
        e.locator.head >= config.n_heads)
      fail(ErrorCode::LocatorError, "steered head (" + std::to_string(e.locator.layer) + "," +
                                        std::to_string(e.locator.head) + ") out of bounds");
    if (static_cast<int>(e.direction.size()) != config.head_dim)
      fail(ErrorCode::ValueError, "steering direction length differs from head_dim");
  }
}

Transformer::Transformer(Checkpoint checkpoint) : checkpoint_(std::move(checkpoint)) {
  checkpoint_.validate();
  tokenizer_ = std::make_unique<Tokenizer>(checkpoint_.vocab);
  const auto& c = checkpoint_.config;
  embed_ = to_matrix(checkpoint_.tensor("embed"));
  unembed_ = to_matrix(checkpoint_.tensor("unembed"));
  layers_.resize(c.n_layers);
  for (int l = 0; l < c.n_layers; ++l) {
    auto& L = layers_[l];
    for (int h = 0; h < c.n_heads; ++h) {
      L.heads.push_back({to_matrix(checkpoint_.tensor(head_tensor_name(l, h, "query"))),
                         to_matrix(checkpoint_.tensor(head_tensor_name(l, h, "key"))),
                         to_matrix(checkpoint_.tensor(head_tensor_name(l, h, "in_proj"))),
                         to_matrix(checkpoint_.tensor(head_tensor_name(l, h, "out_proj")))});
    }
    L.w_in = to_matrix(checkpoint_.tensor(mlp_tensor_name(l, "w_in")));
    L.w_out = to_matrix(checkpoint_.tensor(mlp_tensor_name(l, "w_out")));
    L.b_in = to_vector(checkpoint_.tensor(mlp_tensor_name(l, "b_in")));
    L.b_out = to_vector(checkpoint_.tensor(mlp_tensor_name(l, "b_out")));
  }
}

ForwardResult Transformer::forward(std::span<const TokenId> tokens, const ForwardOptions& options,
                                   const KvCache* prefix) const {
  return run(tokens, options, prefix, nullptr);
}

KvCache Transformer::prefill(std::span<const TokenId> tokens, const Steering* steering) const {
  KvCache cache;
  ForwardOptions opts;
  opts.steering = steering;
  run(tokens, opts, nullptr, &cache);
  return cache;
}

ForwardResult Transformer::run(std::span<const TokenId> tokens, const ForwardOptions& options, const KvCache* prefix,
                               KvCache* out_cache) const {
  const auto& cfg = checkpoint_.config;
  const std::size_t H = cfg.n_heads, D = cfg.head_dim, DM = cfg.model_dim();
  const std::size_t p = prefix ? prefix->length : 0;
  const std::size_t n = tokens.size();
  if (n == 0) fail(ErrorCode::EmptyInput, "forward called with no tokens");
  if (p + n > static_cast<std::size_t>(cfg.max_seq_len))
    fail(ErrorCode::ValueError, "sequence length " + std::to_string(p + n) + " exceeds max_seq_len " +
                                    std::to_string(cfg.max_seq_len));
  for (TokenId t : tokens)
    if (t < 0 || t >= cfg.vocab_size) fail(ErrorCode::VocabError, "token id " + std::to_string(t) + " out of vocabulary");
  for (const auto& loc : options.capture)
    if (loc.layer < 0 || loc.layer >= cfg.n_layers || loc.head < 0 || loc.head >= cfg.n_heads)
      fail(ErrorCode::LocatorError,
           "capture head (" + std::to_string(loc.layer) + "," + std::to_string(loc.head) + ") out of bounds");

  const Steering none;
  const Steering& steering = options.steering ? *options.steering : none;
  validate_steering(cfg, steering);
  if (prefix && !(prefix->steering == steering))
    fail(ErrorCode::ValueError, "prefix cache was built under a different steering");

  // Per-head additive shift alpha * sigma * direction.
  std::vector<std::vector<double>> shift(cfg.n_layers * H);
  for (const auto& e : steering.entries) {
    auto& s = shift[e.locator.layer * H + e.locator.head];
    if (s.empty()) s.assign(D, 0.0);
    for (std::size_t d = 0; d < D; ++d) s[d] += steering.alpha * e.sigma * e.direction[d];
  }

  ForwardResult result;
  std::vector<char> capture_flag(cfg.n_layers * H, 0);
  for (const auto& loc : options.capture) {
    capture_flag[loc.layer * H + loc.head] = 1;
    result.captures.emplace(loc, Matrix(n, D));
  }

  if (out_cache) {
    out_cache->length = p + n;
    out_cache->keys.assign(cfg.n_layers * H, {});
    out_cache->values.assign(cfg.n_layers * H, {});
    out_cache->steering = steering;
  }

  Matrix x(n, DM);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(embed_.row(tokens[i]), DM, x.row(i));

  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  std::vector<double> q(D), out(D), weights(p + n);
  Matrix keys(p + n, D), values(p + n, D);

  for (int l = 0; l < cfg.n_layers; ++l) {
    const auto& L = layers_[l];
    Matrix delta(n, DM);
    for (std::size_t h = 0; h < H; ++h) {
      const auto& W = L.heads[h];
      const std::size_t idx = l * H + h;
      if (prefix) {
        std::copy(prefix->keys[idx].begin(), prefix->keys[idx].end(), keys.data.begin());
        std::copy(prefix->values[idx].begin(), prefix->values[idx].end(), values.data.begin());
      }
      for (std::size_t i = 0; i < n; ++i) {
        matvec(W.key, x.row(i), keys.row(p + i));
        matvec(W.in_proj, x.row(i), values.row(p + i));
      }
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = p + i;
        matvec(W.query, x.row(i), q.data());
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= a; ++j) {
          const double* k = keys.row(j);
          double s = 0.0;
          for (std::size_t d = 0; d < D; ++d) s += q[d] * k[d];
          weights[j] = s * scale;
          mx = std::max(mx, weights[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j <= a; ++j) {
          weights[j] = std::exp(weights[j] - mx);
          z += weights[j];
        }
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t j = 0; j <= a; ++j) {
          const double* v = values.row(j);
          for (std::size_t d = 0; d < D; ++d) out[d] += weights[j] * v[d];
        }
        for (std::size_t d = 0; d < D; ++d) out[d] /= z;
        if (!shift[idx].empty())
          for (std::size_t d = 0; d < D; ++d) out[d] += shift[idx][d];
        if (capture_flag[idx]) std::copy(out.begin(), out.end(), result.captures.at({l, static_cast<int>(h)}).row(i));
        matvec_add(W.out_proj, out.data(), delta.row(i));
      }
      if (out_cache) {
        out_cache->keys[idx].assign(keys.data.begin(), keys.data.begin() + (p + n) * D);
        out_cache->values[idx].assign(values.data.begin(), values.data.begin() + (p + n) * D);
      }
    }
    for (std::size_t i = 0; i < n * DM; ++i) x.data[i] += delta.data[i];

    std::vector<double> hidden(L.w_in.rows);
    for (std::size_t i = 0; i < n; ++i) {
      matvec(L.w_in, x.row(i), hidden.data());
      for (std::size_t u = 0; u < hidden.size(); ++u) hidden[u] = std::max(0.0, hidden[u] + L.b_in[u]);
      matvec_add(L.w_out, hidden.data(), x.row(i));
      double* xr = x.row(i);
      for (std::size_t d = 0; d < DM; ++d) xr[d] += L.b_out[d];
    }
  }

  result.logits = Matrix(n, cfg.vocab_size);
  for (std::size_t i = 0; i < n; ++i) matvec(unembed_, x.row(i), result.logits.row(i));
  return result;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

std::vector<TokenId> generate_greedy(const ModelBackend& model, std::span<const TokenId> prompt, int max_new,
                                     const Steering* steering) {
  if (prompt.empty()) fail(ErrorCode::EmptyInput, "empty prompt");
  std::vector<TokenId> seq(prompt.begin(), prompt.end());
  const auto eos = model.tokenizer().eos();
  ForwardOptions opts;
  opts.steering = steering;
  for (int step = 0; step < max_new; ++step) {
    const ForwardResult r = model.forward(seq, opts);
    const double* last = r.logits.row(r.logits.rows - 1);
    TokenId best = 0;
    for (TokenId t = 1; t < static_cast<TokenId>(r.logits.cols); ++t)
      if (last[t] > last[best]) best = t;
    seq.push_back(best);
    if (eos && best == *eos) break;
  }
  if (max_new <= 0) {
    // Still validate inputs the same way forward would.
    ForwardOptions check;
    check.steering = steering;
    (void)model.forward(seq, check);
  }
  return seq;
}

double sequence_loglik(const ModelBackend& model, std::span<const TokenId> prefix,
                       std::span<const TokenId> continuation, const Steering* steering, const KvCache* cache) {
  if (continuation.empty()) fail(ErrorCode::EmptyInput, "empty continuation");
  if (prefix.empty()) fail(ErrorCode::EmptyInput, "empty prefix");
  std::vector<TokenId> seq(prefix.begin(), prefix.end());
  seq.insert(seq.end(), continuation.begin(), continuation.end());
  ForwardOptions opts;
  opts.steering = steering;
  const ForwardResult r = model.forward(seq, opts, cache);
  double total = 0.0;
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const std::size_t row = prefix.size() - 1 + i;
    total += log_softmax(r.logits.row_span(row))[continuation[i]];
  }
  return total;
}

}  // namespace pas
