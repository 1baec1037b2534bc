#include "pas/toy_model.hpp"

#include <array>
#include <cmath>
#include <random>

#include "pas/error.hpp"
#include "pas/prompts.hpp"
#include "pas/tokenizer.hpp"
#include "pas/transformer.hpp"

namespace pas {

namespace {

// Residual-stream channel layout.
constexpr int kBias = 0;
constexpr int kMarker = 1;         // 10 one-hot (trait, keying) channels at the marker token
constexpr int kCopied = 11;        // the same 10 channels copied forward by layer 0
constexpr int kSuffix = 21;        // +1 Yes, -1 No
constexpr int kProduct = 22;       // 5 channels: suffix * keying for the current trait
constexpr int kLevel = 27;         // 5 channels: keyed trait level minus 3
constexpr int kAgreement = 32;     // response-scale agreement minus 3
constexpr int kIsOption = 33;
constexpr int kIsMarker = 34;
constexpr int kHasSuffix = 35;
constexpr int kNoise = 36;         // first free channel
constexpr int kMinNoise = 4;
constexpr int kMarkerCount = 10;
constexpr int kMlpUnits = 2 * kMarkerCount;
constexpr int kWordBuckets = 48;

constexpr double kSharpness = 40.0;  // attention logit for the targeted key
constexpr double kGate = 100.0;      // ReLU gating constant, larger than any channel magnitude
constexpr double kOptionScale = 2.0;
constexpr double kOffScale = 200.0;
constexpr double kRandomWeight = 0.3;
constexpr double kRandomOut = 0.1;
constexpr double kBandNoise = 0.05;

int marker_slot(TraitDimension d, Keying k) { return 2 * static_cast<int>(trait_index(d)) + (k == Keying::Positive ? 0 : 1); }

struct Builder {
  Checkpoint ck;
  int dm, D, H;
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};

  float& at(const std::string& name, std::size_t r, std::size_t c) {
    Tensor& t = ck.tensors.at(name);
    return t.data[r * static_cast<std::size_t>(t.shape[1]) + c];
  }
  float& at1(const std::string& name, std::size_t i) { return ck.tensors.at(name).data[i]; }

  void random_head(int l, int h) {
    for (int r = 0; r < D; ++r)
      for (int c = kNoise; c < dm; ++c) {
        at(head_tensor_name(l, h, "query"), r, c) = static_cast<float>(kRandomWeight * normal(rng));
        at(head_tensor_name(l, h, "key"), r, c) = static_cast<float>(kRandomWeight * normal(rng));
        at(head_tensor_name(l, h, "in_proj"), r, c) = static_cast<float>(kRandomWeight * normal(rng));
      }
    for (int r = kNoise; r < dm; ++r)
      for (int c = 0; c < D; ++c)
        at(head_tensor_name(l, h, "out_proj"), r, c) = static_cast<float>(kRandomOut * normal(rng));
  }

  // Attend from every position to keys where `channel` is set.
  void focus(int l, int h, int channel) {
    at(head_tensor_name(l, h, "query"), 0, kBias) = 1.0f;
    at(head_tensor_name(l, h, "key"), 0, channel) = static_cast<float>(kSharpness * std::sqrt(static_cast<double>(D)));
  }
};

}  // namespace

ModelConfig toy_config(int n_layers, int n_heads, int head_dim) {
  ModelConfig c;
  c.n_layers = n_layers;
  c.n_heads = n_heads;
  c.head_dim = head_dim;
  c.max_seq_len = 2048;
  c.mlp_dim = 32;
  c.vocab_size = 1;
  return c;
}

LikertOption toy_expected_option(const TraitProfile& persona, TraitDimension trait, Keying keying) {
  const double target = keying == Keying::Positive ? persona[trait] : 6.0 - persona[trait];
  LikertOption best = LikertOption::VeryAccurate;
  double best_d = 1e300;
  for (auto o : kAnswerOptions) {
    const double d = std::abs(response_value(o) - target);
    if (d < best_d) {
      best_d = d;
      best = o;
    }
  }
  return best;
}

ToyModel build_toy_persona_lm(const TraitProfile& persona, ModelConfig config, std::uint64_t seed) {
  const int L = config.n_layers, H = config.n_heads, D = config.head_dim;
  if (L < 2 || H < 4 || D < 1) fail(ErrorCode::ConfigError, "toy model needs at least 2 layers and 4 heads");
  const int dm = D * H;
  if (dm < kNoise + kMinNoise)
    fail(ErrorCode::ConfigError, "model_dim " + std::to_string(dm) + " below the toy minimum " +
                                     std::to_string(kNoise + kMinNoise));
  const int n_copy = (kMarkerCount + D - 1) / D;
  if (n_copy > H) fail(ErrorCode::ConfigError, "layer 0 cannot hold the marker copy heads");
  // Every head above layer 0 is a band head; traits are assigned round-robin.
  const int band_slots = (L - 1) * H;
  if (band_slots < static_cast<int>(kTraitCount)) fail(ErrorCode::ConfigError, "fewer than 5 heads above layer 0");
  std::array<int, kTraitCount> heads_per_trait{};
  for (int slot = 0; slot < band_slots; ++slot) ++heads_per_trait[slot % kTraitCount];
  if (config.mlp_dim < kMlpUnits) fail(ErrorCode::ConfigError, "mlp_dim below 20");
  for (double p : persona.mean)
    if (!(p >= 1.0 && p <= 5.0)) fail(ErrorCode::ValueError, "persona levels must lie in [1, 5]");

  // Vocabulary.
  Vocabulary vocab;
  auto add = [&](std::string s, std::string role = {}) {
    const auto id = static_cast<TokenId>(vocab.tokens.size());
    vocab.tokens.push_back(std::move(s));
    if (!role.empty()) vocab.roles[role] = id;
    return id;
  };
  add("<bos>", "bos");
  add("<eos>", "eos");
  add("Yes", "yes");
  add("No", "no");
  for (auto o : kAnswerOptions) add(std::string(option_text(o)), "option." + std::to_string(response_value(o)));
  for (auto d : kAllTraits)
    for (auto k : {Keying::Positive, Keying::Negative})
      add("<marker:" + std::string(trait_name(d)) + (k == Keying::Positive ? ":+>" : ":->"), Tokenizer::marker_role(d, k));
  const auto mc = split_template(kMcTemplate);
  const auto probe = split_template(kProbeTemplate);
  add(std::string(mc.before), "segment.mc_before");
  add(std::string(mc.after), "segment.mc_after");
  add(std::string(probe.before), "segment.probe_before");
  add(std::string(probe.after), "segment.probe_after");
  for (int w = 0; w < kWordBuckets; ++w) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "<w:%02d>", w);
    add(buf);
  }
  config.vocab_size = static_cast<int>(vocab.tokens.size());

  Builder b{allocate_checkpoint(config, vocab), dm, D, H, std::mt19937_64(seed)};
  const auto role = [&](const std::string& r) { return vocab.roles.at(r); };

  // Embeddings.
  for (TokenId t = 0; t < config.vocab_size; ++t) {
    b.at("embed", t, kBias) = 1.0f;
    for (auto d : kAllTraits) b.at("embed", t, kLevel + trait_index(d)) = static_cast<float>(persona[d] - 3.0);
    const bool answer_word = t == role("yes") || t == role("no");
    for (int c = kNoise; c < dm; ++c) b.at("embed", t, c) = answer_word ? 0.0f : static_cast<float>(b.normal(b.rng));
  }
  b.at("embed", role("yes"), kSuffix) = 1.0f;
  b.at("embed", role("no"), kSuffix) = -1.0f;
  b.at("embed", role("yes"), kHasSuffix) = 1.0f;
  b.at("embed", role("no"), kHasSuffix) = 1.0f;
  for (auto o : kAnswerOptions) b.at("embed", role("option." + std::to_string(response_value(o))), kIsOption) = 1.0f;
  for (auto d : kAllTraits)
    for (auto k : {Keying::Positive, Keying::Negative}) {
      const TokenId t = role(Tokenizer::marker_role(d, k));
      b.at("embed", t, kMarker + marker_slot(d, k)) = 1.0f;
      b.at("embed", t, kIsMarker) = 1.0f;
    }

  ToyModel model;
  model.truth.persona = persona;
  model.truth.agreement_gain = 1.0;

  // Layer 0: marker copy heads, then random heads.
  for (int h = 0; h < H; ++h) {
    if (h < n_copy) {
      b.focus(0, h, kIsMarker);
      for (int i = 0; i < D && h * D + i < kMarkerCount; ++i) {
        b.at(head_tensor_name(0, h, "in_proj"), i, kMarker + h * D + i) = 1.0f;
        b.at(head_tensor_name(0, h, "out_proj"), kCopied + h * D + i, i) = 1.0f;
      }
      model.truth.copy_heads.push_back({0, h});
    } else {
      b.random_head(0, h);
    }
  }

  // Layers 1..L-1: trait band heads.
  int slot = 0;
  for (int l = 1; l < L; ++l) {
    for (int h = 0; h < H; ++h, ++slot) {
      const TraitDimension trait = kAllTraits[slot % kTraitCount];
      const double per_head_gain = model.truth.agreement_gain / heads_per_trait[trait_index(trait)];
      std::vector<double> u(D);
      double norm = 0.0;
      for (auto& v : u) {
        v = b.normal(b.rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      std::vector<float> uf(D);
      for (int i = 0; i < D; ++i) uf[i] = static_cast<float>(u[i] / norm);
      // Planted direction is the stored float vector, renormalised in double.
      double nf = 0.0;
      for (float v : uf) nf += static_cast<double>(v) * v;
      nf = std::sqrt(nf);
      std::vector<double> planted(D);
      for (int i = 0; i < D; ++i) planted[i] = uf[i] / nf;

      b.focus(l, h, kHasSuffix);
      const std::string P = head_tensor_name(l, h, "in_proj");
      const std::string Q = head_tensor_name(l, h, "out_proj");
      for (int i = 0; i < D; ++i) b.at(P, i, kProduct + trait_index(trait)) = uf[i];
      // Small read-out of unrelated channels, kept orthogonal to the planted direction.
      for (int c = kNoise; c < dm; ++c) {
        std::vector<double> r(D);
        double dot = 0.0;
        for (int i = 0; i < D; ++i) {
          r[i] = kBandNoise * b.normal(b.rng);
          dot += r[i] * planted[i];
        }
        for (int i = 0; i < D; ++i) b.at(P, i, c) = static_cast<float>(r[i] - dot * planted[i]);
      }
      for (int i = 0; i < D; ++i)
        b.at(Q, kLevel + trait_index(trait), i) = static_cast<float>(per_head_gain * uf[i]);

      model.truth.planted[{l, h}] = planted;
      model.truth.band_trait[{l, h}] = trait;
    }
  }

  // Layer 0 MLP: product[trait] = suffix * keying when the copied marker names that trait.
  // Last MLP: agreement = keying * level[trait] for the copied marker.
  auto gated_product = [&](int layer, int input, auto output_of) {
    const std::string w_in = mlp_tensor_name(layer, "w_in"), b_in = mlp_tensor_name(layer, "b_in"),
                      w_out = mlp_tensor_name(layer, "w_out");
    for (auto d : kAllTraits)
      for (auto k : {Keying::Positive, Keying::Negative}) {
        const int j = marker_slot(d, k);
        const int in = input < 0 ? kLevel + static_cast<int>(trait_index(d)) : input;
        const int out = output_of(d);
        const float sign = k == Keying::Positive ? 1.0f : -1.0f;
        for (int u = 0; u < 2; ++u) {
          const int unit = 2 * j + u;
          b.at(w_in, unit, in) = u == 0 ? 1.0f : -1.0f;
          b.at(w_in, unit, kCopied + j) = static_cast<float>(kGate);
          b.at1(b_in, unit) = static_cast<float>(-kGate);
          b.at(w_out, out, unit) = u == 0 ? sign : -sign;
        }
      }
  };
  gated_product(0, kSuffix, [](TraitDimension d) { return kProduct + static_cast<int>(trait_index(d)); });
  gated_product(L - 1, -1, [](TraitDimension) { return kAgreement; });

  // Unembedding: option logit = s * (2 r (3 + A) - r^2), a concave parabola in
  // the option's response value r peaking at the agreement.
  for (TokenId t = 0; t < config.vocab_size; ++t) b.at("unembed", t, kBias) = static_cast<float>(-kOffScale);
  for (auto o : kAnswerOptions) {
    const double r = response_value(o);
    const TokenId t = role("option." + std::to_string(static_cast<int>(r)));
    b.at("unembed", t, kBias) = static_cast<float>(kOptionScale * (6.0 * r - r * r));
    b.at("unembed", t, kAgreement) = static_cast<float>(2.0 * kOptionScale * r);
  }
  b.at("unembed", role("eos"), kIsOption) = static_cast<float>(2.0 * kOffScale);

  model.checkpoint = std::move(b.ck);

  // Build-time check: unsteered answers are the nearest option for every (trait, keying).
  const Transformer tf(model.checkpoint);
  for (auto d : kAllTraits)
    for (auto k : {Keying::Positive, Keying::Negative}) {
      const Item probe_item{"check", "I check my work", d, k};
      const auto tokens = tf.tokenizer().encode_prompt({"", mc.before, &probe_item, mc.after});
      const auto r = tf.forward(tokens);
      const double* last = r.logits.row(r.logits.rows - 1);
      TokenId best = 0;
      for (TokenId t = 1; t < config.vocab_size; ++t)
        if (last[t] > last[best]) best = t;
      const double target = k == Keying::Positive ? persona[d] : 6.0 - persona[d];
      const auto& s = vocab.tokens[best];
      const auto chosen = parse_option_text(s);
      const bool half_tie = std::abs(std::abs(target - std::round(target)) - 0.5) < 1e-9;
      if (!chosen || (!half_tie && *chosen != toy_expected_option(persona, d, k)) ||
          std::abs(response_value(*chosen) - target) > 0.5 + 1e-9)
        fail(ErrorCode::ConfigError, "toy model construction check failed for " + std::string(trait_name(d)));
    }
  return model;
}

}  // namespace pas
