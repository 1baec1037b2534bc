#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "pas/error.hpp"
#include "pas/prompts.hpp"
#include "pas/toy_model.hpp"
#include "pas/transformer.hpp"

using namespace pas;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

Steering random_steering(const ModelConfig& cfg, std::uint64_t seed, double alpha) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Steering s;
  s.alpha = alpha;
  for (const auto& loc : all_heads(cfg)) {
    SteeringEntry e;
    e.locator = loc;
    double norm = 0.0;
    e.direction.resize(cfg.head_dim);
    for (auto& v : e.direction) norm += (v = n(rng)) * v;
    for (auto& v : e.direction) v /= std::sqrt(norm);
    e.sigma = 0.5 + std::abs(n(rng));
    s.entries.push_back(e);
  }
  return s;
}

}  // namespace

TEST_SUITE("lm-core") {

TEST_CASE("checkpoint serialization round-trips") {
  const auto ck = fixtures::random_checkpoint({2, 2, 3, 6, 16, 4}, 5);
  const auto bytes = serialize_checkpoint(ck);
  CHECK(deserialize_checkpoint(bytes) == ck);
  const auto path = std::filesystem::temp_directory_path() / "pas_ck_rt.ckpt";
  save_checkpoint(ck, path);
  CHECK(load_checkpoint(path) == ck);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto bytes = serialize_checkpoint(fixtures::d2_fixture());
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(deserialize_checkpoint("xx"), Error);
}

TEST_CASE("forward matches the reference on the D=2 fixture") {
  const auto ck = fixtures::d2_fixture();
  const Transformer model(ck);
  const std::vector<TokenId> tokens{0, 2, 3, 4, 5, 2, 3};
  const auto r = model.forward(tokens);
  const auto ref = fixtures::reference_forward(ck, tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (int t = 0; t < 6; ++t) CHECK(std::abs(r.logits(i, t) - ref.logits[i][t]) < 1e-9);
  const std::vector<TokenId> cont{4, 5};
  CHECK(std::abs(sequence_loglik(model, tokens, cont) - fixtures::reference_loglik(ck, tokens, cont)) < 1e-9);
}

TEST_CASE("forward matches the reference with several layers and heads, steered") {
  const auto ck = fixtures::random_checkpoint({3, 2, 3, 6, 16, 5}, 17, 0.5);
  const Transformer model(ck);
  const std::vector<TokenId> tokens{0, 5, 4, 3, 2, 2};
  const Steering s = random_steering(ck.config, 3, 1.7);
  ForwardOptions opts;
  opts.steering = &s;
  opts.capture = all_heads(ck.config);
  const auto r = model.forward(tokens, opts);
  const auto ref = fixtures::reference_forward(ck, tokens, &s);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (int t = 0; t < 6; ++t) CHECK(std::abs(r.logits(i, t) - ref.logits[i][t]) < 1e-9);
  for (const auto& loc : opts.capture)
    for (std::size_t i = 0; i < tokens.size(); ++i)
      for (int d = 0; d < 3; ++d) CHECK(std::abs(r.captures.at(loc)(i, d) - ref.heads.at(loc)[i][d]) < 1e-9);
}

TEST_CASE("alpha = 0 is bit-identical to no steering") {
  const auto ck = fixtures::random_checkpoint({2, 2, 3, 6, 16, 4}, 8);
  const Transformer model(ck);
  const std::vector<TokenId> tokens{0, 2, 3, 5, 4};
  const Steering s = random_steering(ck.config, 4, 0.0);
  ForwardOptions opts;
  opts.steering = &s;
  CHECK(model.forward(tokens, opts).logits.data == model.forward(tokens).logits.data);
}

TEST_CASE("steering shifts the steered head's capture by alpha * sigma * direction") {
  const auto ck = fixtures::random_checkpoint({2, 2, 3, 6, 16, 4}, 8);
  const Transformer model(ck);
  const std::vector<TokenId> tokens{0, 2, 3, 5, 4};
  Steering s = random_steering(ck.config, 4, 2.5);
  s.entries.resize(1);
  s.entries[0].locator = {0, 1};
  ForwardOptions base_opts, steer_opts;
  base_opts.capture = steer_opts.capture = {{0, 1}};
  steer_opts.steering = &s;
  const auto a = model.forward(tokens, base_opts).captures.at({0, 1});
  const auto b = model.forward(tokens, steer_opts).captures.at({0, 1});
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (int d = 0; d < 3; ++d)
      CHECK(b(i, d) == doctest::Approx(a(i, d) + 2.5 * s.entries[0].sigma * s.entries[0].direction[d]).epsilon(1e-12));
  // Shapes are unchanged.
  CHECK(model.forward(tokens, steer_opts).logits.rows == tokens.size());
}

TEST_CASE("prefix cache reproduces the full forward") {
  const auto ck = fixtures::random_checkpoint({2, 2, 3, 6, 16, 4}, 9);
  const Transformer model(ck);
  const std::vector<TokenId> all{0, 2, 3, 5, 4, 2, 3};
  const Steering s = random_steering(ck.config, 2, 0.8);
  for (const Steering* steering : {static_cast<const Steering*>(nullptr), &s}) {
    ForwardOptions opts;
    opts.steering = steering;
    const auto full = model.forward(all, opts);
    const std::vector<TokenId> head(all.begin(), all.begin() + 3), tail(all.begin() + 3, all.end());
    const KvCache cache = model.prefill(head, steering);
    const auto part = model.forward(tail, opts, &cache);
    for (std::size_t i = 0; i < tail.size(); ++i)
      for (int t = 0; t < 6; ++t) CHECK(std::abs(part.logits(i, t) - full.logits(i + 3, t)) < 1e-12);
  }
  // A cache built unsteered cannot serve a steered call.
  const KvCache cache = model.prefill(std::vector<TokenId>{0, 2}, nullptr);
  ForwardOptions opts;
  opts.steering = &s;
  CHECK(code_of([&] { model.forward(std::vector<TokenId>{3}, opts, &cache); }) == ErrorCode::ValueError);
}

TEST_CASE("forward errors") {
  const Transformer model(fixtures::d2_fixture());
  CHECK(code_of([&] { model.forward(std::vector<TokenId>{}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { model.forward(std::vector<TokenId>{0, 9}); }) == ErrorCode::VocabError);
  std::vector<TokenId> too_long(33, 2);
  CHECK(code_of([&] { model.forward(too_long); }) == ErrorCode::ValueError);
  Steering bad;
  bad.alpha = 1.0;
  bad.entries.push_back({{1, 0}, {1.0, 0.0}, 1.0});
  ForwardOptions opts;
  opts.steering = &bad;
  CHECK(code_of([&] { model.forward(std::vector<TokenId>{0, 2}, opts); }) == ErrorCode::LocatorError);
  CHECK(code_of([&] { sequence_loglik(model, std::vector<TokenId>{0}, std::vector<TokenId>{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("greedy decoding breaks ties toward the lowest id and stops at EOS") {
  auto ck = fixtures::d2_fixture();
  std::vector<double> flat(6, 0.0);
  fixtures::ScriptedBackend backend(ck, flat);
  backend.next[2] = {0, 0, 1, 1, 0, 0};  // tie between ids 2 and 3
  backend.next[3] = {0, 5, 0, 0, 0, 0};  // EOS
  const std::vector<TokenId> prompt{0, 4};
  const auto out = generate_greedy(backend, prompt, 10);
  REQUIRE(out.size() == 4);
  CHECK(out[2] == 2);
  CHECK(out[3] == 1);
}

TEST_CASE("log_softmax normalizes") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const auto y = log_softmax(x);
  double z = 0.0;
  for (double v : y) z += std::exp(v);
  CHECK(z == doctest::Approx(1.0));
}

TEST_CASE("tokenizer") {
  const auto toy = build_toy_persona_lm(TraitProfile{{3, 3, 3, 3, 3}}, toy_config(2, 8, 8), 1);
  const Tokenizer tok(toy.checkpoint.vocab);
  const Item item{"i1", "I love parties", TraitDimension::Extraversion, Keying::Positive};
  const auto parts = split_template(kMcTemplate);
  const auto ids = tok.encode_prompt({"", parts.before, &item, parts.after});
  CHECK(ids.front() == tok.bos());
  CHECK(ids[2] == *tok.marker(TraitDimension::Extraversion, Keying::Positive));
  // Template segments and option strings survive a decode.
  const auto text = tok.decode(ids);
  CHECK(text.find("Please choose from the following options") != std::string::npos);
  CHECK(tok.option_tokens(LikertOption::VeryAccurate).size() == 1);
  CHECK(tok.decode(tok.option_tokens(LikertOption::Neither)) == "Neither Accurate Nor Inaccurate");
  // Unknown words hash to the same bucket every time.
  CHECK(tok.encode_text("zebra") == tok.encode_text("zebra"));
  CHECK(tok.encode_text("Yes").size() == 1);
}

TEST_CASE("templates") {
  CHECK(render_template(kProbeTemplate, "I am calm") ==
        "Question: Given a statement of you: 'I am calm', Do you agree? Answer: ");
  CHECK(render_template(kMcTemplate, "X").rfind("Answer: ") == render_template(kMcTemplate, "X").size() - 8);
  CHECK_THROWS_AS(split_template("no slot"), Error);
}

}
