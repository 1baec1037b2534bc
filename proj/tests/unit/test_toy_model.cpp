#include <doctest.h>

#include "pas/error.hpp"
#include "pas/evaluation.hpp"
#include "pas/toy_model.hpp"

using namespace pas;

TEST_SUITE("toy-model") {

TEST_CASE("unsteered answers follow the persona on every item") {
  const auto cats = synthetic_catalogs();
  for (const TraitProfile& persona : {TraitProfile{{1.0, 2.0, 3.0, 4.0, 5.0}}, TraitProfile{{4.4, 1.6, 2.2, 3.7, 4.9}}}) {
    const auto toy = build_toy_persona_lm(persona, toy_config(2, 8, 8), 3);
    const Transformer model(toy.checkpoint);
    const AnswerMap answers = answer_catalog(model, nullptr, cats.ipip300);
    for (const auto& item : cats.ipip300.items)
      CHECK(answers.at(item.id) == toy_expected_option(persona, item.trait, item.keying));
    // The profile matches the persona up to rounding to the response scale.
    const auto p = ocean_score(answers, cats.ipip300);
    for (std::size_t d = 0; d < kTraitCount; ++d) CHECK(std::abs(p.mean[d] - persona.mean[d]) <= 0.5);
  }
}

TEST_CASE("ground truth") {
  const auto toy = build_toy_persona_lm(TraitProfile{{3, 3, 3, 3, 3}}, toy_config(4, 8, 8), 3);
  CHECK(toy.truth.planted.size() == 24);
  for (const auto& [loc, u] : toy.truth.planted) {
    CHECK(loc.layer >= 1);
    double n = 0.0;
    for (double v : u) n += v * v;
    CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(toy.truth.copy_heads.size() == 2);
}

TEST_CASE("deterministic in the seed") {
  const TraitProfile p{{3, 3, 3, 3, 3}};
  CHECK(build_toy_persona_lm(p, toy_config(2, 8, 8), 5).checkpoint ==
        build_toy_persona_lm(p, toy_config(2, 8, 8), 5).checkpoint);
  CHECK_FALSE(build_toy_persona_lm(p, toy_config(2, 8, 8), 5).checkpoint ==
              build_toy_persona_lm(p, toy_config(2, 8, 8), 6).checkpoint);
}

TEST_CASE("configuration errors") {
  const TraitProfile p{{3, 3, 3, 3, 3}};
  CHECK_THROWS_AS(build_toy_persona_lm(p, toy_config(1, 8, 8), 1), Error);
  CHECK_THROWS_AS(build_toy_persona_lm(p, toy_config(2, 8, 2), 1), Error);
  CHECK_THROWS_AS(build_toy_persona_lm(TraitProfile{{0.5, 3, 3, 3, 3}}, toy_config(2, 8, 8), 1), Error);
}

}
