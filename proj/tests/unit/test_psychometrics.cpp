#include <doctest.h>

#include <filesystem>
#include <set>

#include "pas/error.hpp"
#include "pas/psychometrics.hpp"

using namespace pas;

TEST_SUITE("psychometrics") {

TEST_CASE("keyed scores") {
  CHECK(score_option(Keying::Positive, LikertOption::VeryAccurate) == 5);
  CHECK(score_option(Keying::Positive, LikertOption::ModeratelyAccurate) == 4);
  CHECK(score_option(Keying::Positive, LikertOption::Neither) == 3);
  CHECK(score_option(Keying::Positive, LikertOption::ModeratelyInaccurate) == 2);
  CHECK(score_option(Keying::Positive, LikertOption::VeryInaccurate) == 1);
  CHECK(score_option(Keying::Negative, LikertOption::VeryAccurate) == 1);
  CHECK(score_option(Keying::Negative, LikertOption::VeryInaccurate) == 5);
  CHECK(score_option(Keying::Negative, LikertOption::Neither) == 3);
  CHECK(score_option(Keying::Positive, LikertOption::Unknown) == 0);
  CHECK(score_option(Keying::Negative, LikertOption::Unknown) == 0);
}

TEST_CASE("option strings round-trip") {
  for (auto o : kAnswerOptions) {
    REQUIRE(parse_option_text(option_text(o)).has_value());
    CHECK(*parse_option_text(option_text(o)) == o);
    CHECK(option_from_response(response_value(o)) == o);
  }
  CHECK(option_text(LikertOption::Neither) == "Neither Accurate Nor Inaccurate");
  CHECK_FALSE(parse_option_text("very accurate").has_value());
  CHECK_THROWS_AS(option_from_response(0), Error);
  CHECK_THROWS_AS(option_from_response(6), Error);
}

TEST_CASE("trait names") {
  for (auto d : kAllTraits) CHECK(parse_trait(trait_name(d)) == d);
  CHECK_THROWS_AS(parse_trait("Honesty"), Error);
}

TEST_CASE("substring scan follows the fixed order") {
  CHECK(scan_option_text("I think Very Inaccurate") == LikertOption::VeryInaccurate);
  // "Very Accurate" is checked first even when another label appears earlier in the text.
  CHECK(scan_option_text("Moderately Accurate or Very Accurate") == LikertOption::VeryAccurate);
  CHECK(scan_option_text("Unknown") == LikertOption::Unknown);
  CHECK_FALSE(scan_option_text("no idea").has_value());
}

TEST_CASE("reward port") {
  // Hand-evaluated against the reference function: -|found - correct|, -6 on no match.
  CHECK(reward_score("Very Accurate", LikertOption::VeryAccurate) == 0);
  CHECK(reward_score("Answer: Very Inaccurate", LikertOption::VeryAccurate) == -4);
  CHECK(reward_score("blah", LikertOption::Neither) == -6);
  CHECK(reward_score("Unknown", LikertOption::VeryAccurate) == -5);
}

TEST_CASE("profile") {
  Catalog c;
  c.items = {{"a", "x", TraitDimension::Openness, Keying::Positive},
             {"b", "y", TraitDimension::Openness, Keying::Negative}};
  AnswerMap ans{{"a", LikertOption::VeryAccurate}, {"b", LikertOption::ModeratelyAccurate}};
  auto p = trait_profile(ans, c);
  CHECK(p[TraitDimension::Openness] == doctest::Approx(3.5));
  ans.erase("b");
  try {
    trait_profile(ans, c);
    FAIL("expected MissingAnswer");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAnswer);
  }
}

TEST_CASE("synthetic catalogs have the questionnaire shape") {
  const auto cats = synthetic_catalogs();
  CHECK(cats.ipip120.items.size() == 120);
  CHECK(cats.ipip300.items.size() == 300);
  CHECK(cats.ipip300.overlap_map.size() == 120);
  std::array<int, kTraitCount> n120{}, n300{};
  std::array<int, kTraitCount> pos120{};
  for (const auto& i : cats.ipip120.items) {
    ++n120[trait_index(i.trait)];
    pos120[trait_index(i.trait)] += i.keying == Keying::Positive;
  }
  for (const auto& i : cats.ipip300.items) ++n300[trait_index(i.trait)];
  for (std::size_t d = 0; d < kTraitCount; ++d) {
    CHECK(n120[d] == 24);
    CHECK(n300[d] == 60);
    CHECK(pos120[d] == 12);
  }
  std::set<std::string> texts;
  for (const auto& i : cats.ipip300.items) texts.insert(i.text);
  CHECK(texts.size() == 300);
  for (const auto& [a, b] : cats.ipip300.overlap_map) CHECK(cats.ipip120.item(a).text == cats.ipip300.item(b).text);
}

TEST_CASE("catalog files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "pas_catalog_rt";
  std::filesystem::remove_all(dir);
  const auto cats = synthetic_catalogs();
  save_catalogs(cats, dir);
  const auto back = load_catalogs(dir);
  CHECK(back.ipip120.items.size() == 120);
  CHECK(back.ipip300.overlap_map == cats.ipip300.overlap_map);
  CHECK(back.ipip300.items[17].text == cats.ipip300.items[17].text);
  CHECK(back.ipip300.items[17].keying == cats.ipip300.items[17].keying);
  std::filesystem::remove_all(dir);
}

TEST_CASE("link_catalogs rejects wrong sizes") {
  auto cats = synthetic_catalogs();
  cats.ipip120.items.pop_back();
  CHECK_THROWS_AS(link_catalogs(cats.ipip120, cats.ipip300), Error);
}

}
