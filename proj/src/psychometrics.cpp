#include "pas/psychometrics.hpp"

#include <cstdlib>

#include "pas/error.hpp"

namespace pas {

std::string_view trait_name(TraitDimension trait) {
  switch (trait) {
    case TraitDimension::Agreeableness: return "Agreeableness";
    case TraitDimension::Conscientiousness: return "Conscientiousness";
    case TraitDimension::Extraversion: return "Extraversion";
    case TraitDimension::Neuroticism: return "Neuroticism";
    case TraitDimension::Openness: return "Openness";
  }
  return "";
}

TraitDimension parse_trait(std::string_view name) {
  for (auto d : kAllTraits)
    if (trait_name(d) == name) return d;
  fail(ErrorCode::SchemaError, "unknown trait dimension '" + std::string(name) + "'");
}

std::string_view option_text(LikertOption option) {
  switch (option) {
    case LikertOption::VeryAccurate: return "Very Accurate";
    case LikertOption::ModeratelyAccurate: return "Moderately Accurate";
    case LikertOption::Neither: return "Neither Accurate Nor Inaccurate";
    case LikertOption::ModeratelyInaccurate: return "Moderately Inaccurate";
    case LikertOption::VeryInaccurate: return "Very Inaccurate";
    case LikertOption::Unknown: return "Unknown";
  }
  return "";
}

std::optional<LikertOption> parse_option_text(std::string_view text) {
  for (auto o : kAnswerOptions)
    if (option_text(o) == text) return o;
  if (text == option_text(LikertOption::Unknown)) return LikertOption::Unknown;
  return std::nullopt;
}

int response_value(LikertOption option) {
  switch (option) {
    case LikertOption::VeryAccurate: return 5;
    case LikertOption::ModeratelyAccurate: return 4;
    case LikertOption::Neither: return 3;
    case LikertOption::ModeratelyInaccurate: return 2;
    case LikertOption::VeryInaccurate: return 1;
    case LikertOption::Unknown: return 0;
  }
  return 0;
}

LikertOption option_from_response(int value) {
  if (value < 1 || value > 5) fail(ErrorCode::ValueError, "response " + std::to_string(value) + " outside 1..5");
  return kAnswerOptions[static_cast<std::size_t>(5 - value)];
}

std::string_view catalog_name(CatalogName name) { return name == CatalogName::IPIP120 ? "IPIP120" : "IPIP300"; }

const Item* Catalog::find(std::string_view id) const {
  for (const auto& it : items)
    if (it.id == id) return &it;
  return nullptr;
}

const Item& Catalog::item(std::string_view id) const {
  if (const Item* it = find(id)) return *it;
  fail(ErrorCode::NotFound, "item '" + std::string(id) + "' not in " + std::string(catalog_name(name)));
}

int score_option(Keying keying, LikertOption option) {
  const int s = response_value(option);
  if (s == 0) return 0;
  return keying == Keying::Positive ? s : 6 - s;
}

TraitProfile trait_profile(const AnswerMap& answers, const Catalog& catalog) {
  std::array<double, kTraitCount> sum{};
  std::array<int, kTraitCount> count{};
  for (const auto& item : catalog.items) {
    auto it = answers.find(item.id);
    if (it == answers.end()) fail(ErrorCode::MissingAnswer, "no answer for item " + item.id);
    sum[trait_index(item.trait)] += score_option(item.keying, it->second);
    ++count[trait_index(item.trait)];
  }
  TraitProfile profile;
  for (std::size_t d = 0; d < kTraitCount; ++d) profile.mean[d] = count[d] ? sum[d] / count[d] : 0.0;
  return profile;
}

namespace {

// SCORES_BACK iteration order.
constexpr std::array<LikertOption, 6> kScanOrder = {
    LikertOption::VeryAccurate, LikertOption::ModeratelyAccurate, LikertOption::Neither,
    LikertOption::ModeratelyInaccurate, LikertOption::VeryInaccurate, LikertOption::Unknown};

}  // namespace

std::optional<LikertOption> scan_option_text(std::string_view text) {
  for (auto o : kScanOrder)
    if (text.find(option_text(o)) != std::string_view::npos) return o;
  return std::nullopt;
}

int reward_score(std::string_view text, LikertOption correct_option) {
  auto found = scan_option_text(text);
  if (!found) return -6;
  return -std::abs(response_value(*found) - response_value(correct_option));
}

}  // namespace pas
