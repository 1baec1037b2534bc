#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pas {

// Canonical (alphabetical) order; arrays indexed by trait use this order.
enum class TraitDimension : std::uint8_t {
  Agreeableness = 0,
  Conscientiousness = 1,
  Extraversion = 2,
  Neuroticism = 3,
  Openness = 4,
};

inline constexpr std::size_t kTraitCount = 5;
inline constexpr std::array<TraitDimension, kTraitCount> kAllTraits = {
    TraitDimension::Agreeableness, TraitDimension::Conscientiousness, TraitDimension::Extraversion,
    TraitDimension::Neuroticism, TraitDimension::Openness};

std::string_view trait_name(TraitDimension trait);
TraitDimension parse_trait(std::string_view name);
inline std::size_t trait_index(TraitDimension trait) { return static_cast<std::size_t>(trait); }

enum class LikertOption : std::uint8_t {
  VeryAccurate = 0,
  ModeratelyAccurate = 1,
  Neither = 2,
  ModeratelyInaccurate = 3,
  VeryInaccurate = 4,
  Unknown = 5,
};

/// The five answerable options, in ranking tie-break order.
inline constexpr std::array<LikertOption, 5> kAnswerOptions = {
    LikertOption::VeryAccurate, LikertOption::ModeratelyAccurate, LikertOption::Neither,
    LikertOption::ModeratelyInaccurate, LikertOption::VeryInaccurate};

/// Bit-exact display strings ("Neither Accurate Nor Inaccurate" etc.).
std::string_view option_text(LikertOption option);
std::optional<LikertOption> parse_option_text(std::string_view text);

/// Response-scale value: VeryAccurate = 5 ... VeryInaccurate = 1, Unknown = 0.
int response_value(LikertOption option);
/// Inverse of response_value for 1..5.
LikertOption option_from_response(int value);

enum class Keying : std::int8_t { Positive = 1, Negative = -1 };

struct Item {
  std::string id;
  std::string text;
  TraitDimension trait = TraitDimension::Agreeableness;
  Keying keying = Keying::Positive;
};

enum class CatalogName { IPIP120, IPIP300 };
std::string_view catalog_name(CatalogName name);

struct Catalog {
  CatalogName name = CatalogName::IPIP120;
  std::vector<Item> items;
  /// IPIP120 item id -> IPIP300 item id. Only populated on the IPIP300 catalog.
  std::map<std::string, std::string> overlap_map;

  const Item& item(std::string_view id) const;
  const Item* find(std::string_view id) const;
  std::size_t expected_size() const { return name == CatalogName::IPIP120 ? 120 : 300; }
};

struct CatalogPair {
  Catalog ipip120;
  Catalog ipip300;
};

using AnswerMap = std::map<std::string, LikertOption>;

struct TraitProfile {
  std::array<double, kTraitCount> mean{};

  double operator[](TraitDimension d) const { return mean[trait_index(d)]; }
  double& operator[](TraitDimension d) { return mean[trait_index(d)]; }
  bool operator==(const TraitProfile&) const = default;
};

struct SubjectRecord {
  std::string subject_id;
  std::string sex;
  int age = 0;
  std::string country;
  AnswerMap answers120;
  AnswerMap answers300;
  /// Generating latent trait vector; only known for synthetic subjects.
  std::optional<TraitProfile> latent;
};

/// Keyed item score: 5..1 for positive keying, 6 - s for negative, 0 for Unknown.
int score_option(Keying keying, LikertOption option);

TraitProfile trait_profile(const AnswerMap& answers, const Catalog& catalog);

/// Port of the PPO reward function: scans option descriptions in the fixed
/// order 5,4,3,2,1,0 for the first case-sensitive substring hit.
int reward_score(std::string_view text, LikertOption correct_option);

/// First option description found in `text` under the same scan order, or
/// nullopt when nothing matches.
std::optional<LikertOption> scan_option_text(std::string_view text);

// Catalog files: one JSON object per line {"id","text","trait","keying"}.
Catalog load_catalog(const std::filesystem::path& path, CatalogName name);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);
/// Fills ipip300.overlap_map by exact text match and validates sizes and the
/// superset relation.
CatalogPair link_catalogs(Catalog ipip120, Catalog ipip300);
CatalogPair load_catalogs(const std::filesystem::path& dir);
void save_catalogs(const CatalogPair& catalogs, const std::filesystem::path& dir);

/// Synthetic stand-in with the real questionnaires' shape: 300 items (60 per
/// trait, balanced keying) and a 120-item subset (24 per trait).
CatalogPair synthetic_catalogs();

}  // namespace pas
