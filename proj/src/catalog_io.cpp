#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "pas/error.hpp"
#include "pas/psychometrics.hpp"

namespace pas {

using nlohmann::json;

Catalog load_catalog(const std::filesystem::path& path, CatalogName name) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open catalog " + path.string());
  Catalog catalog;
  catalog.name = name;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Item item;
    try {
      item.id = j.at("id").get<std::string>();
      item.text = j.at("text").get<std::string>();
      item.trait = parse_trait(j.at("trait").get<std::string>());
      const int k = j.at("keying").get<int>();
      if (k != 1 && k != -1) fail(ErrorCode::SchemaError, "keying must be +1 or -1");
      item.keying = static_cast<Keying>(k);
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (item.text.empty()) fail(ErrorCode::SchemaError, "empty text for item " + item.id);
    if (!seen.insert(item.id).second) fail(ErrorCode::DuplicateError, "duplicate item id " + item.id);
    catalog.items.push_back(std::move(item));
  }
  return catalog;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& item : catalog.items) {
    json j = {{"id", item.id},
              {"text", item.text},
              {"trait", std::string(trait_name(item.trait))},
              {"keying", static_cast<int>(item.keying)}};
    out << j.dump() << '\n';
  }
}

CatalogPair link_catalogs(Catalog ipip120, Catalog ipip300) {
  ipip120.name = CatalogName::IPIP120;
  ipip300.name = CatalogName::IPIP300;
  if (ipip120.items.size() != 120)
    fail(ErrorCode::SchemaError, "IPIP120 catalog has " + std::to_string(ipip120.items.size()) + " items");
  if (ipip300.items.size() != 300)
    fail(ErrorCode::SchemaError, "IPIP300 catalog has " + std::to_string(ipip300.items.size()) + " items");
  std::map<std::string, const Item*> by_text;
  for (const auto& it : ipip300.items) by_text.emplace(it.text, &it);
  ipip300.overlap_map.clear();
  for (const auto& it : ipip120.items) {
    auto hit = by_text.find(it.text);
    if (hit == by_text.end())
      fail(ErrorCode::SchemaError, "IPIP120 item " + it.id + " has no counterpart in IPIP300");
    if (hit->second->trait != it.trait || hit->second->keying != it.keying)
      fail(ErrorCode::SchemaError, "IPIP120 item " + it.id + " disagrees with its IPIP300 counterpart");
    ipip300.overlap_map.emplace(it.id, hit->second->id);
  }
  return {std::move(ipip120), std::move(ipip300)};
}

CatalogPair load_catalogs(const std::filesystem::path& dir) {
  return link_catalogs(load_catalog(dir / "ipip120.jsonl", CatalogName::IPIP120),
                       load_catalog(dir / "ipip300.jsonl", CatalogName::IPIP300));
}

void save_catalogs(const CatalogPair& catalogs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_catalog(catalogs.ipip120, dir / "ipip120.jsonl");
  save_catalog(catalogs.ipip300, dir / "ipip300.jsonl");
}

namespace {

// Six behaviour stems per (trait, keying); combined with five settings gives
// 30 distinct statements per (trait, keying).
const std::array<std::array<std::array<const char*, 6>, 2>, kTraitCount> kStems = {{
    {{{"trust what others tell me", "help people who are in need", "feel sympathy for others",
       "treat everyone with respect", "avoid arguments", "forgive people easily"},
      {"insult people", "take advantage of others", "get back at people who wrong me",
       "look down on others", "push my own interests first", "hold grudges"}}},
    {{{"complete tasks successfully", "keep my things tidy", "follow through on my plans",
       "prepare for things in advance", "work hard to reach my goals", "think before acting"},
      {"leave my work unfinished", "make a mess of things", "break my promises", "put off my duties",
       "act without thinking", "waste my time"}}},
    {{{"make friends easily", "love large parties", "take charge of situations", "enjoy being busy",
       "seek out excitement", "laugh a lot"},
      {"keep others at a distance", "prefer to be alone", "wait for others to lead",
       "like a slow pace of life", "avoid crowded events", "rarely show my joy"}}},
    {{{"worry about things", "get angry easily", "often feel blue", "am easily embarrassed",
       "give in to my urges", "panic under pressure"},
      {"stay calm under pressure", "rarely get irritated", "feel comfortable with myself",
       "am not easily bothered", "resist my cravings", "handle setbacks well"}}},
    {{{"have a vivid imagination", "enjoy the beauty of nature", "experience strong emotions",
       "prefer variety to routine", "love to read challenging material", "question old traditions"},
      {"seldom daydream", "do not enjoy going to art museums", "rarely notice my feelings",
       "dislike changes", "avoid philosophical discussions", "respect authority without question"}}},
}};

const std::array<const char*, 5> kSettings = {"at work", "with friends", "at home", "in public", "online"};

// Interleaving used by the published inventories: N, E, O, A, C.
constexpr std::array<TraitDimension, kTraitCount> kRoundRobin = {
    TraitDimension::Neuroticism, TraitDimension::Extraversion, TraitDimension::Openness,
    TraitDimension::Agreeableness, TraitDimension::Conscientiousness};

std::string make_id(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, n);
  return buf;
}

std::string statement(TraitDimension trait, Keying keying, std::size_t local) {
  const auto& stems = kStems[trait_index(trait)][keying == Keying::Positive ? 0 : 1];
  return std::string("I ") + stems[local % 6] + " " + kSettings[local / 6] + ".";
}

Catalog build(CatalogName name, std::size_t per_trait, const char* prefix) {
  Catalog c;
  c.name = name;
  for (std::size_t i = 0; i < per_trait * kTraitCount; ++i) {
    const TraitDimension trait = kRoundRobin[i % kTraitCount];
    const std::size_t within = i / kTraitCount;
    const Keying keying = within % 2 == 0 ? Keying::Positive : Keying::Negative;
    c.items.push_back({make_id(prefix, i + 1), statement(trait, keying, within / 2), trait, keying});
  }
  return c;
}

}  // namespace

CatalogPair synthetic_catalogs() {
  return link_catalogs(build(CatalogName::IPIP120, 24, "q120"), build(CatalogName::IPIP300, 60, "q300"));
}

}  // namespace pas
