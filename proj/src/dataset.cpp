#include "pas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pas/error.hpp"

namespace pas {

const SubjectRecord& PapiTable::subject(std::string_view id) const {
  for (const auto& r : records)
    if (r.subject_id == id) return r;
  fail(ErrorCode::NotFound, "subject '" + std::string(id) + "' not in table");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string column_name(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, n);
  return buf;
}

std::vector<std::string> expected_header() {
  std::vector<std::string> h = {"subject_id", "sex", "age", "country"};
  for (std::size_t i = 1; i <= 120; ++i) h.push_back(column_name("q120", i));
  for (std::size_t i = 1; i <= 300; ++i) h.push_back(column_name("q300", i));
  return h;
}

int parse_response(const std::string& field, std::size_t row, const std::string& column) {
  int value = 0;
  std::size_t used = 0;
  try {
    value = std::stoi(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size() || value < 1 || value > 5)
    fail(ErrorCode::ValueError,
         "row " + std::to_string(row) + ", column " + column + ": response '" + field + "' outside 1..5");
  return value;
}

}  // namespace

PapiTable parse_papi_csv(std::istream& in, const CatalogPair& catalogs) {
  const auto header = expected_header();
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::SchemaError, "empty PAPI file");
  const auto got = split_csv_line(line);
  if (got.size() != header.size())
    fail(ErrorCode::SchemaError, "header has " + std::to_string(got.size()) + " columns, expected " +
                                     std::to_string(header.size()));
  for (std::size_t c = 0; c < header.size(); ++c)
    if (got[c] != header[c]) fail(ErrorCode::SchemaError, "header column " + std::to_string(c) + " is '" + got[c] + "'");

  PapiTable table;
  std::set<std::string> ids;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      fail(ErrorCode::SchemaError,
           "row " + std::to_string(row) + " has " + std::to_string(f.size()) + " columns");
    SubjectRecord r;
    r.subject_id = f[0];
    if (r.subject_id.empty()) fail(ErrorCode::SchemaError, "row " + std::to_string(row) + ": empty subject_id");
    if (!ids.insert(r.subject_id).second) fail(ErrorCode::DuplicateError, "duplicate subject_id " + r.subject_id);
    r.sex = f[1];
    try {
      r.age = f[2].empty() ? 0 : std::stoi(f[2]);
    } catch (const std::exception&) {
      fail(ErrorCode::ValueError, "row " + std::to_string(row) + ": bad age '" + f[2] + "'");
    }
    r.country = f[3];
    for (std::size_t i = 0; i < 120; ++i)
      r.answers120[catalogs.ipip120.items[i].id] = option_from_response(parse_response(f[4 + i], row, header[4 + i]));
    for (std::size_t i = 0; i < 300; ++i)
      r.answers300[catalogs.ipip300.items[i].id] =
          option_from_response(parse_response(f[124 + i], row, header[124 + i]));
    table.records.push_back(std::move(r));
  }
  return table;
}

PapiTable load_papi_csv(const std::filesystem::path& path, const CatalogPair& catalogs) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return parse_papi_csv(in, catalogs);
}

void write_papi_csv(const PapiTable& table, const CatalogPair& catalogs, std::ostream& out) {
  const auto header = expected_header();
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  auto emit = [&](const AnswerMap& answers, const Catalog& catalog, const std::string& sid) {
    for (const auto& item : catalog.items) {
      auto it = answers.find(item.id);
      if (it == answers.end() || it->second == LikertOption::Unknown)
        fail(ErrorCode::MissingAnswer, "subject " + sid + " lacks an answer for " + item.id);
      out << ',' << response_value(it->second);
    }
  };
  for (const auto& r : table.records) {
    out << r.subject_id << ',' << r.sex << ',' << r.age << ',' << r.country;
    emit(r.answers120, catalogs.ipip120, r.subject_id);
    emit(r.answers300, catalogs.ipip300, r.subject_id);
    out << '\n';
  }
}

void save_papi_csv(const PapiTable& table, const CatalogPair& catalogs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  write_papi_csv(table, catalogs, out);
}

SubjectRecord synthesize_subject(const std::string& subject_id, const TraitProfile& latent, std::uint64_t seed,
                                 const CatalogPair& catalogs, double noise_sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  SubjectRecord r;
  r.subject_id = subject_id;
  r.latent = latent;
  auto answer = [&](const Item& item) {
    const double t = latent[item.trait];
    const double target = item.keying == Keying::Positive ? t : 6.0 - t;
    const long v = std::lround(target + noise(rng));
    return option_from_response(static_cast<int>(std::clamp(v, 1L, 5L)));
  };
  for (const auto& item : catalogs.ipip120.items) r.answers120[item.id] = answer(item);
  for (const auto& item : catalogs.ipip300.items) r.answers300[item.id] = answer(item);
  return r;
}

PapiTable generate_synthetic(std::size_t n, std::uint64_t seed, const CatalogPair& catalogs) {
  static const std::array<const char*, 6> kCountries = {"US", "UK", "France", "India", "China", "Canada"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(1.0, 5.0);
  std::uniform_int_distribution<int> age(10, 99);
  std::uniform_int_distribution<std::size_t> country(0, kCountries.size() - 1);
  std::bernoulli_distribution female(0.6);
  PapiTable table;
  table.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TraitProfile latent;
    for (auto& m : latent.mean) m = level(rng);
    const std::uint64_t subject_seed = rng();
    char id[32];
    std::snprintf(id, sizeof id, "S%06zu", i + 1);
    SubjectRecord r = synthesize_subject(id, latent, subject_seed, catalogs);
    r.sex = female(rng) ? "F" : "M";
    r.age = age(rng);
    r.country = kCountries[country(rng)];
    table.records.push_back(std::move(r));
  }
  return table;
}

std::vector<double> keyed_score_vector(const SubjectRecord& subject, const Catalog& ipip300) {
  std::vector<double> v;
  v.reserve(ipip300.items.size());
  for (const auto& item : ipip300.items) {
    auto it = subject.answers300.find(item.id);
    if (it == subject.answers300.end())
      fail(ErrorCode::MissingAnswer, "subject " + subject.subject_id + " lacks an answer for " + item.id);
    v.push_back(score_option(item.keying, it->second));
  }
  return v;
}

}  // namespace pas
