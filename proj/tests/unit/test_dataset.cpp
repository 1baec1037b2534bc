#include <doctest.h>

#include <limits>
#include <numeric>
#include <set>
#include <random>
#include <sstream>

#include "pas/dataset.hpp"
#include "pas/error.hpp"

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

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("csv round-trip") {
  const auto cats = synthetic_catalogs();
  const auto table = generate_synthetic(6, 9, cats);
  std::stringstream ss;
  write_papi_csv(table, cats, ss);
  const auto back = parse_papi_csv(ss, cats);
  REQUIRE(back.records.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back.records[i].subject_id == table.records[i].subject_id);
    CHECK(back.records[i].answers120 == table.records[i].answers120);
    CHECK(back.records[i].answers300 == table.records[i].answers300);
  }
}

TEST_CASE("csv errors") {
  const auto cats = synthetic_catalogs();
  const auto table = generate_synthetic(2, 9, cats);
  std::stringstream ss;
  write_papi_csv(table, cats, ss);
  const std::string good = ss.str();

  SUBCASE("header") {
    std::string bad = good;
    bad.replace(bad.find("q120_001"), 8, "q120_999");
    std::stringstream in(bad);
    CHECK(code_of([&] { parse_papi_csv(in, cats); }) == ErrorCode::SchemaError);
  }
  SUBCASE("value out of range") {
    std::string bad = good;
    const auto row = bad.find('\n') + 1;
    const auto cell = bad.find(',', bad.find(',', bad.find(',', bad.find(',', row) + 1) + 1) + 1) + 1;
    bad[cell] = '7';
    std::stringstream in(bad);
    CHECK(code_of([&] { parse_papi_csv(in, cats); }) == ErrorCode::ValueError);
  }
  SUBCASE("duplicate subject") {
    const auto first_row_end = good.find('\n', good.find('\n') + 1);
    const std::string dup = good + good.substr(good.find('\n') + 1, first_row_end - good.find('\n'));
    std::stringstream in(dup);
    CHECK(code_of([&] { parse_papi_csv(in, cats); }) == ErrorCode::DuplicateError);
  }
}

TEST_CASE("synthetic population is a pure function of its seed") {
  const auto cats = synthetic_catalogs();
  const auto a = generate_synthetic(5, 77, cats);
  const auto b = generate_synthetic(5, 77, cats);
  const auto c = generate_synthetic(5, 78, cats);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.records[i].answers300 == b.records[i].answers300);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) differs = differs || a.records[i].answers300 != c.records[i].answers300;
  CHECK(differs);
}

TEST_CASE("synthesized answers track the latent") {
  const auto cats = synthetic_catalogs();
  TraitProfile lat{{1.0, 2.0, 3.0, 4.0, 5.0}};
  const auto s = synthesize_subject("X", lat, 3, cats, 0.0);
  const auto p = trait_profile(s.answers300, cats.ipip300);
  for (std::size_t d = 0; d < kTraitCount; ++d) CHECK(p.mean[d] == doctest::Approx(lat.mean[d]));
  // Overlapping items carry identical answers in both questionnaires.
  for (const auto& [a, b] : cats.ipip300.overlap_map) CHECK(s.answers120.at(a) == s.answers300.at(b));
}

TEST_CASE("k-means representatives are nearest to their centroid") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 40; ++i) {
      ids.push_back("p" + std::to_string(100 + i));
      pts.push_back({n(rng) + (i % 3) * 4.0, n(rng)});
    }
    const auto sel = kmeans_cluster(ids, pts, 3, 11 + trial, 100);
    REQUIRE(sel.representatives.size() == 3);
    for (int c = 0; c < 3; ++c) {
      // Brute force over members of c.
      double best = std::numeric_limits<double>::infinity();
      std::string best_id;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (sel.assignments.at(ids[i]) != c) continue;
        const double d = sqdist(pts[i], sel.centroids[c]);
        if (d < best || (d == best && ids[i] < best_id)) best = d, best_id = ids[i];
      }
      CHECK(sel.representatives[c] == best_id);
    }
    // Every point sits in its nearest cluster.
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int a = sel.assignments.at(ids[i]);
      for (int c = 0; c < 3; ++c) CHECK(sqdist(pts[i], sel.centroids[a]) <= sqdist(pts[i], sel.centroids[c]) + 1e-12);
    }
    // WCSS never increases.
    for (std::size_t t = 1; t < sel.wcss_trace.size(); ++t) CHECK(sel.wcss_trace[t] <= sel.wcss_trace[t - 1] + 1e-9);
  }
}

TEST_CASE("k = n is the identity") {
  const auto cats = synthetic_catalogs();
  const auto table = generate_synthetic(7, 4, cats);
  const auto sel = kmeans_select(table, cats.ipip300, 7, 1);
  std::set<std::string> reps(sel.representatives.begin(), sel.representatives.end());
  CHECK(reps.size() == 7);
  for (const auto& r : table.records) CHECK(reps.count(r.subject_id) == 1);
  CHECK(sel.dev_ids().empty());
}

TEST_CASE("k-means argument errors") {
  const std::vector<std::string> ids{"a", "b"};
  const std::vector<std::vector<double>> pts{{0.0}, {1.0}};
  CHECK(code_of([&] { kmeans_cluster(ids, pts, 0, 1, 10); }) == ErrorCode::ValueError);
  CHECK(code_of([&] { kmeans_cluster(ids, pts, 3, 1, 10); }) == ErrorCode::ValueError);
}

TEST_CASE("k-means is deterministic for a seed") {
  const auto cats = synthetic_catalogs();
  const auto table = generate_synthetic(30, 2, cats);
  const auto a = kmeans_select(table, cats.ipip300, 4, 8);
  const auto b = kmeans_select(table, cats.ipip300, 4, 8);
  CHECK(a.representatives == b.representatives);
  CHECK(a.assignments == b.assignments);
}

}
