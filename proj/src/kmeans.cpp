#include <algorithm>
#include <limits>
#include <random>

#include "pas/dataset.hpp"
#include "pas/error.hpp"
#include "pas/parallel.hpp"

namespace pas {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::vector<double>> seed_plus_plus(const std::vector<std::vector<double>>& points, int k,
                                                std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centers;
  std::vector<bool> taken(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  centers.push_back(points[pick]);
  taken[pick] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], centers[0]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : d2[i];
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || d2[i] == 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Remaining points coincide with chosen centres; fall back to a uniform
      // pick among unused points.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) free.push_back(i);
      std::uniform_int_distribution<std::size_t> u(0, free.size() - 1);
      pick = free[u(rng)];
    }
    centers.push_back(points[pick]);
    taken[pick] = true;
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
  }
  return centers;
}

int nearest(const std::vector<double>& p, const std::vector<std::vector<double>>& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = sq_dist(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<double> mean_of(const std::vector<std::vector<double>>& points, const std::vector<int>& assign, int c,
                            const std::vector<double>& fallback) {
  std::vector<double> m(fallback.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (assign[i] != c) continue;
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += points[i][j];
    ++count;
  }
  if (count == 0) return fallback;
  for (auto& v : m) v /= static_cast<double>(count);
  return m;
}

}  // namespace

std::vector<std::string> ClusterSelection::test_ids() const {
  auto ids = representatives;
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> ClusterSelection::dev_ids() const {
  const auto test = test_ids();
  std::vector<std::string> dev;
  for (const auto& [id, c] : assignments)
    if (!std::binary_search(test.begin(), test.end(), id)) dev.push_back(id);
  return dev;
}

ClusterSelection kmeans_cluster(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& points,
                                int k, std::uint64_t seed, int max_iters) {
  const std::size_t n = points.size();
  if (ids.size() != n) fail(ErrorCode::ValueError, "ids and points differ in length");
  if (k <= 0) fail(ErrorCode::ValueError, "k must be positive, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > n)
    fail(ErrorCode::ValueError, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (max_iters < 1) fail(ErrorCode::ValueError, "max_iters must be positive");

  ClusterSelection sel;
  sel.k = k;
  sel.seed = seed;
  std::mt19937_64 rng(seed);
  auto centers = seed_plus_plus(points, k, rng);

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<int> next(n);
    parallel_for(n, [&](std::size_t i) { next[i] = nearest(points[i], centers); });
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) wcss += sq_dist(points[i], centers[next[i]]);
    sel.wcss_trace.push_back(wcss);
    sel.iterations = iter + 1;
    const bool changed = next != assign;
    assign = std::move(next);
    if (!changed) {
      sel.converged = true;
      break;
    }
    for (int c = 0; c < k; ++c) centers[c] = mean_of(points, assign, c, centers[c]);
  }
  for (int c = 0; c < k; ++c) centers[c] = mean_of(points, assign, c, centers[c]);

  // Every cluster must own a member so that |Test| = k: move the point
  // farthest from its centre (in a cluster of two or more) into each empty one.
  for (int c = 0; c < k; ++c) {
    if (std::count(assign.begin(), assign.end(), c) > 0) continue;
    std::vector<std::size_t> sizes(k, 0);
    for (int a : assign) ++sizes[a];
    std::size_t donor_point = n;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sizes[assign[i]] < 2) continue;
      const double d = sq_dist(points[i], centers[assign[i]]);
      if (d > far) {
        far = d;
        donor_point = i;
      }
    }
    const int donor = assign[donor_point];
    assign[donor_point] = c;
    centers[c] = points[donor_point];
    centers[donor] = mean_of(points, assign, donor, centers[donor]);
  }

  sel.representatives.assign(k, "");
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = assign[i];
    sel.assignments[ids[i]] = c;
    const double d = sq_dist(points[i], centers[c]);
    if (d < best[c] || (d == best[c] && ids[i] < sel.representatives[c])) {
      best[c] = d;
      sel.representatives[c] = ids[i];
    }
  }
  sel.centroids = std::move(centers);
  return sel;
}

ClusterSelection kmeans_select(const PapiTable& table, const Catalog& ipip300, int k, std::uint64_t seed,
                               int max_iters) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> points;
  ids.reserve(table.records.size());
  for (const auto& r : table.records) {
    ids.push_back(r.subject_id);
    points.push_back(keyed_score_vector(r, ipip300));
  }
  return kmeans_cluster(ids, points, k, seed, max_iters);
}

}  // namespace pas
