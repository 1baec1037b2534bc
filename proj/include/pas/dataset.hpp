#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pas/psychometrics.hpp"

namespace pas {

struct PapiTable {
  std::vector<SubjectRecord> records;
  std::vector<std::string> catalog_refs = {"IPIP120", "IPIP300"};

  const SubjectRecord& subject(std::string_view id) const;
};

/// Wide PAPI CSV: `subject_id,sex,age,country,q120_001..q120_120,q300_001..q300_300`,
/// responses 1..5 on the response scale (5 = Very Accurate). Columns map to
/// catalog items positionally.
PapiTable load_papi_csv(const std::filesystem::path& path, const CatalogPair& catalogs);
PapiTable parse_papi_csv(std::istream& in, const CatalogPair& catalogs);
void write_papi_csv(const PapiTable& table, const CatalogPair& catalogs, std::ostream& out);
void save_papi_csv(const PapiTable& table, const CatalogPair& catalogs, const std::filesystem::path& path);

inline constexpr double kSyntheticNoiseSd = 0.5;

/// One synthetic subject answering both questionnaires from `latent`.
/// Responses are clamp(round(target + eps), 1, 5) with target t_d for positive
/// items and 6 - t_d for negative ones, eps ~ N(0, noise_sd).
SubjectRecord synthesize_subject(const std::string& subject_id, const TraitProfile& latent,
                                 std::uint64_t seed, const CatalogPair& catalogs,
                                 double noise_sd = kSyntheticNoiseSd);

/// n subjects with latents uniform in [1, 5]; a pure function of (n, seed).
PapiTable generate_synthetic(std::size_t n, std::uint64_t seed, const CatalogPair& catalogs);

/// Keyed IPIP300 scores in catalog order: the clustering feature vector.
std::vector<double> keyed_score_vector(const SubjectRecord& subject, const Catalog& ipip300);

struct ClusterSelection {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;
  std::vector<std::vector<double>> centroids;
  /// representatives[c] is the Test-Set subject for cluster c.
  std::vector<std::string> representatives;
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> wcss_trace;
  int iterations = 0;
  bool converged = false;

  std::vector<std::string> test_ids() const;
  std::vector<std::string> dev_ids() const;
};

/// Lloyd's k-means with k-means++ seeding over explicit feature vectors.
/// Representatives are the members nearest their centroid, ties to the
/// lexicographically smallest id.
ClusterSelection kmeans_cluster(const std::vector<std::string>& ids,
                                const std::vector<std::vector<double>>& points, int k,
                                std::uint64_t seed, int max_iters);

ClusterSelection kmeans_select(const PapiTable& table, const Catalog& ipip300, int k, std::uint64_t seed,
                               int max_iters = 100);

}  // namespace pas
