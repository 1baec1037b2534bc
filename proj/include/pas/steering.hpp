#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pas/probes.hpp"
#include "pas/psychometrics.hpp"
#include "pas/transformer.hpp"

namespace pas {

struct AlphaSearchConfig {
  double lo = 0.0;
  double hi = 10.0;
  double tolerance = 1e-3;
  int max_evals = 60;
};

struct SearchResult {
  double alpha = 0.0;
  double value = 0.0;
  int eval_count = 0;
};

/// Caches f by exact argument; count() is the number of distinct evaluations.
class MemoizedObjective {
 public:
  explicit MemoizedObjective(std::function<double(double)> f) : f_(std::move(f)) {}
  double operator()(double x);
  int count() const { return static_cast<int>(cache_.size()); }

 private:
  std::function<double(double)> f_;
  std::map<double, double> cache_;
};

/// Golden-section minimization on [lo, hi]. Stops once the bracket is no
/// wider than `tolerance` or `max_evals` interior points were evaluated, and
/// returns the bracket midpoint with its value, unless one of the final
/// interior points scored strictly lower. On equal interior values the lower
/// half is kept.
SearchResult golden_section_min(const std::function<double(double)>& f, double lo, double hi, double tolerance,
                                int max_evals);
SearchResult golden_section_min(MemoizedObjective& f, double lo, double hi, double tolerance, int max_evals);

/// (alpha, f(alpha)) at lo, lo + step, ..., hi.
std::vector<std::pair<double, double>> grid_scan(const std::function<double(double)>& f, double lo, double hi,
                                                 double step);

/// Mean over the five dimensions of the per-dimension mean |score(model) -
/// score(subject)| on the IPIP120 items, answering under (steering_set, alpha).
double calibration_objective(const ModelBackend& model, const SteeringSet& steering_set, double alpha,
                             const SubjectRecord& subject, const Catalog& catalog120);

struct AlignmentResult {
  std::string subject_id;
  SteeringSet steering_set;
  double alpha_star = 0.0;
  double objective_at_alpha_star = 0.0;
  double objective_at_zero = 0.0;
  int eval_count = 0;

  Steering steering() const { return steering_set.at(alpha_star); }
};

/// Probe, select K heads, and search alpha. Falls back to alpha = lo (no
/// intervention) unless the searched point scores strictly better.
AlignmentResult align_subject(const ModelBackend& model, const SubjectRecord& subject, const CatalogPair& catalogs,
                              int k, const AlphaSearchConfig& search, std::uint64_t seed);

/// The probing half of align_subject.
SteeringSet build_steering_set(const ModelBackend& model, const SubjectRecord& subject, const Catalog& catalog120,
                               int k, std::uint64_t seed);

struct AteResult {
  TraitProfile y0;  // model aligned to the subject
  TraitProfile y1;  // model aligned to the shifted subject
  std::array<double, kTraitCount> delta{};
  AlignmentResult original;
  AlignmentResult shifted;
};

/// Average-treatment-effect probe: align to the subject, align to the subject
/// with every answer moved `shift` keyed steps, and compare the OCEAN scores
/// of the two steered models on the IPIP300.
AteResult ate_experiment(const ModelBackend& model, const SubjectRecord& subject, int shift,
                         const CatalogPair& catalogs, int k, const AlphaSearchConfig& search, std::uint64_t seed);

}  // namespace pas
