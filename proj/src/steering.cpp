#include "pas/steering.hpp"

#include <cmath>

#include "pas/error.hpp"
#include "pas/evaluation.hpp"

namespace pas {

double MemoizedObjective::operator()(double x) {
  auto it = cache_.find(x);
  if (it != cache_.end()) return it->second;
  const double v = f_(x);
  cache_.emplace(x, v);
  return v;
}

SearchResult golden_section_min(MemoizedObjective& f, double lo, double hi, double tolerance, int max_evals) {
  if (!(lo < hi)) fail(ErrorCode::IntervalError, "search interval is empty");
  if (!(tolerance > 0.0)) fail(ErrorCode::IntervalError, "tolerance must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const int start = f.count();
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tolerance && f.count() - start < max_evals) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // On a piecewise-constant objective the midpoint can sit just past a step
  // that an interior point already cleared, so keep the best of the three.
  SearchResult r;
  r.alpha = 0.5 * (a + b);
  r.value = f(r.alpha);
  if (fc < r.value) r = {c, fc, 0};
  if (fd < r.value) r = {d, fd, 0};
  r.eval_count = f.count() - start;
  return r;
}

SearchResult golden_section_min(const std::function<double(double)>& f, double lo, double hi, double tolerance,
                                int max_evals) {
  MemoizedObjective memo(f);
  return golden_section_min(memo, lo, hi, tolerance, max_evals);
}

std::vector<std::pair<double, double>> grid_scan(const std::function<double(double)>& f, double lo, double hi,
                                                 double step) {
  if (!(lo <= hi) || !(step > 0.0)) fail(ErrorCode::IntervalError, "bad grid");
  std::vector<std::pair<double, double>> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    out.emplace_back(x, f(x));
  }
  return out;
}

double calibration_objective(const ModelBackend& model, const SteeringSet& steering_set, double alpha,
                             const SubjectRecord& subject, const Catalog& catalog120) {
  if (steering_set.entries.empty()) fail(ErrorCode::ValueError, "empty steering set");
  const Steering steering = steering_set.at(alpha);
  std::vector<AnswerMap> answers{answer_catalog(model, &steering, catalog120)};
  const auto report = aligned_score(answers, {subject}, catalog120);
  return report.composite / static_cast<double>(kTraitCount);
}

SteeringSet build_steering_set(const ModelBackend& model, const SubjectRecord& subject, const Catalog& catalog120,
                               int k, std::uint64_t seed) {
  const auto examples = make_probe_examples(subject.answers120, catalog120, model.tokenizer());
  const auto activations = collect_activations(model, examples);
  bool has0 = false, has1 = false;
  for (int y : activations.labels) (y ? has1 : has0) = true;
  if (!has0 || !has1) fail(ErrorCode::InsufficientData, "probe labels hold a single class");
  const auto split = paired_split(examples, seed);
  const auto probes = train_all_probes(activations, split);
  SteeringSet set = select_heads(probes, k, activations, split);
  set.subject_id = subject.subject_id;
  set.seed = seed;
  return set;
}

AlignmentResult align_subject(const ModelBackend& model, const SubjectRecord& subject, const CatalogPair& catalogs,
                              int k, const AlphaSearchConfig& search, std::uint64_t seed) {
  AlignmentResult result;
  result.subject_id = subject.subject_id;
  result.steering_set = build_steering_set(model, subject, catalogs.ipip120, k, seed);

  MemoizedObjective f([&](double alpha) {
    return calibration_objective(model, result.steering_set, alpha, subject, catalogs.ipip120);
  });
  const SearchResult best = golden_section_min(f, search.lo, search.hi, search.tolerance, search.max_evals);
  result.objective_at_zero = f(search.lo);
  result.alpha_star = best.alpha;
  result.objective_at_alpha_star = best.value;
  if (best.value >= result.objective_at_zero) {
    result.alpha_star = search.lo;
    result.objective_at_alpha_star = result.objective_at_zero;
  }
  result.eval_count = f.count();
  return result;
}

AteResult ate_experiment(const ModelBackend& model, const SubjectRecord& subject, int shift,
                         const CatalogPair& catalogs, int k, const AlphaSearchConfig& search, std::uint64_t seed) {
  AteResult out;
  auto measure = [&](const AlignmentResult& r) {
    const Steering steering = r.steering();
    return ocean_score(answer_catalog(model, &steering, catalogs.ipip300), catalogs.ipip300);
  };
  out.original = align_subject(model, subject, catalogs, k, search, seed);
  out.y0 = measure(out.original);
  const SubjectRecord moved = shift_subject(subject, shift, catalogs);
  if (moved.answers120 == subject.answers120) {
    // Nothing to re-align: the pipeline is deterministic, so Y1 = Y0.
    out.shifted = out.original;
    out.y1 = out.y0;
  } else {
    out.shifted = align_subject(model, moved, catalogs, k, search, seed);
    out.y1 = measure(out.shifted);
  }
  for (std::size_t d = 0; d < kTraitCount; ++d) out.delta[d] = out.y1.mean[d] - out.y0.mean[d];
  return out;
}

}  // namespace pas
