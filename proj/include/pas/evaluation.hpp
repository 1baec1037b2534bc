#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pas/prompts.hpp"
#include "pas/psychometrics.hpp"
#include "pas/transformer.hpp"

namespace pas {

struct AnswerOptions {
  /// Greedy-decode then scan the text for an option string, for backends
  /// without log-likelihood access. Unknown when nothing matches.
  bool free_generation = false;
  int max_new_tokens = 16;
  /// Optional system prefix placed between BOS and the question.
  std::string_view context;
  /// Prefilled BOS + context; must match `context` and the steering in use.
  const KvCache* context_cache = nullptr;
};

struct ItemAnswer {
  LikertOption option = LikertOption::Unknown;
  /// Indexed like kAnswerOptions; empty on the free-generation path.
  std::vector<double> logliks;
  std::string generated_text;
};

/// Ranks the five option continuations by log-likelihood; exact ties go to
/// the earlier option (Very Accurate first).
ItemAnswer answer_item_detailed(const ModelBackend& model, const Steering* steering, const Item& item,
                                std::string_view tmpl = kMcTemplate, const AnswerOptions& options = {});
LikertOption answer_item(const ModelBackend& model, const Steering* steering, const Item& item,
                         std::string_view tmpl = kMcTemplate, const AnswerOptions& options = {});

/// Answers every item of the catalog (in parallel).
AnswerMap answer_catalog(const ModelBackend& model, const Steering* steering, const Catalog& catalog,
                         const AnswerOptions& options = {});

struct AlignedScoreReport {
  std::array<double, kTraitCount> per_dimension{};
  double composite = 0.0;
  std::array<std::size_t, kTraitCount> n_items{};
  std::size_t n_subjects = 0;
  bool exclude_train_overlap = false;
};

/// The subject's own answers to `catalog` (answers120 or answers300 by catalog name).
const AnswerMap& subject_answers(const SubjectRecord& subject, const Catalog& catalog);

/// Per dimension: mean over subjects of the mean over items of
/// |score(model) - score(subject)|. model_answers[i] belongs to subjects[i].
AlignedScoreReport aligned_score(const std::vector<AnswerMap>& model_answers,
                                 const std::vector<SubjectRecord>& subjects, const Catalog& catalog,
                                 bool exclude_train_overlap = false);

/// Per-dimension mean keyed score of the model's answers (Unknown scores 0).
TraitProfile ocean_score(const AnswerMap& model_answers, const Catalog& catalog);

/// Moves every answer `shift` keyed-score steps (clamped to 1..5) in both questionnaires.
SubjectRecord shift_subject(const SubjectRecord& subject, int shift, const CatalogPair& catalogs);

/// One line per item: statement followed by the subject's chosen option.
std::string fewshot_context(const SubjectRecord& subject, const Catalog& catalog120);

}  // namespace pas
