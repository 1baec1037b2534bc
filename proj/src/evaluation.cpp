#include "pas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "pas/error.hpp"
#include "pas/parallel.hpp"

namespace pas {

namespace {

std::vector<double> rank_options(const ModelBackend& model, const Steering* steering,
                                 std::span<const TokenId> prompt, const KvCache* cache) {
  const Tokenizer& tok = model.tokenizer();
  std::vector<std::vector<TokenId>> conts;
  bool single = true;
  for (auto opt : kAnswerOptions) {
    conts.push_back(tok.option_tokens(opt));
    single = single && conts.back().size() == 1;
  }
  std::vector<double> ll(conts.size());
  if (single) {
    ForwardOptions fo;
    fo.steering = steering;
    const ForwardResult r = model.forward(prompt, fo, cache);
    const auto lp = log_softmax(r.logits.row_span(r.logits.rows - 1));
    for (std::size_t i = 0; i < conts.size(); ++i) ll[i] = lp[conts[i][0]];
  } else {
    for (std::size_t i = 0; i < conts.size(); ++i) ll[i] = sequence_loglik(model, prompt, conts[i], steering, cache);
  }
  return ll;
}

}  // namespace

ItemAnswer answer_item_detailed(const ModelBackend& model, const Steering* steering, const Item& item,
                                std::string_view tmpl, const AnswerOptions& options) {
  const auto parts = split_template(tmpl);
  const Tokenizer& tok = model.tokenizer();
  std::vector<TokenId> prompt = tok.encode_prompt({options.context, parts.before, &item, parts.after});

  ItemAnswer out;
  if (options.free_generation) {
    // Greedy decoding has no prefix-cache entry point; always run the full prompt.
    const auto generated = generate_greedy(model, prompt, options.max_new_tokens, steering);
    out.generated_text = tok.decode(std::span(generated).subspan(prompt.size()));
    out.option = scan_option_text(out.generated_text).value_or(LikertOption::Unknown);
    return out;
  }

  std::span<const TokenId> tail = prompt;
  const KvCache* cache = options.context_cache;
  if (cache) {
    if (cache->length >= prompt.size()) fail(ErrorCode::ValueError, "context cache covers the whole prompt");
    tail = tail.subspan(cache->length);
  }
  out.logliks = rank_options(model, steering, tail, cache);
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.logliks.size(); ++i)
    if (out.logliks[i] > out.logliks[best]) best = i;
  out.option = kAnswerOptions[best];
  return out;
}

LikertOption answer_item(const ModelBackend& model, const Steering* steering, const Item& item,
                         std::string_view tmpl, const AnswerOptions& options) {
  return answer_item_detailed(model, steering, item, tmpl, options).option;
}

AnswerMap answer_catalog(const ModelBackend& model, const Steering* steering, const Catalog& catalog,
                         const AnswerOptions& options) {
  std::vector<LikertOption> picked(catalog.items.size());
  parallel_for(catalog.items.size(), [&](std::size_t i) {
    picked[i] = answer_item(model, steering, catalog.items[i], kMcTemplate, options);
  });
  AnswerMap out;
  for (std::size_t i = 0; i < picked.size(); ++i) out.emplace(catalog.items[i].id, picked[i]);
  return out;
}

const AnswerMap& subject_answers(const SubjectRecord& subject, const Catalog& catalog) {
  return catalog.name == CatalogName::IPIP120 ? subject.answers120 : subject.answers300;
}

AlignedScoreReport aligned_score(const std::vector<AnswerMap>& model_answers,
                                 const std::vector<SubjectRecord>& subjects, const Catalog& catalog,
                                 bool exclude_train_overlap) {
  if (model_answers.size() != subjects.size())
    fail(ErrorCode::ValueError, "model answers and subjects differ in count");
  if (subjects.empty()) fail(ErrorCode::EmptyInput, "no subjects to score");

  std::vector<const Item*> items;
  for (const auto& item : catalog.items) {
    if (exclude_train_overlap) {
      const bool overlaps = std::any_of(catalog.overlap_map.begin(), catalog.overlap_map.end(),
                                        [&](const auto& kv) { return kv.second == item.id; });
      if (overlaps) continue;
    }
    items.push_back(&item);
  }

  AlignedScoreReport report;
  report.n_subjects = subjects.size();
  report.exclude_train_overlap = exclude_train_overlap;
  for (const Item* item : items) ++report.n_items[trait_index(item->trait)];

  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const AnswerMap& person = subject_answers(subjects[s], catalog);
    std::array<double, kTraitCount> sum{};
    for (const Item* item : items) {
      auto m = model_answers[s].find(item->id);
      if (m == model_answers[s].end())
        fail(ErrorCode::MissingAnswer, "model answer missing for " + item->id + " (subject " + subjects[s].subject_id + ")");
      auto p = person.find(item->id);
      if (p == person.end())
        fail(ErrorCode::MissingAnswer, "subject " + subjects[s].subject_id + " has no answer for " + item->id);
      sum[trait_index(item->trait)] +=
          std::abs(score_option(item->keying, m->second) - score_option(item->keying, p->second));
    }
    for (std::size_t d = 0; d < kTraitCount; ++d)
      if (report.n_items[d] > 0) report.per_dimension[d] += sum[d] / static_cast<double>(report.n_items[d]);
  }
  for (auto& v : report.per_dimension) v /= static_cast<double>(subjects.size());
  for (double v : report.per_dimension) report.composite += v;
  return report;
}

TraitProfile ocean_score(const AnswerMap& model_answers, const Catalog& catalog) {
  return trait_profile(model_answers, catalog);
}

namespace {

AnswerMap shift_answers(const AnswerMap& answers, const Catalog& catalog, int shift) {
  AnswerMap out;
  for (const auto& [id, option] : answers) {
    if (option == LikertOption::Unknown) {
      out.emplace(id, option);
      continue;
    }
    const Keying keying = catalog.item(id).keying;
    const int keyed = std::clamp(score_option(keying, option) + shift, 1, 5);
    const int response = keying == Keying::Positive ? keyed : 6 - keyed;
    out.emplace(id, option_from_response(response));
  }
  return out;
}

}  // namespace

SubjectRecord shift_subject(const SubjectRecord& subject, int shift, const CatalogPair& catalogs) {
  SubjectRecord out = subject;
  out.answers120 = shift_answers(subject.answers120, catalogs.ipip120, shift);
  out.answers300 = shift_answers(subject.answers300, catalogs.ipip300, shift);
  if (out.latent)
    for (auto& v : out.latent->mean) v = std::clamp(v + shift, 1.0, 5.0);
  return out;
}

std::string fewshot_context(const SubjectRecord& subject, const Catalog& catalog120) {
  std::string out;
  for (const auto& item : catalog120.items) {
    auto it = subject.answers120.find(item.id);
    if (it == subject.answers120.end())
      fail(ErrorCode::MissingAnswer, "subject " + subject.subject_id + " has no answer for " + item.id);
    out += item.text;
    out += " Answer: ";
    out += option_text(it->second);
    out += '\n';
  }
  return out;
}

}  // namespace pas
