#include "pas/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

#include "pas/error.hpp"

namespace pas {

namespace {

bool is_special(const std::string& s) { return s.size() >= 2 && s.front() == '<' && s.back() == '>'; }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Tokenizer::Tokenizer(const Vocabulary& vocab) : vocab_(&vocab) {
  for (TokenId id = 0; id < static_cast<TokenId>(vocab.tokens.size()); ++id) {
    const auto& s = vocab.tokens[id];
    if (s.rfind("<w:", 0) == 0) buckets_.push_back(id);
    else if (!is_special(s) && !s.empty()) literals_.emplace_back(s, id);
  }
  std::stable_sort(literals_.begin(), literals_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  auto b = role("bos");
  if (!b) fail(ErrorCode::VocabError, "vocabulary has no bos role");
  bos_ = *b;
}

std::optional<TokenId> Tokenizer::role(const std::string& name) const {
  auto it = vocab_->roles.find(name);
  if (it == vocab_->roles.end()) return std::nullopt;
  return it->second;
}

std::string Tokenizer::marker_role(TraitDimension trait, Keying keying) {
  return "marker." + std::string(trait_name(trait)) + (keying == Keying::Positive ? ".+" : ".-");
}

std::optional<TokenId> Tokenizer::marker(TraitDimension trait, Keying keying) const {
  return role(marker_role(trait, keying));
}

std::vector<TokenId> Tokenizer::encode_text(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool matched = false;
    for (const auto& [lit, id] : literals_) {
      if (text.compare(pos, lit.size(), lit) == 0) {
        out.push_back(id);
        pos += lit.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (buckets_.empty()) fail(ErrorCode::VocabError, "no word buckets for '" + std::string(text.substr(pos, end - pos)) + "'");
    out.push_back(buckets_[fnv1a(text.substr(pos, end - pos)) % buckets_.size()]);
    pos = end;
  }
  return out;
}

std::vector<TokenId> Tokenizer::encode_prompt(const PromptSpec& p) const {
  std::vector<TokenId> out{bos_};
  auto append = [&](std::string_view s) {
    auto t = encode_text(s);
    out.insert(out.end(), t.begin(), t.end());
  };
  append(p.context);
  append(p.before);
  if (p.item) {
    if (auto m = marker(p.item->trait, p.item->keying)) out.push_back(*m);
    append(p.item->text);
  }
  append(p.after);
  return out;
}

std::string Tokenizer::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (t < 0 || t >= static_cast<TokenId>(vocab_->tokens.size())) fail(ErrorCode::VocabError, "token id out of range");
    const auto& s = vocab_->tokens[t];
    if (!is_special(s)) out += s;
  }
  return out;
}

std::vector<TokenId> Tokenizer::option_tokens(LikertOption option) const {
  return encode_text(option_text(option));
}

}  // namespace pas
