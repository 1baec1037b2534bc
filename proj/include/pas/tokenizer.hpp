#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pas/checkpoint.hpp"
#include "pas/psychometrics.hpp"

namespace pas {

/// A prompt with one statement slot. `item` supplies the statement text and,
/// when the vocabulary has them, the (trait, keying) marker token emitted just
/// before the statement.
struct PromptSpec {
  std::string_view context;  // optional system prefix, encoded as plain text
  std::string_view before;
  const Item* item = nullptr;
  std::string_view after;
};

/// Encoder for the synthetic template vocabulary: literal tokens (template
/// segments, option strings, Yes/No, ...) are matched longest-first; any other
/// whitespace-delimited word hashes into a `<w:NN>` bucket.
class Tokenizer {
 public:
  explicit Tokenizer(const Vocabulary& vocab);

  std::vector<TokenId> encode_text(std::string_view text) const;
  /// BOS + context + before + [marker] + statement + after.
  std::vector<TokenId> encode_prompt(const PromptSpec& prompt) const;
  /// Concatenated literal strings; special tokens decode to nothing.
  std::string decode(std::span<const TokenId> tokens) const;

  std::optional<TokenId> role(const std::string& name) const;
  TokenId bos() const { return bos_; }
  std::optional<TokenId> eos() const { return role("eos"); }
  std::optional<TokenId> marker(TraitDimension trait, Keying keying) const;
  std::vector<TokenId> option_tokens(LikertOption option) const;

  static std::string marker_role(TraitDimension trait, Keying keying);

 private:
  const Vocabulary* vocab_;
  TokenId bos_ = 0;
  std::vector<std::pair<std::string, TokenId>> literals_;  // longest first
  std::vector<TokenId> buckets_;
};

}  // namespace pas
