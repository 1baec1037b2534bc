#pragma once

#include <string>
#include <string_view>

namespace pas {

/// Multiple-choice template; `{statement}` is replaced by the item text.
inline constexpr std::string_view kMcTemplate =
    "Question: Given a statement of you: \"{statement}\". Please choose from the following options to identify "
    "how accurately this statement describes you.\nOptions:\n(A). Very Accurate\n(B). Moderately Accurate\n"
    "(C). Neither Accurate Nor Inaccurate\n(D). Moderately Inaccurate\n(E). Very Inaccurate\nAnswer: ";

/// Probe prompt; the answer word ("Yes" / "No") follows directly.
inline constexpr std::string_view kProbeTemplate =
    "Question: Given a statement of you: '{statement}', Do you agree? Answer: ";

inline constexpr std::string_view kStatementSlot = "{statement}";

struct TemplateParts {
  std::string_view before;
  std::string_view after;
};

/// Splits a template at its single `{statement}` slot.
TemplateParts split_template(std::string_view tmpl);

std::string render_template(std::string_view tmpl, std::string_view statement);

}  // namespace pas
