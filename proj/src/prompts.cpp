#include "pas/prompts.hpp"

#include "pas/error.hpp"

namespace pas {

TemplateParts split_template(std::string_view tmpl) {
  const auto pos = tmpl.find(kStatementSlot);
  if (pos == std::string_view::npos || tmpl.find(kStatementSlot, pos + 1) != std::string_view::npos)
    fail(ErrorCode::ValueError, "template must contain exactly one {statement} slot");
  return {tmpl.substr(0, pos), tmpl.substr(pos + kStatementSlot.size())};
}

std::string render_template(std::string_view tmpl, std::string_view statement) {
  const auto parts = split_template(tmpl);
  std::string out(parts.before);
  out += statement;
  out += parts.after;
  return out;
}

}  // namespace pas
