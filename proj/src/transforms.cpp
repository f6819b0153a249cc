#include "corpex/transforms.hpp"

#include "corpex/errors.hpp"

namespace corpex {

std::string_view to_string(Manipulation mode) {
  switch (mode) {
    case Manipulation::Full: return "full";
    case Manipulation::DropContent: return "drop-cont";
    case Manipulation::DropFunction: return "drop-func";
    case Manipulation::PosContent: return "pos-cont";
    case Manipulation::PosFunction: return "pos-func";
  }
  return "full";
}

std::optional<Manipulation> manipulation_from_string(std::string_view s) {
  for (Manipulation m : kAllManipulations)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

TaggedParagraph apply_manipulation(const TaggedParagraph& paragraph,
                                   Manipulation mode,
                                   const ContentTagSet& content_set) {
  TaggedParagraph out;
  out.paragraph_id = paragraph.paragraph_id;
  if (mode == Manipulation::Full) {
    out.tokens = paragraph.tokens;
    return out;
  }
  out.tokens.reserve(paragraph.tokens.size());
  for (const Token& token : paragraph.tokens) {
    if (!token.tag)
      throw DataError("untagged token '" + token.surface + "' in paragraph '" +
                      paragraph.paragraph_id + "'");
    bool content = is_content(*token.tag, content_set);
    switch (mode) {
      case Manipulation::DropContent:
        if (!content) out.tokens.push_back(token);
        break;
      case Manipulation::DropFunction:
        if (content) out.tokens.push_back(token);
        break;
      case Manipulation::PosContent:
        out.tokens.push_back(
            content ? Token{std::string(to_string(*token.tag)), token.tag}
                    : token);
        break;
      case Manipulation::PosFunction:
        out.tokens.push_back(
            content ? token
                    : Token{std::string(to_string(*token.tag)), token.tag});
        break;
      case Manipulation::Full:
        break;  // handled above
    }
  }
  return out;
}

}  // namespace corpex
