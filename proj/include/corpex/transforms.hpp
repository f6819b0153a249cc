#pragma once

#include <optional>
#include <string_view>

#include "corpex/lexical.hpp"

namespace corpex {

// The identity condition plus the four input manipulations.
enum class Manipulation { Full, DropContent, DropFunction, PosContent, PosFunction };

inline constexpr Manipulation kAllManipulations[] = {
    Manipulation::Full, Manipulation::DropContent, Manipulation::DropFunction,
    Manipulation::PosContent, Manipulation::PosFunction,
};

// CLI mnemonics: full, drop-cont, drop-func, pos-cont, pos-func.
std::string_view to_string(Manipulation mode);
std::optional<Manipulation> manipulation_from_string(std::string_view s);

// Full: identity.  DropContent/DropFunction: remove tokens whose tag falls
// on that side of the partition.  PosContent/PosFunction: replace those
// tokens' surfaces with the uppercase tag mnemonic, keeping the rest.  Tags
// stay on every surviving token; order is preserved; a paragraph emptied by
// a Drop mode is kept as an empty token sequence.  Manipulated text is never
// re-tokenized or re-tagged downstream.
TaggedParagraph apply_manipulation(const TaggedParagraph& paragraph,
                                   Manipulation mode,
                                   const ContentTagSet& content_set =
                                       ContentTagSet::standard());

}  // namespace corpex
