#pragma once

#include <string>

#include "corpex/lexical.hpp"

namespace corpex {

// One training/evaluation example.  `site_id` travels along so splits can be
// made site-disjoint when asked.
struct LabeledParagraph {
  TaggedParagraph paragraph;
  std::string label;
  std::string site_id;
};

}  // namespace corpex
