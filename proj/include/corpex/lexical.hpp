#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpex/corpus.hpp"

namespace corpex {

// The 17 universal POS tags.
enum class Upos : uint8_t {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
  PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X,
};

inline constexpr size_t kUposCount = 17;

inline constexpr std::array<Upos, kUposCount> kAllUpos = {
    Upos::ADJ,  Upos::ADP,   Upos::ADV,  Upos::AUX,   Upos::CCONJ, Upos::DET,
    Upos::INTJ, Upos::NOUN,  Upos::NUM,  Upos::PART,  Upos::PRON,  Upos::PROPN,
    Upos::PUNCT, Upos::SCONJ, Upos::SYM, Upos::VERB,  Upos::X,
};

std::string_view to_string(Upos tag);
std::optional<Upos> upos_from_string(std::string_view s);

struct Token {
  std::string surface;            // non-empty, no whitespace
  std::optional<Upos> tag;        // absent until tagged

  bool operator==(const Token&) const = default;
};

struct TaggedParagraph {
  std::string paragraph_id;
  std::vector<Token> tokens;  // every token carries a tag
};

// Which tags count as content words; everything else is a function word.
class ContentTagSet {
 public:
  ContentTagSet() = default;

  // {ADJ, ADV, NOUN, PROPN, VERB, X, NUM}
  static ContentTagSet standard();

  void insert(Upos tag) { mask_ |= bit(tag); }
  bool contains(Upos tag) const { return mask_ & bit(tag); }
  uint32_t mask() const { return mask_; }

  bool operator==(const ContentTagSet&) const = default;

 private:
  static uint32_t bit(Upos tag) { return 1u << static_cast<unsigned>(tag); }
  uint32_t mask_ = 0;
};

inline bool is_content(Upos tag, const ContentTagSet& set) {
  return set.contains(tag);
}
inline bool is_function(Upos tag, const ContentTagSet& set) {
  return !set.contains(tag);
}

// Deterministic rule tokenizer: split on whitespace, then peel leading and
// trailing punctuation characters off each piece as separate tokens (runs of
// the same character stay together, so "wait..." gives ["wait", "..."]).
// Internal punctuation is preserved: "250mgml", "2:30", "don't" stay whole.
std::vector<Token> tokenize(std::string_view text);

// Single-space join of the surfaces.
std::string detokenize(std::span<const Token> tokens);

class TaggerProvider {
 public:
  virtual ~TaggerProvider() = default;

  // One tag per token, in order.  Implementations must be safe to call from
  // several workers at once.
  virtual std::vector<Upos> tag_tokens(std::string_view paragraph_id,
                                       std::span<const Token> tokens) const = 0;
  virtual std::string name() const = 0;
};

TaggedParagraph tag(std::string paragraph_id, std::vector<Token> tokens,
                    const TaggerProvider& tagger);
TaggedParagraph tag_paragraph(const Paragraph& paragraph,
                              const TaggerProvider& tagger);

// Lexicon lookup with suffix/shape fallbacks; immutable after construction.
//
// Rule order per token: exact lexicon match, lowercased lexicon match,
// number shapes -> NUM, pure punctuation -> PUNCT, pure symbols -> SYM,
// suffix rules (-ly -> ADV, -ing/-ed -> VERB), capitalized while not
// sentence-initial (or ALLCAPS anywhere) -> PROPN, unknown short tokens
// (<= 4 chars) -> X, fallback NOUN.
class BaselineTagger : public TaggerProvider {
 public:
  // Built-in function-word lexicon only.
  BaselineTagger();
  // Explicit entries; optionally layered over the built-in lexicon
  // (explicit entries win).
  explicit BaselineTagger(std::unordered_map<std::string, Upos> lexicon,
                          bool include_builtin = true);
  // TSV "surface<TAB>UPOS" per line.
  static BaselineTagger from_file(const std::filesystem::path& lexicon_tsv,
                                  bool include_builtin = true);

  std::vector<Upos> tag_tokens(std::string_view paragraph_id,
                               std::span<const Token> tokens) const override;
  std::string name() const override { return "baseline"; }

 private:
  std::unordered_map<std::string, Upos> lexicon_;
};

// Serves tags recorded in CoNLL-U files, keyed by sent_id and matched
// against surfaces.  Fails loudly on unknown ids or surface drift.
class ConlluTagger : public TaggerProvider {
 public:
  explicit ConlluTagger(const std::vector<std::filesystem::path>& files);

  std::vector<Upos> tag_tokens(std::string_view paragraph_id,
                               std::span<const Token> tokens) const override;
  std::string name() const override { return "conllu"; }

  size_t size() const { return sentences_.size(); }

 private:
  std::unordered_map<std::string, std::vector<Token>> sentences_;
};

// CoNLL-U subset: columns ID, FORM and UPOS are honored, the rest are
// written as "_" and ignored on read.  Multiword-token and empty-node lines
// (ID containing "-" or ".") are skipped.
std::vector<TaggedParagraph> read_conllu(const std::filesystem::path& path);
void write_conllu(std::span<const TaggedParagraph> paragraphs,
                  const std::filesystem::path& path);

// TSV "surface<TAB>UPOS" lexicon loader.
std::unordered_map<std::string, Upos> read_lexicon_tsv(
    const std::filesystem::path& path);

}  // namespace corpex
