#include "corpex/lexical.hpp"

#include <algorithm>
#include <fstream>

#include "corpex/errors.hpp"
#include "corpex/text.hpp"

namespace corpex {

namespace {

constexpr std::array<std::string_view, kUposCount> kUposNames = {
    "ADJ",  "ADP",   "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
    "PART", "PRON",  "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
};

// Punctuation marks recognised beyond ASCII; each entry is one UTF-8 char.
constexpr std::string_view kWidePunct[] = {
    "\xE2\x80\xA6",  // …
    "\xE2\x80\x9C",  // “
    "\xE2\x80\x9D",  // ”
    "\xE2\x80\x98",  // ‘
    "\xE2\x80\x99",  // ’
    "\xE2\x80\x93",  // –
    "\xE2\x80\x94",  // —
    "\xC2\xAB",      // «
    "\xC2\xBB",      // »
};

size_t utf8_char_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;  // sanitised input should not get here
}

bool is_ascii_punct_char(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Length in bytes of a leading punctuation character, or 0.
size_t punct_char_len(std::string_view s) {
  if (s.empty()) return 0;
  unsigned char lead = static_cast<unsigned char>(s[0]);
  if (lead < 0x80) return is_ascii_punct_char(s[0]) ? 1 : 0;
  size_t len = utf8_char_len(lead);
  if (len > s.size()) return 0;
  std::string_view ch = s.substr(0, len);
  for (std::string_view p : kWidePunct)
    if (ch == p) return len;
  return 0;
}

// Splits a pure-punctuation segment into runs of the identical character:
// "..." is one token, ".)" is two.
void emit_punct_runs(std::string_view segment, std::vector<Token>& out) {
  size_t i = 0;
  while (i < segment.size()) {
    size_t len = punct_char_len(segment.substr(i));
    if (len == 0) len = utf8_char_len(static_cast<unsigned char>(segment[i]));
    std::string_view ch = segment.substr(i, len);
    size_t j = i + len;
    while (j < segment.size() && segment.substr(j, len) == ch) j += len;
    out.push_back({std::string(segment.substr(i, j - i)), std::nullopt});
    i = j;
  }
}

}  // namespace

std::string_view to_string(Upos tag) {
  return kUposNames[static_cast<size_t>(tag)];
}

std::optional<Upos> upos_from_string(std::string_view s) {
  for (size_t i = 0; i < kUposCount; ++i)
    if (kUposNames[i] == s) return static_cast<Upos>(i);
  return std::nullopt;
}

ContentTagSet ContentTagSet::standard() {
  ContentTagSet set;
  for (Upos t : {Upos::ADJ, Upos::ADV, Upos::NOUN, Upos::PROPN, Upos::VERB,
                 Upos::X, Upos::NUM})
    set.insert(t);
  return set;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  for (std::string_view word : split_whitespace(text)) {
    // Leading punctuation segment.
    size_t lead_end = 0;
    while (lead_end < word.size()) {
      size_t len = punct_char_len(word.substr(lead_end));
      if (len == 0) break;
      lead_end += len;
    }
    if (lead_end == word.size()) {  // nothing but punctuation
      emit_punct_runs(word, tokens);
      continue;
    }
    // Trailing punctuation segment: find where it starts by walking the
    // character boundaries of the core.
    size_t trail_start = word.size();
    size_t pos = lead_end;
    size_t last_non_punct_end = lead_end;
    while (pos < word.size()) {
      size_t plen = punct_char_len(word.substr(pos));
      size_t clen =
          plen ? plen : utf8_char_len(static_cast<unsigned char>(word[pos]));
      pos += clen;
      if (!plen) last_non_punct_end = pos;
    }
    trail_start = last_non_punct_end;

    emit_punct_runs(word.substr(0, lead_end), tokens);
    tokens.push_back(
        {std::string(word.substr(lead_end, trail_start - lead_end)),
         std::nullopt});
    emit_punct_runs(word.substr(trail_start), tokens);
  }
  return tokens;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].surface;
  }
  return out;
}

TaggedParagraph tag(std::string paragraph_id, std::vector<Token> tokens,
                    const TaggerProvider& tagger) {
  std::vector<Upos> tags = tagger.tag_tokens(paragraph_id, tokens);
  if (tags.size() != tokens.size())
    throw DataError("tagger '" + tagger.name() + "' returned " +
                    std::to_string(tags.size()) + " tags for " +
                    std::to_string(tokens.size()) + " tokens");
  for (size_t i = 0; i < tokens.size(); ++i) tokens[i].tag = tags[i];
  return {std::move(paragraph_id), std::move(tokens)};
}

TaggedParagraph tag_paragraph(const Paragraph& paragraph,
                              const TaggerProvider& tagger) {
  return tag(paragraph.id, tokenize(paragraph.text), tagger);
}

namespace {

// Function-word heavy most-frequent-tag table; keeps the hermetic tagger
// from calling everything a NOUN.  All keys lowercase.
const std::unordered_map<std::string, Upos>& builtin_lexicon() {
  static const std::unordered_map<std::string, Upos> table = {
      // determiners
      {"a", Upos::DET}, {"an", Upos::DET}, {"the", Upos::DET},
      {"this", Upos::DET}, {"these", Upos::DET}, {"those", Upos::DET},
      {"any", Upos::DET}, {"some", Upos::DET}, {"no", Upos::DET},
      {"every", Upos::DET}, {"each", Upos::DET}, {"all", Upos::DET},
      {"both", Upos::DET}, {"either", Upos::DET}, {"neither", Upos::DET},
      {"another", Upos::DET}, {"such", Upos::DET}, {"which", Upos::DET},
      {"whose", Upos::DET}, {"what", Upos::DET},
      // adpositions
      {"of", Upos::ADP}, {"in", Upos::ADP}, {"on", Upos::ADP},
      {"at", Upos::ADP}, {"by", Upos::ADP}, {"for", Upos::ADP},
      {"with", Upos::ADP}, {"from", Upos::ADP}, {"to", Upos::ADP},
      {"into", Upos::ADP}, {"over", Upos::ADP}, {"under", Upos::ADP},
      {"between", Upos::ADP}, {"through", Upos::ADP}, {"during", Upos::ADP},
      {"about", Upos::ADP}, {"against", Upos::ADP}, {"among", Upos::ADP},
      {"across", Upos::ADP}, {"behind", Upos::ADP}, {"within", Upos::ADP},
      {"without", Upos::ADP}, {"near", Upos::ADP}, {"off", Upos::ADP},
      {"above", Upos::ADP}, {"below", Upos::ADP}, {"around", Upos::ADP},
      {"upon", Upos::ADP}, {"per", Upos::ADP}, {"via", Upos::ADP},
      // pronouns
      {"i", Upos::PRON}, {"you", Upos::PRON}, {"he", Upos::PRON},
      {"she", Upos::PRON}, {"it", Upos::PRON}, {"we", Upos::PRON},
      {"they", Upos::PRON}, {"me", Upos::PRON}, {"him", Upos::PRON},
      {"her", Upos::PRON}, {"us", Upos::PRON}, {"them", Upos::PRON},
      {"mine", Upos::PRON}, {"yours", Upos::PRON}, {"hers", Upos::PRON},
      {"ours", Upos::PRON}, {"theirs", Upos::PRON}, {"myself", Upos::PRON},
      {"yourself", Upos::PRON}, {"himself", Upos::PRON},
      {"herself", Upos::PRON}, {"itself", Upos::PRON},
      {"ourselves", Upos::PRON}, {"themselves", Upos::PRON},
      {"who", Upos::PRON}, {"whom", Upos::PRON}, {"someone", Upos::PRON},
      {"anyone", Upos::PRON}, {"everyone", Upos::PRON},
      {"nothing", Upos::PRON}, {"something", Upos::PRON},
      {"anything", Upos::PRON}, {"everything", Upos::PRON},
      // auxiliaries
      {"am", Upos::AUX}, {"is", Upos::AUX}, {"are", Upos::AUX},
      {"was", Upos::AUX}, {"were", Upos::AUX}, {"be", Upos::AUX},
      {"been", Upos::AUX}, {"being", Upos::AUX}, {"do", Upos::AUX},
      {"does", Upos::AUX}, {"did", Upos::AUX}, {"have", Upos::AUX},
      {"has", Upos::AUX}, {"had", Upos::AUX}, {"will", Upos::AUX},
      {"would", Upos::AUX}, {"shall", Upos::AUX}, {"should", Upos::AUX},
      {"can", Upos::AUX}, {"could", Upos::AUX}, {"may", Upos::AUX},
      {"might", Upos::AUX}, {"must", Upos::AUX},
      // particles & negation
      {"not", Upos::PART}, {"n't", Upos::PART},
      // conjunctions
      {"and", Upos::CCONJ}, {"or", Upos::CCONJ}, {"but", Upos::CCONJ},
      {"nor", Upos::CCONJ}, {"plus", Upos::CCONJ},
      {"if", Upos::SCONJ}, {"because", Upos::SCONJ}, {"while", Upos::SCONJ},
      {"although", Upos::SCONJ}, {"though", Upos::SCONJ},
      {"since", Upos::SCONJ}, {"unless", Upos::SCONJ},
      {"whereas", Upos::SCONJ}, {"that", Upos::SCONJ},
      {"whether", Upos::SCONJ},
      // adverbs
      {"very", Upos::ADV}, {"also", Upos::ADV}, {"just", Upos::ADV},
      {"only", Upos::ADV}, {"even", Upos::ADV}, {"still", Upos::ADV},
      {"too", Upos::ADV}, {"so", Upos::ADV}, {"now", Upos::ADV},
      {"then", Upos::ADV}, {"here", Upos::ADV}, {"there", Upos::ADV},
      {"when", Upos::ADV}, {"where", Upos::ADV}, {"why", Upos::ADV},
      {"how", Upos::ADV}, {"again", Upos::ADV}, {"never", Upos::ADV},
      {"always", Upos::ADV}, {"often", Upos::ADV}, {"soon", Upos::ADV},
      {"already", Upos::ADV}, {"perhaps", Upos::ADV}, {"maybe", Upos::ADV},
      {"quite", Upos::ADV}, {"rather", Upos::ADV}, {"almost", Upos::ADV},
      // interjections
      {"hello", Upos::INTJ}, {"hi", Upos::INTJ}, {"hey", Upos::INTJ},
      {"oh", Upos::INTJ}, {"wow", Upos::INTJ}, {"yes", Upos::INTJ},
      {"please", Upos::INTJ}, {"thanks", Upos::INTJ},
      // numerals written out
      {"zero", Upos::NUM}, {"one", Upos::NUM}, {"two", Upos::NUM},
      {"three", Upos::NUM}, {"four", Upos::NUM}, {"five", Upos::NUM},
      {"six", Upos::NUM}, {"seven", Upos::NUM}, {"eight", Upos::NUM},
      {"nine", Upos::NUM}, {"ten", Upos::NUM}, {"dozen", Upos::NUM},
      {"hundred", Upos::NUM}, {"thousand", Upos::NUM},
      {"million", Upos::NUM}, {"billion", Upos::NUM},
      // frequent verbs that the suffix rules miss
      {"get", Upos::VERB}, {"got", Upos::VERB}, {"make", Upos::VERB},
      {"made", Upos::VERB}, {"take", Upos::VERB}, {"took", Upos::VERB},
      {"buy", Upos::VERB}, {"sell", Upos::VERB}, {"send", Upos::VERB},
      {"sent", Upos::VERB}, {"need", Upos::VERB}, {"want", Upos::VERB},
      {"use", Upos::VERB}, {"go", Upos::VERB}, {"went", Upos::VERB},
      {"come", Upos::VERB}, {"came", Upos::VERB}, {"know", Upos::VERB},
      {"think", Upos::VERB}, {"see", Upos::VERB}, {"say", Upos::VERB},
      {"said", Upos::VERB}, {"contact", Upos::VERB}, {"ask", Upos::VERB},
      // frequent short nouns that would otherwise land in X
      {"time", Upos::NOUN}, {"day", Upos::NOUN}, {"man", Upos::NOUN},
      {"men", Upos::NOUN}, {"way", Upos::NOUN}, {"year", Upos::NOUN},
      {"thing", Upos::NOUN}, {"site", Upos::NOUN}, {"shop", Upos::NOUN},
      // frequent adjectives
      {"good", Upos::ADJ}, {"new", Upos::ADJ}, {"free", Upos::ADJ},
      {"safe", Upos::ADJ}, {"best", Upos::ADJ}, {"high", Upos::ADJ},
      {"low", Upos::ADJ}, {"big", Upos::ADJ}, {"small", Upos::ADJ},
      {"real", Upos::ADJ}, {"other", Upos::ADJ}, {"more", Upos::ADJ},
      {"most", Upos::ADJ}, {"own", Upos::ADJ}, {"same", Upos::ADJ},
  };
  return table;
}

bool all_chars(std::string_view s, bool (*pred)(char)) {
  return !s.empty() && std::all_of(s.begin(), s.end(), pred);
}

bool is_number_shape(std::string_view s) {
  if (s.empty()) return false;
  if (is_ascii_digit(s[0])) return true;  // 5, 5mg, 2:30, 24/7
  if (s.size() >= 2 && (s[0] == '+' || s[0] == '-' || s[0] == '.') &&
      is_ascii_digit(s[1]))
    return true;  // -3, .5, +7
  return false;
}

// PUNCT-proper characters; other punctuation-class characters are symbols.
bool is_punct_proper(std::string_view ch) {
  if (ch.size() == 1) {
    constexpr std::string_view set = ".,;:!?'\"()[]{}-_/\\`";
    return set.find(ch[0]) != std::string_view::npos;
  }
  for (std::string_view p : kWidePunct)
    if (ch == p) return true;
  return false;
}

// Token is sentence-final punctuation: ".", "!", "?", "...", "…".
bool is_sentence_final(std::string_view surface) {
  if (surface.empty()) return false;
  size_t i = 0;
  while (i < surface.size()) {
    if (surface[i] == '.' || surface[i] == '!' || surface[i] == '?') {
      ++i;
    } else if (surface.substr(i, 3) == "\xE2\x80\xA6") {
      i += 3;
    } else {
      return false;
    }
  }
  return true;
}

enum class CharClass { Punct, Symbol, Other };

CharClass classify_punct_token(std::string_view s) {
  bool any_symbol = false;
  size_t i = 0;
  while (i < s.size()) {
    size_t len = punct_char_len(s.substr(i));
    if (len == 0) return CharClass::Other;  // has letters or digits
    if (!is_punct_proper(s.substr(i, len))) any_symbol = true;
    i += len;
  }
  return any_symbol ? CharClass::Symbol : CharClass::Punct;
}

}  // namespace

BaselineTagger::BaselineTagger() : lexicon_(builtin_lexicon()) {}

BaselineTagger::BaselineTagger(std::unordered_map<std::string, Upos> lexicon,
                               bool include_builtin) {
  if (include_builtin) lexicon_ = builtin_lexicon();
  for (auto& [surface, tag] : lexicon) lexicon_[surface] = tag;
}

BaselineTagger BaselineTagger::from_file(
    const std::filesystem::path& lexicon_tsv, bool include_builtin) {
  return BaselineTagger(read_lexicon_tsv(lexicon_tsv), include_builtin);
}

std::vector<Upos> BaselineTagger::tag_tokens(
    std::string_view, std::span<const Token> tokens) const {
  std::vector<Upos> tags;
  tags.reserve(tokens.size());
  bool sentence_initial = true;
  for (const Token& token : tokens) {
    const std::string& s = token.surface;
    std::optional<Upos> out;

    if (auto it = lexicon_.find(s); it != lexicon_.end()) {
      out = it->second;
    } else if (auto low = lexicon_.find(ascii_lower(s)); low != lexicon_.end()) {
      out = low->second;
    } else if (is_number_shape(s)) {
      out = Upos::NUM;
    } else if (CharClass cls = classify_punct_token(s);
               cls != CharClass::Other) {
      out = cls == CharClass::Punct ? Upos::PUNCT : Upos::SYM;
    } else {
      std::string low = ascii_lower(s);
      bool allcaps = s.size() >= 2 && all_chars(s, is_ascii_upper);
      if (low.size() >= 4 && low.ends_with("ly")) {
        out = Upos::ADV;
      } else if (low.size() >= 5 && low.ends_with("ing")) {
        out = Upos::VERB;
      } else if (low.size() >= 4 && low.ends_with("ed")) {
        out = Upos::VERB;
      } else if (allcaps || (!sentence_initial && is_ascii_upper(s[0]))) {
        out = Upos::PROPN;
      } else if (s.size() <= 4) {
        out = Upos::X;  // unknown short tokens: codes, fragments, noise
      } else {
        out = Upos::NOUN;
      }
    }
    tags.push_back(*out);
    sentence_initial = is_sentence_final(s);
  }
  return tags;
}

ConlluTagger::ConlluTagger(const std::vector<std::filesystem::path>& files) {
  for (const auto& file : files) {
    for (TaggedParagraph& sentence : read_conllu(file)) {
      auto [it, inserted] =
          sentences_.emplace(sentence.paragraph_id, std::move(sentence.tokens));
      if (!inserted)
        throw DataError("duplicate sent_id '" + it->first + "' in " +
                        file.string());
    }
  }
}

std::vector<Upos> ConlluTagger::tag_tokens(
    std::string_view paragraph_id, std::span<const Token> tokens) const {
  auto it = sentences_.find(std::string(paragraph_id));
  if (it == sentences_.end())
    throw DataError("no tagged sentence for paragraph id '" +
                    std::string(paragraph_id) + "'");
  const std::vector<Token>& recorded = it->second;
  if (recorded.size() != tokens.size())
    throw DataError("token count mismatch for paragraph '" +
                    std::string(paragraph_id) + "': tagged file has " +
                    std::to_string(recorded.size()) + ", text tokenizes to " +
                    std::to_string(tokens.size()));
  std::vector<Upos> tags;
  tags.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (recorded[i].surface != tokens[i].surface)
      throw DataError("surface mismatch for paragraph '" +
                      std::string(paragraph_id) + "' token " +
                      std::to_string(i + 1) + ": tagged file has '" +
                      recorded[i].surface + "', text has '" +
                      tokens[i].surface + "'");
    tags.push_back(*recorded[i].tag);
  }
  return tags;
}

std::vector<TaggedParagraph> read_conllu(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read CoNLL-U file: " + path.string());
  std::vector<TaggedParagraph> paragraphs;
  TaggedParagraph current;
  size_t line_no = 0;
  size_t sentence_no = 0;
  bool in_sentence = false;
  std::string line;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
  auto flush = [&] {
    if (!in_sentence) return;
    ++sentence_no;
    if (current.paragraph_id.empty())
      current.paragraph_id = "s" + std::to_string(sentence_no);
    paragraphs.push_back(std::move(current));
    current = {};
    in_sentence = false;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      std::string_view view = line;
      size_t eq = view.find('=');
      if (eq != std::string_view::npos) {
        std::string key = collapse_whitespace(view.substr(1, eq - 1));
        if (key == "sent_id") {
          current.paragraph_id =
              collapse_whitespace(view.substr(eq + 1));
          in_sentence = true;
        }
      }
      continue;
    }
    // Token line: tab-separated, at least ID FORM LEMMA UPOS.
    std::vector<std::string_view> cols;
    {
      std::string_view view = line;
      size_t start = 0;
      while (true) {
        size_t tab = view.find('\t', start);
        cols.push_back(view.substr(start, tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
    }
    if (cols.size() < 4)
      throw DataError(where() + ": expected at least 4 tab-separated columns");
    std::string_view id_col = cols[0];
    if (id_col.find('-') != std::string_view::npos ||
        id_col.find('.') != std::string_view::npos)
      continue;  // multiword-token ranges and empty nodes carry no UPOS
    if (cols[1].empty())
      throw DataError(where() + ": empty FORM");
    auto tag = upos_from_string(cols[3]);
    if (!tag)
      throw DataError(where() + ": unknown UPOS tag '" + std::string(cols[3]) +
                      "'");
    in_sentence = true;
    current.tokens.push_back({std::string(cols[1]), *tag});
  }
  flush();
  return paragraphs;
}

void write_conllu(std::span<const TaggedParagraph> paragraphs,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CoNLL-U file: " + path.string());
  for (const TaggedParagraph& p : paragraphs) {
    out << "# sent_id = " << p.paragraph_id << '\n';
    for (size_t i = 0; i < p.tokens.size(); ++i) {
      const Token& t = p.tokens[i];
      if (!t.tag)
        throw DataError("untagged token in paragraph '" + p.paragraph_id +
                        "'");
      out << (i + 1) << '\t' << t.surface << "\t_\t" << to_string(*t.tag)
          << "\t_\t_\t_\t_\t_\t_\n";
    }
    out << '\n';
  }
}

std::unordered_map<std::string, Upos> read_lexicon_tsv(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read lexicon file: " + path.string());
  std::unordered_map<std::string, Upos> lexicon;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'surface<TAB>UPOS'");
    std::string surface = line.substr(0, tab);
    std::string tag_name = collapse_whitespace(line.substr(tab + 1));
    auto tag = upos_from_string(tag_name);
    if (!tag)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": unknown UPOS tag '" + tag_name + "'");
    lexicon[surface] = *tag;
  }
  return lexicon;
}

}  // namespace corpex
