#include <string>
#include <vector>

#include "doctest.h"

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"
#include "corpex/transforms.hpp"

using namespace corpex;

namespace {

TaggedParagraph fig2_paragraph() {
  return {"fig2",
          {{"Any", Upos::DET},
           {"questions", Upos::NOUN},
           {"contact", Upos::VERB},
           {"us", Upos::PRON},
           {".", Upos::PUNCT}}};
}

std::vector<std::string> surfaces(const TaggedParagraph& p) {
  std::vector<std::string> out;
  for (const Token& t : p.tokens) out.push_back(t.surface);
  return out;
}

TaggedParagraph random_tagged(Rng& rng, int max_len = 40) {
  TaggedParagraph p{"r", {}};
  int n = static_cast<int>(rng.int_in(0, max_len));
  for (int i = 0; i < n; ++i) {
    Upos tag = kAllUpos[rng.below(kUposCount)];
    p.tokens.push_back({"t" + std::to_string(rng.below(50)), tag});
  }
  return p;
}

}  // namespace

TEST_CASE("pos-cont reproduces the worked example") {
  TaggedParagraph out =
      apply_manipulation(fig2_paragraph(), Manipulation::PosContent);
  CHECK(surfaces(out) ==
        std::vector<std::string>{"Any", "NOUN", "VERB", "us", "."});
  // Tags are retained on every surviving token.
  for (const Token& t : out.tokens) CHECK(t.tag.has_value());
  CHECK(out.tokens[1].tag == Upos::NOUN);
  CHECK(out.paragraph_id == "fig2");
}

TEST_CASE("pos-func replaces the complementary side") {
  TaggedParagraph out =
      apply_manipulation(fig2_paragraph(), Manipulation::PosFunction);
  CHECK(surfaces(out) ==
        std::vector<std::string>{"DET", "questions", "contact", "PRON",
                                 "PUNCT"});
}

TEST_CASE("full manipulation is the identity") {
  TaggedParagraph p = fig2_paragraph();
  TaggedParagraph out = apply_manipulation(p, Manipulation::Full);
  CHECK(out.tokens == p.tokens);
}

TEST_CASE("drop modes partition the paragraph") {
  TaggedParagraph p{"d", {{"the", Upos::DET}, {"dog", Upos::NOUN}}};
  CHECK(surfaces(apply_manipulation(p, Manipulation::DropContent)) ==
        std::vector<std::string>{"the"});
  CHECK(surfaces(apply_manipulation(p, Manipulation::DropFunction)) ==
        std::vector<std::string>{"dog"});
}

TEST_CASE("untagged tokens are rejected") {
  TaggedParagraph p{"u", {{"oops", std::nullopt}}};
  CHECK_THROWS_AS(apply_manipulation(p, Manipulation::DropContent), DataError);
}

TEST_CASE("manipulation algebra over random tagged paragraphs") {
  ContentTagSet standard = ContentTagSet::standard();
  Rng rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    TaggedParagraph p = random_tagged(rng);

    TaggedParagraph drop_c = apply_manipulation(p, Manipulation::DropContent);
    TaggedParagraph drop_f = apply_manipulation(p, Manipulation::DropFunction);
    TaggedParagraph pos_c = apply_manipulation(p, Manipulation::PosContent);
    TaggedParagraph pos_f = apply_manipulation(p, Manipulation::PosFunction);

    // The two Drop modes partition the tokens.
    CHECK(drop_c.tokens.size() + drop_f.tokens.size() == p.tokens.size());

    // Pos modes preserve the token count exactly.
    CHECK(pos_c.tokens.size() == p.tokens.size());
    CHECK(pos_f.tokens.size() == p.tokens.size());

    // Composing the Drop modes empties the paragraph, in either order.
    CHECK(apply_manipulation(drop_c, Manipulation::DropFunction)
              .tokens.empty());
    CHECK(apply_manipulation(drop_f, Manipulation::DropContent)
              .tokens.empty());

    // Drop modes are idempotent.
    CHECK(apply_manipulation(drop_c, Manipulation::DropContent).tokens ==
          drop_c.tokens);
    CHECK(apply_manipulation(drop_f, Manipulation::DropFunction).tokens ==
          drop_f.tokens);

    // Pos modes are idempotent because tags are never recomputed.
    CHECK(apply_manipulation(pos_c, Manipulation::PosContent).tokens ==
          pos_c.tokens);
    CHECK(apply_manipulation(pos_f, Manipulation::PosFunction).tokens ==
          pos_f.tokens);

    // Surfaces surviving a Drop appear in the original order.
    size_t cursor = 0;
    for (const Token& t : drop_c.tokens) {
      while (cursor < p.tokens.size() && !(p.tokens[cursor] == t)) ++cursor;
      CHECK(cursor < p.tokens.size());
    }

    // Content tokens of pos_c all carry their tag mnemonic as surface.
    for (const Token& t : pos_c.tokens) {
      if (is_content(*t.tag, standard))
        CHECK(t.surface == to_string(*t.tag));
    }
  }
}

TEST_CASE("manipulations commute with paragraph concatenation") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    TaggedParagraph a = random_tagged(rng, 15);
    TaggedParagraph b = random_tagged(rng, 15);
    TaggedParagraph joined{"j", {}};
    joined.tokens = a.tokens;
    joined.tokens.insert(joined.tokens.end(), b.tokens.begin(),
                         b.tokens.end());
    for (Manipulation m : kAllManipulations) {
      TaggedParagraph whole = apply_manipulation(joined, m);
      TaggedParagraph part_a = apply_manipulation(a, m);
      TaggedParagraph part_b = apply_manipulation(b, m);
      std::vector<Token> concat = part_a.tokens;
      concat.insert(concat.end(), part_b.tokens.begin(), part_b.tokens.end());
      CHECK(whole.tokens == concat);
    }
  }
}

TEST_CASE("manipulation names round-trip for the CLI") {
  for (Manipulation m : kAllManipulations) {
    auto back = manipulation_from_string(to_string(m));
    REQUIRE(back.has_value());
    CHECK(*back == m);
  }
  CHECK(manipulation_from_string("full").has_value());
  CHECK(manipulation_from_string("drop-cont").has_value());
  CHECK(manipulation_from_string("pos-func").has_value());
  CHECK_FALSE(manipulation_from_string("nope").has_value());
}

TEST_CASE("a custom content set changes which side is manipulated") {
  ContentTagSet only_nouns;
  only_nouns.insert(Upos::NOUN);
  TaggedParagraph p = fig2_paragraph();
  TaggedParagraph out =
      apply_manipulation(p, Manipulation::DropContent, only_nouns);
  CHECK(surfaces(out) ==
        std::vector<std::string>{"Any", "contact", "us", "."});
}
