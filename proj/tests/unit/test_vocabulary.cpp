#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "wgram/error.hpp"
#include "wgram/vocabulary.hpp"

using namespace wgram;
using wgram::testing::data_path;

namespace {

Vocabulary small() { return Vocabulary({"a", "b", "ab", "abc", "<eos>", "1", "22"}, "<eos>"); }

}  // namespace

TEST(Vocabulary, RejectsMalformedTables) {
  EXPECT_THROW(Vocabulary({}, "<eos>"), InputError);
  EXPECT_THROW(Vocabulary({"a", "a", "<eos>"}, "<eos>"), InputError);
  EXPECT_THROW(Vocabulary({"a", "b"}, "<eos>"), InputError);
}

TEST(Vocabulary, LookupAndDetokenize) {
  Vocabulary v = small();
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.eos(), 4u);
  EXPECT_EQ(v.find("ab"), std::optional<TokenId>(2));
  EXPECT_FALSE(v.find("zz").has_value());
  std::vector<TokenId> ids{3, 0, 5};
  EXPECT_EQ(v.detokenize(ids), "abca1");
}

TEST(Vocabulary, TokenizeIsGreedyLongestMatch) {
  Vocabulary v = small();
  EXPECT_EQ(tokenize(v, "abcab"), (std::vector<TokenId>{3, 2}));
  EXPECT_EQ(tokenize(v, "aab"), (std::vector<TokenId>{0, 2}));
  EXPECT_EQ(tokenize(v, "221"), (std::vector<TokenId>{6, 5}));
  EXPECT_THROW(tokenize(v, "abz"), InputError);
  // eos text never participates in tokenization
  EXPECT_THROW(tokenize(v, "<eos>"), InputError);
}

TEST(Vocabulary, EscapesRoundTrip) {
  EXPECT_EQ(escape_token("a\nb\t\\"), "a\\nb\\t\\\\");
  EXPECT_EQ(escape_token(std::string("\x01\x7f", 2)), "\\x01\\x7f");
  EXPECT_EQ(unescape_token("\\x41\\n"), "A\n");
  EXPECT_THROW(unescape_token("\\q"), InputError);
  EXPECT_THROW(unescape_token("\\x4"), InputError);
  EXPECT_THROW(unescape_token("abc\\"), InputError);
}

TEST(Vocabulary, FileRoundTripIsBitExact) {
  for (const char* name : {"digits.vocab", "chars12.vocab", "synthetic1000.vocab", "outline.vocab"}) {
    std::ifstream in(data_path(name), std::ios::binary);
    std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Vocabulary v = parse_vocabulary(doc);
    EXPECT_EQ(dump_vocabulary(v), doc) << name;
  }
  EXPECT_EQ(load_vocabulary(data_path("synthetic1000.vocab")).size(), 1000u);
}

TEST(Vocabulary, RandomTokensRoundTrip) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> toks{"<eos>"};
    std::set<std::string> seen{"<eos>"};
    while (toks.size() < 40) {
      std::string t(1 + rng() % 4, '\0');
      for (auto& c : t) c = static_cast<char>(rng() % 256);
      if (seen.insert(t).second) toks.push_back(t);
    }
    Vocabulary v(toks, "<eos>");
    Vocabulary back = parse_vocabulary(dump_vocabulary(v));
    EXPECT_EQ(back.tokens(), v.tokens());
    EXPECT_EQ(back.eos(), v.eos());
    EXPECT_EQ(back.fingerprint(), v.fingerprint());
  }
}

TEST(Vocabulary, RequiresEosHeader) {
  EXPECT_THROW(parse_vocabulary("a\nb\n"), InputError);
  EXPECT_THROW(parse_vocabulary(""), InputError);
}

TEST(Vocabulary, FingerprintTracksContent) {
  Vocabulary a({"x", "y", "<e>"}, "<e>");
  Vocabulary b({"x", "z", "<e>"}, "<e>");
  Vocabulary c({"y", "x", "<e>"}, "<e>");
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.fingerprint(), Vocabulary({"x", "y", "<e>"}, "<e>").fingerprint());
}

TEST(Classify, DigitsOnDigitVocabulary) {
  Vocabulary v = load_vocabulary(data_path("digits.vocab"));
  EXPECT_EQ(classify(v, CharClass::digit()).to_string(), "{0-9}");
  EXPECT_EQ(classify(v, CharClass::literal({'.'})).to_string(), "{10}");
  // eos is never a member, even of `any`
  EXPECT_FALSE(classify(v, CharClass::any()).contains(v.eos()));
}

TEST(Classify, WholeTokenMembership) {
  Vocabulary v({"12", "1a", "a", " ", "\t", "<eos>", "\xc3\xa9"}, "<eos>");
  EXPECT_EQ(classify(v, CharClass::digit()), (TokenSet{0}));
  EXPECT_EQ(classify(v, CharClass::word()), (TokenSet{0, 1, 2}));
  EXPECT_EQ(classify(v, CharClass::whitespace()), (TokenSet{3, 4}));
  // negated sets stay within ASCII; `any` does not
  EXPECT_FALSE(classify(v, CharClass::negated({'x'})).contains(6));
  EXPECT_TRUE(classify(v, CharClass::any()).contains(6));
}

TEST(Classify, MonotoneInTheCharacterSet) {
  Vocabulary v = load_vocabulary(data_path("outline.vocab"));
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<unsigned char> small_set, big_set;
    for (int c = 0x20; c < 0x7f; ++c) {
      bool in_small = rng() % 3 == 0;
      if (in_small) small_set.insert(static_cast<unsigned char>(c));
      if (in_small || rng() % 2) big_set.insert(static_cast<unsigned char>(c));
    }
    if (small_set.empty()) continue;
    TokenSet a = classify(v, CharClass::literal(small_set));
    TokenSet b = classify(v, CharClass::literal(big_set));
    EXPECT_TRUE(a.is_subset_of(b));
    // and antitone for the negated form
    TokenSet na = classify(v, CharClass::negated(small_set));
    TokenSet nb = classify(v, CharClass::negated(big_set));
    EXPECT_TRUE(nb.is_subset_of(na));
  }
}
