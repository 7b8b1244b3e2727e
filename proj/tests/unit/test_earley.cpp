#include <gtest/gtest.h>

#include <functional>
#include <cctype>
#include <map>
#include <set>

#include "wgram/earley.hpp"

using namespace wgram::earley;

namespace {

// Grammar in Chomsky normal form, for the CYK oracle.
struct Cnf {
  std::vector<std::pair<char, std::string>> rules;  // A -> "BC" or A -> "a"
  char start = 'S';
  bool accepts_empty = false;
};

bool cyk(const Cnf& g, const std::string& w) {
  if (w.empty()) return g.accepts_empty;
  const std::size_t n = w.size();
  std::vector<std::vector<std::set<char>>> t(n, std::vector<std::set<char>>(n + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [a, rhs] : g.rules)
      if (rhs.size() == 1 && rhs[0] == w[i]) t[i][1].insert(a);
  for (std::size_t len = 2; len <= n; ++len)
    for (std::size_t i = 0; i + len <= n; ++i)
      for (std::size_t k = 1; k < len; ++k)
        for (const auto& [a, rhs] : g.rules)
          if (rhs.size() == 2 && t[i][k].count(rhs[0]) && t[i + k][len - k].count(rhs[1])) t[i][len].insert(a);
  return t[0][n].count(g.start) > 0;
}

struct Built {
  Grammar grammar;
  std::map<char, Symbol> sym;
};

// Nonterminals are upper case, terminals lower case.
Built build(const std::vector<std::pair<char, std::string>>& rules, char start) {
  Built b;
  auto get = [&](char c) {
    auto it = b.sym.find(c);
    if (it != b.sym.end()) return it->second;
    Symbol s = std::isupper(static_cast<unsigned char>(c)) ? b.grammar.nonterminal(std::string(1, c))
                                                           : b.grammar.terminal(std::string(1, c));
    b.sym[c] = s;
    return s;
  };
  get('a');
  get('b');
  for (const auto& [lhs, rhs] : rules) {
    std::vector<Symbol> r;
    for (char c : rhs) r.push_back(get(c));
    b.grammar.add_rule(get(lhs), r);
  }
  b.grammar.set_start(get(start));
  return b;
}

std::vector<Symbol> encode(const Built& b, const std::string& w) {
  std::vector<Symbol> out;
  for (char c : w) out.push_back(b.sym.at(c));
  return out;
}

void all_words(std::size_t max_len, const std::function<void(const std::string&)>& f) {
  std::vector<std::string> level{""};
  f("");
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& w : level)
      for (char c : {'a', 'b'}) next.push_back(w + c);
    for (const auto& w : next) f(w);
    level = std::move(next);
  }
}

}  // namespace

TEST(Earley, AgreesWithCykOnSmallGrammars) {
  std::vector<Cnf> grammars = {
      // a^n b^n, n >= 1
      {{{'S', "AT"}, {'S', "AB"}, {'T', "SB"}, {'A', "a"}, {'B', "b"}}},
      // equal numbers of a and b (ambiguous)
      {{{'S', "AB"}, {'S', "BA"}, {'S', "SS"}, {'S', "AC"}, {'S', "BD"}, {'C', "SB"}, {'D', "SA"}, {'A', "a"}, {'B', "b"}}},
      // palindromes of length >= 2
      {{{'S', "AA"}, {'S', "BB"}, {'S', "AX"}, {'S', "BY"}, {'X', "SA"}, {'Y', "SB"}, {'S', "a"}, {'S', "b"},
        {'A', "a"}, {'B', "b"}}},
      // strings ending in b
      {{{'S', "XB"}, {'S', "b"}, {'X', "XX"}, {'X', "a"}, {'X', "b"}, {'B', "b"}}},
  };
  for (const auto& g : grammars) {
    Built b = build(g.rules, g.start);
    all_words(8, [&](const std::string& w) { EXPECT_EQ(recognize(b.grammar, encode(b, w)), cyk(g, w)) << w; });
  }
}

TEST(Earley, NullableRules) {
  // S -> A A b ; A -> a | epsilon
  Built b = build({{'S', "AAb"}, {'A', "a"}, {'A', ""}}, 'S');
  std::set<std::string> language{"b", "ab", "aab"};
  all_words(5, [&](const std::string& w) { EXPECT_EQ(recognize(b.grammar, encode(b, w)), language.count(w) > 0) << w; });
  // S -> A B A ; A -> epsilon ; B -> A | a  (deep nullable chains)
  Built c = build({{'S', "ABA"}, {'A', ""}, {'B', "A"}, {'B', "a"}}, 'S');
  EXPECT_TRUE(recognize(c.grammar, encode(c, "")));
  EXPECT_TRUE(recognize(c.grammar, encode(c, "a")));
  EXPECT_FALSE(recognize(c.grammar, encode(c, "aa")));
}

TEST(Earley, ParseTreeAndErrors) {
  // S -> a S b | a b
  Built b = build({{'S', "aSb"}, {'S', "ab"}}, 'S');
  ParseNode root = parse(b.grammar, encode(b, "aabb"));
  EXPECT_EQ(root.symbol, b.sym['S']);
  EXPECT_EQ(root.begin, 0u);
  EXPECT_EQ(root.end, 4u);
  ASSERT_EQ(root.children.size(), 3u);
  EXPECT_EQ(root.children[1].begin, 1u);
  EXPECT_EQ(root.children[1].end, 3u);
  try {
    parse(b.grammar, encode(b, "aabab"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  try {
    parse(b.grammar, encode(b, "aab"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);  // ran out of input
  }
}

TEST(Earley, AmbiguityIsReported) {
  Built b = build({{'S', "SS"}, {'S', "a"}}, 'S');
  EXPECT_TRUE(recognize(b.grammar, encode(b, "aaa")));
  EXPECT_NO_THROW(parse(b.grammar, encode(b, "aa")));
  EXPECT_THROW(parse(b.grammar, encode(b, "aaa")), AmbiguousParse);
}

TEST(Earley, CountsInvocations) {
  Built b = build({{'S', "a"}}, 'S');
  auto before = invocation_count();
  recognize(b.grammar, encode(b, "a"));
  parse(b.grammar, encode(b, "a"));
  EXPECT_EQ(invocation_count() - before, 2u);
}
