#include <gtest/gtest.h>

#include "support.hpp"
#include "wgram/earley.hpp"
#include "wgram/error.hpp"
#include "wgram/frontend.hpp"
#include "wgram/lalr.hpp"
#include "wgram/pattern.hpp"

using namespace wgram;
using wgram::testing::data_path;

namespace {

const Vocabulary& outline_vocab() {
  static const Vocabulary v = load_vocabulary(data_path("outline.vocab"));
  return v;
}

const StructureFactory& outline() {
  static const StructureFactory f = compile_templates_file(data_path("outline.wgram"), outline_vocab());
  return f;
}

std::string write_of(std::string_view text) {
  std::string s = "Write [";
  auto t = tokenize(outline_vocab(), text);
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
  return s + "]";
}

}  // namespace

TEST(Lalr, ExpressionGrammar) {
  // E -> E + T | T ; T -> T * F | F ; F -> ( E ) | n
  lalr::Grammar g;
  auto plus = g.terminal("+"), times = g.terminal("*"), lp = g.terminal("("), rp = g.terminal(")"),
       n = g.terminal("n");
  auto E = g.nonterminal("E"), T = g.nonterminal("T"), F = g.nonterminal("F");
  auto r_add = g.add_rule(E, {E, plus, T});
  g.add_rule(E, {T});
  auto r_mul = g.add_rule(T, {T, times, F});
  g.add_rule(T, {F});
  g.add_rule(F, {lp, E, rp});
  g.add_rule(F, {n});
  lalr::Table table(g, E);
  // Evaluate with n = 2: 2 + 2 * (2 + 2) = 10
  std::vector<lalr::Symbol> input{n, plus, n, times, lp, n, plus, n, rp};
  int value = lalr::parse<int>(
      table, input, [&](std::size_t i) { return input[i] == n ? 2 : 0; },
      [&](std::size_t rule, std::vector<int>& rhs) {
        if (rule == r_add) return rhs[0] + rhs[2];
        if (rule == r_mul) return rhs[0] * rhs[2];
        return rhs.size() == 3 ? rhs[1] : rhs[0];
      });
  EXPECT_EQ(value, 10);
  std::vector<lalr::Symbol> bad{n, plus, times};
  try {
    lalr::parse<int>(table, bad, [](std::size_t) { return 0; }, [](std::size_t, std::vector<int>&) { return 0; });
    FAIL();
  } catch (const lalr::ParseError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(Lalr, ConflictsAreDetected) {
  lalr::Grammar g;
  auto plus = g.terminal("+"), a = g.terminal("a");
  auto E = g.nonterminal("E");
  g.add_rule(E, {E, plus, E});
  g.add_rule(E, {a});
  EXPECT_THROW(lalr::Table(g, E), lalr::GrammarConflict);
}

TEST(Lalr, LalrButNotSlr) {
  // S -> L = R | R ; L -> * R | id ; R -> L  (the textbook LALR(1) grammar)
  lalr::Grammar g;
  auto eq = g.terminal("="), star = g.terminal("*"), id = g.terminal("id");
  auto S = g.nonterminal("S"), L = g.nonterminal("L"), R = g.nonterminal("R");
  g.add_rule(S, {L, eq, R});
  g.add_rule(S, {R});
  g.add_rule(L, {star, R});
  g.add_rule(L, {id});
  g.add_rule(R, {L});
  lalr::Table table(g, S);
  std::vector<lalr::Symbol> input{star, id, eq, id};
  int reductions = lalr::parse<int>(
      table, input, [](std::size_t) { return 0; },
      [](std::size_t, std::vector<int>& rhs) {
        int n = 1;
        for (int x : rhs) n += x;
        return n;
      });
  EXPECT_EQ(reductions, 6);
}

TEST(Request, ParsesInvocations) {
  RequestFormat f = parse_request("SECTION(title=\"Intro\") SUBSECTION(title=\"A\")", outline());
  ASSERT_EQ(f.elements.size(), 2u);
  EXPECT_EQ(f.elements[0].kind, RequestElement::invocation);
  EXPECT_EQ(f.elements[0].name, "SECTION");
  EXPECT_EQ(f.elements[1].args[0].second.text, "A");
}

TEST(Request, RepetitionGroupSnapshot) {
  RequestFormat f = parse_request("(SUBSECTION(title=\"t\"))+", outline());
  ASSERT_EQ(f.elements.size(), 1u);
  EXPECT_EQ(f.elements[0].kind, RequestElement::group);
  EXPECT_EQ(f.elements[0].repeat, Repeat::plus);
  EXPECT_EQ(to_string(f), "(SUBSECTION(title=\"t\"))+");
  RequestFormat g = parse_request(
      "  re\"[a-z]+\"  ( \"<p>\" |\"<ul>\\n\" )? {x} SECTION( title = re\"[A-Z]\" )* ", outline(), {{"x", "v"}});
  EXPECT_EQ(to_string(g), "re\"[a-z]+\" (\"<p>\" | \"<ul>\\n\")? \"v\" SECTION(title=re\"[A-Z]\")*");
}

TEST(Request, ValidationErrors) {
  EXPECT_THROW(parse_request("SECTION()", outline()), InputError);
  EXPECT_THROW(parse_request("SECTION(title=\"a\", title=\"b\")", outline()), InputError);
  EXPECT_THROW(parse_request("SECTION(title=\"a\", level=\"2\")", outline()), InputError);
  EXPECT_THROW(parse_request("CHAPTER(title=\"a\")", outline()), InputError);
  EXPECT_THROW(parse_request("SECTION(title={missing})", outline()), InputError);
  EXPECT_THROW(parse_request("", outline()), InputError);
  EXPECT_THROW(parse_request("(\"a\")+*", outline()), InputError);
  try {
    parse_request("SECTION(title=\"a\")\n  SECTION(title \"b\")", outline());
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 17u);
  }
}

TEST(Request, JsonDocument) {
  RequestDocument d = parse_request_document(R"j({"format": "SECTION(title={t})", "args": {"t": "Intro"}})j");
  EXPECT_EQ(d.args.at("t"), "Intro");
  RequestFormat f = parse_request(d, outline());
  EXPECT_EQ(f.elements[0].args[0].second.text, "Intro");
  EXPECT_THROW(parse_request_document("{}"), InputError);
  EXPECT_THROW(parse_request_document(R"({"format": "x", "args": {"a": 1}})"), InputError);
  EXPECT_THROW(parse_request_document("[1"), InputError);
}

TEST(Build, InlineRegexMatchesRegexCompiler) {
  Vocabulary digits = load_vocabulary(data_path("digits.vocab"));
  StructureFactory f = compile_templates_file(data_path("number.wgram"), digits);
  std::string direct = dump(compile_regex(parse_regex("\\d+(\\.\\d+)*"), digits));
  EXPECT_EQ(dump(build_operators(parse_request("re\"\\d+(\\.\\d+)*\"", f), f, digits)), direct);
  EXPECT_EQ(dump(build_operators(parse_request("NUMBER()", f), f, digits)), direct);
}

TEST(Build, SlotSubstitution) {
  StructureFactory f = compile_templates("SECTION_START(title) ::= \"<h1>\" {title} \"</h1>\" ;", outline_vocab());
  OperatorPtr tree = build_operators(parse_request("SECTION_START(title=\"Intro\")", f), f, outline_vocab());
  EXPECT_EQ(dump(tree), "Sequence\n  " + write_of("<h1>") + "\n  " + write_of("Intro") + "\n  " + write_of("</h1>") +
                            "\n  Write [" + std::to_string(outline_vocab().eos()) + "]\n");
  // regex-valued argument compiled in context
  OperatorPtr r = build_operators(parse_request("SECTION_START(title=re\"[A-Z][a-z]*\")", f), f, outline_vocab());
  Machine m(r, outline_vocab().size());
  for (auto t : tokenize(outline_vocab(), "<h1>Wgram</h1>")) ASSERT_NE(m.step(t), StepOutcome::rejected);
  EXPECT_EQ(m.step(outline_vocab().eos()), StepOutcome::finished);
}

TEST(Build, Errors) {
  const auto& v = outline_vocab();
  EXPECT_THROW(build_operators(parse_request("SECTION(title=\"\xc3\xa8\")", outline()), outline(), v), InputError);
  EXPECT_THROW(build_operators(parse_request("re\"[a-z]*\" \"a\"", outline()), outline(), v), AmbiguityError);
  EXPECT_THROW(build_operators(parse_request("(SECTION(title=\"a\"))* SECTION(title=\"b\")", outline()), outline(), v),
               AmbiguityError);
  Vocabulary other = load_vocabulary(data_path("synthetic1000.vocab"));
  EXPECT_THROW(build_operators(parse_request("TEXT()", outline()), outline(), other), InputError);
}

TEST(Build, FollowComesFromTheNextElement) {
  const auto& v = outline_vocab();
  OperatorPtr tree = build_operators(parse_request("re\"[a-z ]*\" \"</p>\" re\"x+\"", outline()), outline(), v);
  Machine m(tree, v.size());
  for (auto t : tokenize(v, "the data</p>xx")) ASSERT_NE(m.step(t), StepOutcome::rejected);
  EXPECT_EQ(m.step(v.eos()), StepOutcome::finished);
}

TEST(Probe, NoTemplateParsingOnline) {
  std::ifstream in(data_path("outline_request.json"));
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RequestDocument doc = parse_request_document(text);
  for (int i = 0; i < 20; ++i) {
    InstantiationCost c = instantiation_cost_probe(doc, outline(), outline_vocab());
    EXPECT_EQ(c.earley_calls, 0u);
    EXPECT_GE(c.total_ms, c.parse_ms);
    EXPECT_EQ(c.expression_length, doc.format.size());
  }
}
