#include "wgram/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>

#include "json.hpp"
#include "wgram/earley.hpp"
#include "wgram/error.hpp"
#include "wgram/lalr.hpp"
#include "wgram/pattern.hpp"
#include "wgram/regex.hpp"

namespace wgram {

namespace {

enum Tok : lalr::Symbol { IDENT, STRING, REGEX, ARGREF, LPAREN, RPAREN, COMMA, EQ, STAR, PLUS, QMARK, BAR, kTokCount };

constexpr const char* kTokNames[kTokCount] = {"name", "string", "regex", "argument reference", "'('", "')'",
                                              "','",  "'='",    "'*'",   "'+'",                "'?'", "'|'"};

struct Lexeme {
  Tok kind;
  std::string text;
  std::size_t offset;
};

[[noreturn]] void syntax_error(std::string_view src, std::size_t offset, const std::string& what) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < src.size(); ++i) {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw SyntaxError(what, line, col);
}

std::vector<Lexeme> lex_request(std::string_view s) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  auto quoted = [&](bool raw) {
    std::size_t start = i;
    ++i;
    std::string text;
    for (;;) {
      if (i >= s.size()) syntax_error(s, start, "unterminated string");
      char c = s[i];
      if (c == '"') {
        ++i;
        return text;
      }
      if (c == '\\' && i + 1 < s.size()) {
        char e = s[i + 1];
        if (raw) {
          if (e != '"') text += '\\';
          text += e;
        } else if (e == 'x') {
          if (i + 3 >= s.size()) syntax_error(s, i, "truncated \\x escape");
          text += unescape_token(s.substr(i, 4));
          i += 2;
        } else if (e == 'n' || e == 't' || e == '\\' || e == '"') {
          text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        } else {
          syntax_error(s, i, std::string("unknown escape \\") + e);
        }
        i += 2;
        continue;
      }
      text += c;
      ++i;
    }
  };
  while (i < s.size()) {
    char c = s[i];
    std::size_t start = i;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == 'r' && s.substr(i, 3) == "re\"") {
      i += 2;
      out.push_back({REGEX, quoted(true), start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({IDENT, std::string(s.substr(start, i - start)), start});
    } else if (c == '"') {
      out.push_back({STRING, quoted(false), start});
    } else if (c == '{') {
      std::size_t end = s.find('}', i);
      if (end == std::string_view::npos) syntax_error(s, start, "unterminated argument reference");
      std::string name(s.substr(i + 1, end - i - 1));
      if (name.empty()) syntax_error(s, start, "empty argument reference");
      i = end + 1;
      out.push_back({ARGREF, std::move(name), start});
    } else {
      Tok k;
      switch (c) {
        case '(': k = LPAREN; break;
        case ')': k = RPAREN; break;
        case ',': k = COMMA; break;
        case '=': k = EQ; break;
        case '*': k = STAR; break;
        case '+': k = PLUS; break;
        case '?': k = QMARK; break;
        case '|': k = BAR; break;
        default: syntax_error(s, start, std::string("unexpected character '") + c + "'");
      }
      ++i;
      out.push_back({k, std::string(1, c), start});
    }
  }
  return out;
}

struct RequestGrammar {
  std::size_t r_elements_one, r_elements_more;
  std::size_t r_element, r_element_star, r_element_plus, r_element_qmark;
  std::size_t r_call_empty, r_call_args, r_string, r_regex, r_argref, r_group;
  std::size_t r_alts_one, r_alts_more, r_args_one, r_args_more, r_arg;
  std::size_t r_value_string, r_value_regex, r_value_argref;
  lalr::Table table;

  RequestGrammar() : table(make()) {}

 private:
  lalr::Table make() {
    lalr::Grammar g;
    for (unsigned t = 0; t < kTokCount; ++t) g.terminal(kTokNames[t]);
    auto elements = g.nonterminal("elements");
    auto element = g.nonterminal("element");
    auto primary = g.nonterminal("primary");
    auto alts = g.nonterminal("alternatives");
    auto arglist = g.nonterminal("arguments");
    auto arg = g.nonterminal("argument");
    auto value = g.nonterminal("value");
    r_elements_one = g.add_rule(elements, {element});
    r_elements_more = g.add_rule(elements, {elements, element});
    r_element = g.add_rule(element, {primary});
    r_element_star = g.add_rule(element, {primary, STAR});
    r_element_plus = g.add_rule(element, {primary, PLUS});
    r_element_qmark = g.add_rule(element, {primary, QMARK});
    r_call_empty = g.add_rule(primary, {IDENT, LPAREN, RPAREN});
    r_call_args = g.add_rule(primary, {IDENT, LPAREN, arglist, RPAREN});
    r_string = g.add_rule(primary, {STRING});
    r_regex = g.add_rule(primary, {REGEX});
    r_argref = g.add_rule(primary, {ARGREF});
    r_group = g.add_rule(primary, {LPAREN, alts, RPAREN});
    r_alts_one = g.add_rule(alts, {elements});
    r_alts_more = g.add_rule(alts, {alts, BAR, elements});
    r_args_one = g.add_rule(arglist, {arg});
    r_args_more = g.add_rule(arglist, {arglist, COMMA, arg});
    r_arg = g.add_rule(arg, {IDENT, EQ, value});
    r_value_string = g.add_rule(value, {STRING});
    r_value_regex = g.add_rule(value, {REGEX});
    r_value_argref = g.add_rule(value, {ARGREF});
    return lalr::Table(g, elements);
  }
};

const RequestGrammar& request_grammar() {
  static const RequestGrammar g;
  return g;
}

struct Value {
  std::size_t token = 0;  // leaf index
  std::vector<RequestElement> elements;
  std::vector<std::vector<RequestElement>> branches;
  std::vector<std::pair<std::string, ArgValue>> args;
  std::pair<std::string, ArgValue> arg;
  ArgValue value;
};

class RequestBuilder {
 public:
  RequestBuilder(std::string_view src, const std::vector<Lexeme>& lex,
                 const std::map<std::string, std::string>& args)
      : src_(src), lex_(lex), args_(args), g_(request_grammar()) {}

  Value reduce(std::size_t rule, std::vector<Value>& rhs) {
    Value v;
    if (rule == g_.r_elements_one) {
      v.elements = std::move(rhs[0].elements);
    } else if (rule == g_.r_elements_more) {
      v.elements = std::move(rhs[0].elements);
      v.elements.push_back(std::move(rhs[1].elements.front()));
    } else if (rule == g_.r_element || rule == g_.r_element_star || rule == g_.r_element_plus ||
               rule == g_.r_element_qmark) {
      v.elements = std::move(rhs[0].elements);
      RequestElement& e = v.elements.front();
      if (rule != g_.r_element) {
        if (e.repeat != Repeat::once) syntax_error(src_, lex_[rhs[1].token].offset, "stacked repetition");
        e.repeat = rule == g_.r_element_star ? Repeat::star : rule == g_.r_element_plus ? Repeat::plus : Repeat::optional;
      }
    } else if (rule == g_.r_call_empty || rule == g_.r_call_args) {
      RequestElement e;
      e.kind = RequestElement::invocation;
      e.name = lex_[rhs[0].token].text;
      e.offset = lex_[rhs[0].token].offset;
      if (rule == g_.r_call_args) e.args = std::move(rhs[2].args);
      v.elements.push_back(std::move(e));
    } else if (rule == g_.r_string || rule == g_.r_argref) {
      RequestElement e;
      e.kind = RequestElement::literal;
      e.offset = lex_[rhs[0].token].offset;
      e.text = rule == g_.r_string ? lex_[rhs[0].token].text : lookup(rhs[0].token);
      v.elements.push_back(std::move(e));
    } else if (rule == g_.r_regex) {
      RequestElement e;
      e.kind = RequestElement::regex;
      e.offset = lex_[rhs[0].token].offset;
      e.text = lex_[rhs[0].token].text;
      v.elements.push_back(std::move(e));
    } else if (rule == g_.r_group) {
      RequestElement e;
      e.kind = RequestElement::group;
      e.offset = lex_[rhs[0].token].offset;
      e.branches = std::move(rhs[1].branches);
      v.elements.push_back(std::move(e));
    } else if (rule == g_.r_alts_one) {
      v.branches.push_back(std::move(rhs[0].elements));
    } else if (rule == g_.r_alts_more) {
      v.branches = std::move(rhs[0].branches);
      v.branches.push_back(std::move(rhs[2].elements));
    } else if (rule == g_.r_args_one) {
      v.args.push_back(std::move(rhs[0].arg));
    } else if (rule == g_.r_args_more) {
      v.args = std::move(rhs[0].args);
      v.args.push_back(std::move(rhs[2].arg));
    } else if (rule == g_.r_arg) {
      v.arg = {lex_[rhs[0].token].text, std::move(rhs[2].value)};
    } else if (rule == g_.r_value_string) {
      v.value = {false, lex_[rhs[0].token].text};
    } else if (rule == g_.r_value_regex) {
      v.value = {true, lex_[rhs[0].token].text};
    } else if (rule == g_.r_value_argref) {
      v.value = {false, lookup(rhs[0].token)};
    }
    return v;
  }

 private:
  std::string lookup(std::size_t token) const {
    const Lexeme& l = lex_[token];
    auto it = args_.find(l.text);
    if (it == args_.end()) syntax_error(src_, l.offset, "argument reference {" + l.text + "} has no value");
    return it->second;
  }

  std::string_view src_;
  const std::vector<Lexeme>& lex_;
  const std::map<std::string, std::string>& args_;
  const RequestGrammar& g_;
};

void check_against(std::string_view src, const std::vector<RequestElement>& elements,
                   const StructureFactory& factory) {
  for (const auto& e : elements) {
    if (e.kind == RequestElement::group) {
      for (const auto& b : e.branches) check_against(src, b, factory);
      continue;
    }
    if (e.kind != RequestElement::invocation) continue;
    const Structure* s = factory.find(e.name);
    if (!s) syntax_error(src, e.offset, "unknown structure '" + e.name + "'");
    std::set<std::string> bound;
    for (const auto& [name, value] : e.args) {
      if (std::find(s->arg_names.begin(), s->arg_names.end(), name) == s->arg_names.end()) {
        syntax_error(src, e.offset, "structure '" + e.name + "' has no argument '" + name + "'");
      }
      if (!bound.insert(name).second) {
        syntax_error(src, e.offset, "argument '" + name + "' of '" + e.name + "' bound twice");
      }
    }
    for (const auto& a : s->arg_names) {
      if (!bound.count(a)) syntax_error(src, e.offset, "structure '" + e.name + "' is missing argument '" + a + "'");
    }
  }
}

std::string quote(const std::string& text, bool regex) {
  std::string out = regex ? "re\"" : "\"";
  for (char c : text) {
    if (c == '"') {
      out += "\\\"";
    } else if (regex) {
      out += c;
    } else {
      out += escape_token(std::string_view(&c, 1));
    }
  }
  return out + "\"";
}

std::string element_string(const RequestElement& e);

std::string elements_string(const std::vector<RequestElement>& es) {
  std::string out;
  for (std::size_t i = 0; i < es.size(); ++i) {
    if (i) out += ' ';
    out += element_string(es[i]);
  }
  return out;
}

std::string element_string(const RequestElement& e) {
  std::string out;
  switch (e.kind) {
    case RequestElement::invocation:
      out = e.name + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += e.args[i].first + "=" + quote(e.args[i].second.text, e.args[i].second.regex);
      }
      out += ")";
      break;
    case RequestElement::literal: out = quote(e.text, false); break;
    case RequestElement::regex: out = quote(e.text, true); break;
    case RequestElement::group:
      out = "(";
      for (std::size_t i = 0; i < e.branches.size(); ++i) {
        if (i) out += " | ";
        out += elements_string(e.branches[i]);
      }
      out += ")";
      break;
  }
  switch (e.repeat) {
    case Repeat::once: break;
    case Repeat::star: out += '*'; break;
    case Repeat::plus: out += '+'; break;
    case Repeat::optional: out += '?'; break;
  }
  return out;
}

PatternPtr text_pattern(const std::string& text, const Vocabulary& vocab, const std::string& what) {
  if (text.empty()) throw InputError(what + " is empty");
  std::vector<TokenId> ids;
  try {
    ids = tokenize(vocab, text);
  } catch (const InputError& e) {
    throw InputError(what + ": " + e.what());
  }
  return pattern::tokens(std::move(ids), quote(text, false));
}

PatternPtr regex_pattern(const std::string& text, const Vocabulary& vocab) {
  return lower_regex(parse_regex(text), vocab);
}

// Rebuilds only the spine above placeholder slots; slot-free subtrees are shared.
PatternPtr substitute(const PatternPtr& p, const std::map<std::string, PatternPtr>& values) {
  if (p->kind == PatternKind::slot) return values.at(p->name);
  if (p->children.empty()) return p;
  std::vector<PatternPtr> children;
  children.reserve(p->children.size());
  bool changed = false;
  for (const auto& c : p->children) {
    children.push_back(substitute(c, values));
    changed = changed || children.back() != c;
  }
  if (!changed) return p;
  switch (p->kind) {
    case PatternKind::concat: return pattern::concat(std::move(children), p->label);
    case PatternKind::alternation: return pattern::alternation(std::move(children), p->label);
    case PatternKind::star: return pattern::star(children[0], p->label);
    case PatternKind::plus: return pattern::plus(children[0], p->label);
    case PatternKind::optional: return pattern::optional(children[0], p->label);
    default: return p;
  }
}

PatternPtr lower_elements(const std::vector<RequestElement>& es, const StructureFactory& factory,
                          const Vocabulary& vocab);

PatternPtr lower_element(const RequestElement& e, const StructureFactory& factory, const Vocabulary& vocab) {
  PatternPtr p;
  switch (e.kind) {
    case RequestElement::invocation: {
      const Structure* s = factory.find(e.name);
      if (!s) throw InputError("unknown structure '" + e.name + "'");
      std::map<std::string, PatternPtr> values;
      for (const auto& [name, value] : e.args) {
        values[name] = value.regex ? regex_pattern(value.text, vocab)
                                   : text_pattern(value.text, vocab, "argument '" + name + "' of " + e.name);
      }
      for (const auto& a : s->arg_names) {
        if (!values.count(a)) throw InputError("structure '" + e.name + "' is missing argument '" + a + "'");
      }
      p = substitute(s->body, values);
      break;
    }
    case RequestElement::literal: p = text_pattern(e.text, vocab, "literal"); break;
    case RequestElement::regex: p = regex_pattern(e.text, vocab); break;
    case RequestElement::group: {
      std::vector<PatternPtr> branches;
      for (const auto& b : e.branches) branches.push_back(lower_elements(b, factory, vocab));
      p = branches.size() == 1 ? branches.front() : pattern::alternation(std::move(branches), element_string(e));
      break;
    }
  }
  switch (e.repeat) {
    case Repeat::once: return p;
    case Repeat::star: return pattern::star(p, element_string(e));
    case Repeat::plus: return pattern::plus(p, element_string(e));
    case Repeat::optional: return pattern::optional(p, element_string(e));
  }
  return p;
}

PatternPtr lower_elements(const std::vector<RequestElement>& es, const StructureFactory& factory,
                          const Vocabulary& vocab) {
  if (es.size() == 1) return lower_element(es.front(), factory, vocab);
  std::vector<PatternPtr> parts;
  parts.reserve(es.size());
  for (const auto& e : es) parts.push_back(lower_element(e, factory, vocab));
  return pattern::concat(std::move(parts));
}

}  // namespace

RequestDocument parse_request_document(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("request document is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format") || !j["format"].is_string()) {
    throw InputError("request document needs a string field 'format'");
  }
  RequestDocument doc;
  doc.format = j["format"].get<std::string>();
  if (j.contains("args")) {
    if (!j["args"].is_object()) throw InputError("request field 'args' must be an object");
    for (const auto& [k, v] : j["args"].items()) {
      if (!v.is_string()) throw InputError("request argument '" + k + "' must be a string");
      doc.args[k] = v.get<std::string>();
    }
  }
  return doc;
}

RequestFormat parse_request(std::string_view text, const StructureFactory& factory,
                            const std::map<std::string, std::string>& args) {
  std::vector<Lexeme> lex = lex_request(text);
  if (lex.empty()) syntax_error(text, 0, "empty request");
  std::vector<lalr::Symbol> input;
  input.reserve(lex.size());
  for (const auto& l : lex) input.push_back(l.kind);

  RequestBuilder builder(text, lex, args);
  Value root;
  try {
    root = lalr::parse<Value>(
        request_grammar().table, input, [](std::size_t i) { return Value{i, {}, {}, {}, {}, {}}; },
        [&](std::size_t rule, std::vector<Value>& rhs) { return builder.reduce(rule, rhs); });
  } catch (const lalr::ParseError& e) {
    std::string expected;
    for (auto s : e.expected()) {
      if (s >= kTokCount) continue;
      if (!expected.empty()) expected += ", ";
      expected += kTokNames[s];
    }
    std::size_t at = e.position() < lex.size() ? lex[e.position()].offset : text.size();
    std::string found = e.position() < lex.size() ? kTokNames[lex[e.position()].kind] : "end of request";
    syntax_error(text, at, "unexpected " + found + (expected.empty() ? "" : "; expected " + expected));
  }
  check_against(text, root.elements, factory);
  return RequestFormat{std::move(root.elements)};
}

RequestFormat parse_request(const RequestDocument& doc, const StructureFactory& factory) {
  return parse_request(doc.format, factory, doc.args);
}

OperatorPtr build_operators(const RequestFormat& fmt, const StructureFactory& factory, const Vocabulary& vocab) {
  if (factory.vocab_fingerprint() != 0 && factory.vocab_fingerprint() != vocab.fingerprint()) {
    throw InputError("structure factory was compiled for a different vocabulary");
  }
  if (fmt.elements.empty()) throw InputError("empty request");
  return compile_pattern(lower_elements(fmt.elements, factory, vocab), vocab);
}

std::string to_string(const RequestFormat& fmt) { return elements_string(fmt.elements); }

InstantiationCost instantiation_cost_probe(const RequestDocument& doc, const StructureFactory& factory,
                                           const Vocabulary& vocab) {
  using clock = std::chrono::steady_clock;
  InstantiationCost cost;
  cost.expression_length = doc.format.size();
  std::uint64_t before = earley::invocation_count();
  auto t0 = clock::now();
  RequestFormat fmt = parse_request(doc, factory);
  auto t1 = clock::now();
  OperatorPtr tree = build_operators(fmt, factory, vocab);
  auto t2 = clock::now();
  cost.earley_calls = earley::invocation_count() - before;
  cost.parse_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  cost.build_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  cost.total_ms = std::chrono::duration<double, std::milli>(t2 - t0).count();
  return cost;
}

}  // namespace wgram
