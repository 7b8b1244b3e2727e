#include "wgram/templates.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wgram/earley.hpp"
#include "wgram/error.hpp"

namespace wgram {

const Structure* StructureFactory::find(std::string_view name) const {
  auto it = structures_.find(name);
  return it == structures_.end() ? nullptr : &it->second;
}

namespace {

enum class Tok { ident, string, regex, slot, assign, semi, lparen, rparen, comma, bar, star, plus, qmark };

constexpr const char* kTokNames[] = {"identifier", "string", "regex", "placeholder", "'::='", "';'",
                                     "'('",        "')'",    "','",   "'|'",         "'*'",   "'+'",
                                     "'?'"};

struct Lexeme {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class TemplateLexer {
 public:
  explicit TemplateLexer(std::string_view src) : s_(src) {}

  std::vector<Lexeme> run() {
    std::vector<Lexeme> out;
    for (;;) {
      skip_space();
      if (pos_ >= s_.size()) return out;
      std::size_t line = line_, col = col_;
      char c = s_[pos_];
      auto simple = [&](Tok k, std::size_t len) {
        out.push_back({k, std::string(s_.substr(pos_, len)), line, col});
        advance(len);
      };
      if (c == 'r' && s_.substr(pos_, 3) == "re\"") {
        advance(2);
        out.push_back({Tok::regex, read_quoted(true), line, col});
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t end = pos_;
        while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) ++end;
        simple(Tok::ident, end - pos_);
      } else if (c == '"') {
        out.push_back({Tok::string, read_quoted(false), line, col});
      } else if (c == '{') {
        std::size_t end = s_.find('}', pos_);
        if (end == std::string_view::npos) fail("unterminated placeholder");
        std::string name(s_.substr(pos_ + 1, end - pos_ - 1));
        if (name.empty()) fail("empty placeholder name");
        for (char ch : name) {
          if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') fail("bad placeholder name '" + name + "'");
        }
        advance(end - pos_ + 1);
        out.push_back({Tok::slot, name, line, col});
      } else if (s_.substr(pos_, 3) == "::=") {
        simple(Tok::assign, 3);
      } else {
        switch (c) {
          case ';': simple(Tok::semi, 1); break;
          case '(': simple(Tok::lparen, 1); break;
          case ')': simple(Tok::rparen, 1); break;
          case ',': simple(Tok::comma, 1); break;
          case '|': simple(Tok::bar, 1); break;
          case '*': simple(Tok::star, 1); break;
          case '+': simple(Tok::plus, 1); break;
          case '?': simple(Tok::qmark, 1); break;
          default: fail(std::string("unexpected character '") + c + "'");
        }
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, line_, col_); }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i, ++pos_) {
      if (s_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_space() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') advance(1);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
      } else {
        return;
      }
    }
  }

  // Regex bodies keep their backslashes except before a quote.
  std::string read_quoted(bool raw) {
    advance(1);  // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= s_.size() || s_[pos_] == '\n') fail("unterminated string");
      char c = s_[pos_];
      if (c == '"') {
        advance(1);
        return out;
      }
      if (c == '\\' && pos_ + 1 < s_.size()) {
        char e = s_[pos_ + 1];
        if (raw) {
          if (e != '"') out += '\\';
          out += e;
          advance(2);
          continue;
        }
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '\\': out += '\\'; break;
          case '"': out += '"'; break;
          case 'x': {
            if (pos_ + 3 >= s_.size()) fail("truncated \\x escape");
            out += unescape_token(s_.substr(pos_, 4));
            advance(2);
            break;
          }
          default: fail(std::string("unknown escape \\") + e);
        }
        advance(2);
        continue;
      }
      out += c;
      advance(1);
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// Meta-grammar for template files, parsed with Earley.
struct MetaGrammar {
  earley::Grammar g;
  earley::Symbol t[13];
  earley::Symbol file, rules, rule, params, idlist, alts, seq, item, atom;
  std::size_t r_params_none, r_params_empty, r_params_list;
  std::size_t r_idlist_one, r_idlist_more;
  std::size_t r_alts_one, r_alts_more, r_seq_one, r_seq_more;
  std::size_t r_item_atom, r_item_star, r_item_plus, r_item_qmark;
  std::size_t r_atom_string, r_atom_regex, r_atom_slot, r_atom_ref, r_atom_group;

  MetaGrammar() {
    for (int i = 0; i < 13; ++i) t[i] = g.terminal(kTokNames[i]);
    file = g.nonterminal("file");
    rules = g.nonterminal("rules");
    rule = g.nonterminal("rule");
    params = g.nonterminal("params");
    idlist = g.nonterminal("idlist");
    alts = g.nonterminal("alternatives");
    seq = g.nonterminal("sequence");
    item = g.nonterminal("item");
    atom = g.nonterminal("atom");
    auto T = [this](Tok k) { return t[static_cast<int>(k)]; };
    auto add = [this](earley::Symbol lhs, std::vector<earley::Symbol> rhs) {
      g.add_rule(lhs, std::move(rhs));
      return g.rules().size() - 1;
    };
    add(file, {rules});
    add(rules, {rule});
    add(rules, {rules, rule});
    add(rule, {T(Tok::ident), params, T(Tok::assign), alts, T(Tok::semi)});
    r_params_none = add(params, {});
    r_params_empty = add(params, {T(Tok::lparen), T(Tok::rparen)});
    r_params_list = add(params, {T(Tok::lparen), idlist, T(Tok::rparen)});
    r_idlist_one = add(idlist, {T(Tok::ident)});
    r_idlist_more = add(idlist, {idlist, T(Tok::comma), T(Tok::ident)});
    r_alts_one = add(alts, {seq});
    r_alts_more = add(alts, {alts, T(Tok::bar), seq});
    r_seq_one = add(seq, {item});
    r_seq_more = add(seq, {seq, item});
    r_item_atom = add(item, {atom});
    r_item_star = add(item, {atom, T(Tok::star)});
    r_item_plus = add(item, {atom, T(Tok::plus)});
    r_item_qmark = add(item, {atom, T(Tok::qmark)});
    r_atom_string = add(atom, {T(Tok::string)});
    r_atom_regex = add(atom, {T(Tok::regex)});
    r_atom_slot = add(atom, {T(Tok::slot)});
    r_atom_ref = add(atom, {T(Tok::ident)});
    r_atom_group = add(atom, {T(Tok::lparen), alts, T(Tok::rparen)});
    g.set_start(file);
  }
};

const MetaGrammar& meta() {
  static const MetaGrammar m;
  return m;
}

// Unresolved template expression.
struct Expr {
  enum Kind { terminal, regex, slot, ref, seq, alt, star, plus, opt } kind;
  std::string text;
  std::vector<Expr> children;
  std::size_t line = 0, column = 0;
};

struct RuleDef {
  std::string name;
  std::vector<std::string> params;
  Expr body;
  std::size_t line = 0, column = 0;
};

class RuleBuilder {
 public:
  RuleBuilder(const MetaGrammar& m, const std::vector<Lexeme>& lex) : m_(m), lex_(lex) {}

  void collect(const earley::ParseNode& n, std::vector<RuleDef>& out) const {
    if (n.symbol == m_.rule) {
      out.push_back(build_rule(n));
      return;
    }
    for (const auto& c : n.children) collect(c, out);
  }

 private:
  const Lexeme& leaf(const earley::ParseNode& n) const { return lex_[n.begin]; }

  RuleDef build_rule(const earley::ParseNode& n) const {
    RuleDef def;
    const Lexeme& name = leaf(n.children[0]);
    def.name = name.text;
    def.line = name.line;
    def.column = name.column;
    collect_params(n.children[1], def.params);
    def.body = build_alts(n.children[3]);
    return def;
  }

  void collect_params(const earley::ParseNode& n, std::vector<std::string>& out) const {
    if (n.symbol == m_.t[static_cast<int>(Tok::ident)]) {
      out.push_back(leaf(n).text);
      return;
    }
    for (const auto& c : n.children) collect_params(c, out);
  }

  Expr build_alts(const earley::ParseNode& n) const {
    std::vector<Expr> branches;
    const earley::ParseNode* cur = &n;
    while (cur->rule == m_.r_alts_more) {
      branches.push_back(build_seq(cur->children[2]));
      cur = &cur->children[0];
    }
    branches.push_back(build_seq(cur->children[0]));
    if (branches.size() == 1) return std::move(branches.front());
    std::reverse(branches.begin(), branches.end());
    Expr e{Expr::alt, {}, std::move(branches)};
    e.line = e.children.front().line;
    e.column = e.children.front().column;
    return e;
  }

  Expr build_seq(const earley::ParseNode& n) const {
    std::vector<Expr> items;
    const earley::ParseNode* cur = &n;
    while (cur->rule == m_.r_seq_more) {
      items.push_back(build_item(cur->children[1]));
      cur = &cur->children[0];
    }
    items.push_back(build_item(cur->children[0]));
    if (items.size() == 1) return std::move(items.front());
    std::reverse(items.begin(), items.end());
    Expr e{Expr::seq, {}, std::move(items)};
    e.line = e.children.front().line;
    e.column = e.children.front().column;
    return e;
  }

  Expr build_item(const earley::ParseNode& n) const {
    Expr a = build_atom(n.children[0]);
    Expr::Kind k;
    if (n.rule == m_.r_item_star)
      k = Expr::star;
    else if (n.rule == m_.r_item_plus)
      k = Expr::plus;
    else if (n.rule == m_.r_item_qmark)
      k = Expr::opt;
    else
      return a;
    Expr e{k, {}, {}};
    e.line = a.line;
    e.column = a.column;
    e.children.push_back(std::move(a));
    return e;
  }

  Expr build_atom(const earley::ParseNode& n) const {
    if (n.rule == m_.r_atom_group) return build_alts(n.children[1]);
    const Lexeme& l = leaf(n.children[0]);
    Expr::Kind k = n.rule == m_.r_atom_string  ? Expr::terminal
                   : n.rule == m_.r_atom_regex ? Expr::regex
                   : n.rule == m_.r_atom_slot  ? Expr::slot
                                               : Expr::ref;
    Expr e{k, l.text, {}};
    e.line = l.line;
    e.column = l.column;
    return e;
  }

  const MetaGrammar& m_;
  const std::vector<Lexeme>& lex_;
};

std::string where(const Expr& e) {
  return " at " + std::to_string(e.line) + ":" + std::to_string(e.column);
}

class Resolver {
 public:
  Resolver(const std::vector<RuleDef>& defs, const Vocabulary& vocab,
           std::map<std::string, std::vector<TokenId>, std::less<>>& token_ids)
      : vocab_(vocab), token_ids_(token_ids) {
    for (const auto& d : defs) {
      if (!defs_.emplace(d.name, &d).second) {
        throw InputError("rule '" + d.name + "' defined twice (line " + std::to_string(d.line) + ")");
      }
    }
  }

  Structure resolve(const std::string& name) {
    auto done = resolved_.find(name);
    if (done != resolved_.end()) return done->second;
    if (std::find(stack_.begin(), stack_.end(), name) != stack_.end()) {
      std::string cycle;
      for (const auto& s : stack_) cycle += s + " -> ";
      throw CompileError("recursive rule cycle: " + cycle + name);
    }
    const RuleDef& def = *defs_.at(name);
    stack_.push_back(name);

    std::vector<std::string> direct;
    collect_slots(def.body, direct);
    std::set<std::string> seen;
    for (const auto& s : direct) {
      if (!seen.insert(s).second) {
        throw InputError("placeholder {" + s + "} appears twice in rule '" + name + "'");
      }
    }
    std::set<std::string> declared(def.params.begin(), def.params.end());
    if (declared.size() != def.params.size()) {
      throw InputError("rule '" + name + "' declares a parameter twice");
    }
    for (const auto& s : direct) {
      if (!declared.count(s)) throw InputError("placeholder {" + s + "} is not a parameter of rule '" + name + "'");
    }

    Structure out;
    out.name = name;
    std::vector<std::string> inherited;
    out.body = lower(def.body, inherited);
    for (const auto& p : def.params) {
      if (!seen.count(p) && std::find(inherited.begin(), inherited.end(), p) == inherited.end()) {
        throw InputError("parameter '" + p + "' of rule '" + name + "' is never used");
      }
    }
    out.arg_names = def.params;
    for (const auto& a : inherited) {
      if (!declared.count(a)) out.arg_names.push_back(a);
    }
    stack_.pop_back();
    resolved_.emplace(name, out);
    return out;
  }

 private:
  void collect_slots(const Expr& e, std::vector<std::string>& out) const {
    if (e.kind == Expr::slot) out.push_back(e.text);
    for (const auto& c : e.children) collect_slots(c, out);
  }

  PatternPtr lower(const Expr& e, std::vector<std::string>& args) {
    switch (e.kind) {
      case Expr::terminal: {
        if (e.text.empty()) throw InputError("empty terminal" + where(e));
        std::vector<TokenId> ids;
        try {
          ids = tokenize(vocab_, e.text);
        } catch (const InputError& err) {
          throw CompileError(std::string("terminal unresolvable in vocabulary") + where(e) + ": " + err.what());
        }
        token_ids_[e.text] = ids;
        return pattern::tokens(std::move(ids), "\"" + escape_token(e.text) + "\"");
      }
      case Expr::regex: {
        RegexPtr ast;
        try {
          ast = parse_regex(e.text);
        } catch (const InputError& err) {
          throw InputError(std::string("regex terminal") + where(e) + ": " + err.what());
        }
        return lower_regex(ast, vocab_);
      }
      case Expr::slot: return pattern::slot(e.text);
      case Expr::ref: {
        if (!defs_.count(e.text)) throw InputError("undefined rule '" + e.text + "'" + where(e));
        Structure inner = resolve(e.text);
        for (const auto& a : inner.arg_names) {
          if (std::find(args.begin(), args.end(), a) == args.end()) args.push_back(a);
        }
        return inner.body;
      }
      case Expr::seq:
      case Expr::alt: {
        std::vector<PatternPtr> children;
        for (const auto& c : e.children) children.push_back(lower(c, args));
        return e.kind == Expr::seq ? pattern::concat(std::move(children))
                                   : pattern::alternation(std::move(children));
      }
      case Expr::star: return pattern::star(lower(e.children[0], args));
      case Expr::plus: return pattern::plus(lower(e.children[0], args));
      case Expr::opt: return pattern::optional(lower(e.children[0], args));
    }
    throw CompileError("unknown template expression");
  }

  const Vocabulary& vocab_;
  std::map<std::string, std::vector<TokenId>, std::less<>>& token_ids_;
  std::map<std::string, const RuleDef*> defs_;
  std::map<std::string, Structure> resolved_;
  std::vector<std::string> stack_;
};

std::size_t count_slots(const PatternPtr& p) {
  std::size_t n = p->kind == PatternKind::slot ? 1 : 0;
  for (const auto& c : p->children) n += count_slots(c);
  return n;
}

}  // namespace

StructureFactory compile_templates(std::string_view source, const Vocabulary& vocab) {
  auto start = std::chrono::steady_clock::now();
  std::vector<Lexeme> lex = TemplateLexer(source).run();
  if (lex.empty()) throw InputError("template file defines no rules");
  std::vector<earley::Symbol> input;
  input.reserve(lex.size());
  const MetaGrammar& m = meta();
  for (const auto& l : lex) input.push_back(m.t[static_cast<int>(l.kind)]);

  earley::ParseNode tree;
  try {
    tree = earley::parse(m.g, input);
  } catch (const earley::ParseError& e) {
    if (e.position() < lex.size()) {
      const Lexeme& l = lex[e.position()];
      throw SyntaxError(std::string("template parse error: unexpected ") + kTokNames[static_cast<int>(l.kind)] +
                            (l.text.empty() ? "" : " '" + l.text + "'"),
                        l.line, l.column);
    }
    const Lexeme& l = lex.back();
    throw SyntaxError("template parse error: unexpected end of file", l.line, l.column + l.text.size());
  }

  std::vector<RuleDef> defs;
  RuleBuilder(m, lex).collect(tree, defs);

  StructureFactory f;
  Resolver resolver(defs, vocab, f.token_ids_);
  for (const auto& d : defs) f.structures_.emplace(d.name, resolver.resolve(d.name));
  f.vocab_fingerprint_ = vocab.fingerprint();
  f.vocab_size_ = vocab.size();
  f.stats_ = factory_stats(f);
  f.stats_.compile_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return f;
}

StructureFactory compile_templates_file(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open template file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return compile_templates(buf.str(), vocab);
}

FactoryStats factory_stats(const StructureFactory& factory) {
  FactoryStats s = factory.stats();
  s.structures = factory.structures().size();
  s.terminals = factory.token_ids().size();
  s.placeholders = 0;
  for (const auto& [name, st] : factory.structures()) s.placeholders += count_slots(st.body);
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

constexpr int kFactoryVersion = 1;

json pattern_to_json(const PatternPtr& p) {
  json j;
  switch (p->kind) {
    case PatternKind::tokens: j["kind"] = "tokens"; j["ids"] = p->tokens; break;
    case PatternKind::set:
      j["kind"] = "set";
      j["ids"] = std::vector<TokenId>(p->set.begin(), p->set.end());
      j["complement"] = p->complement;
      break;
    case PatternKind::concat: j["kind"] = "concat"; break;
    case PatternKind::alternation: j["kind"] = "alternation"; break;
    case PatternKind::star: j["kind"] = "star"; break;
    case PatternKind::plus: j["kind"] = "plus"; break;
    case PatternKind::optional: j["kind"] = "optional"; break;
    case PatternKind::slot: j["kind"] = "slot"; j["name"] = p->name; break;
  }
  if (!p->label.empty()) j["label"] = p->label;
  if (!p->children.empty()) {
    j["children"] = json::array();
    for (const auto& c : p->children) j["children"].push_back(pattern_to_json(c));
  }
  return j;
}

PatternPtr pattern_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  std::string label = j.value("label", "");
  std::vector<PatternPtr> children;
  if (j.contains("children")) {
    for (const auto& c : j.at("children")) children.push_back(pattern_from_json(c));
  }
  auto one = [&]() {
    if (children.size() != 1) throw InputError("factory dump: '" + kind + "' needs one child");
    return children.front();
  };
  if (kind == "tokens") return pattern::tokens(j.at("ids").get<std::vector<TokenId>>(), label);
  if (kind == "set") {
    return pattern::set(TokenSet(j.at("ids").get<std::vector<TokenId>>()), j.at("complement").get<bool>(), label);
  }
  if (kind == "concat") return pattern::concat(std::move(children), label);
  if (kind == "alternation") return pattern::alternation(std::move(children), label);
  if (kind == "star") return pattern::star(one(), label);
  if (kind == "plus") return pattern::plus(one(), label);
  if (kind == "optional") return pattern::optional(one(), label);
  if (kind == "slot") return pattern::slot(j.at("name").get<std::string>());
  throw InputError("factory dump: unknown pattern kind '" + kind + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string dump_factory(const StructureFactory& factory) {
  json j;
  j["format"] = "wgram-factory";
  j["version"] = kFactoryVersion;
  j["vocab"] = {{"size", factory.vocab_size()}, {"fingerprint", hex64(factory.vocab_fingerprint())}};
  json terms = json::object();
  for (const auto& [text, ids] : factory.token_ids()) terms[text] = ids;
  j["token_ids"] = std::move(terms);
  json structs = json::object();
  for (const auto& [name, s] : factory.structures()) {
    structs[name] = {{"args", s.arg_names}, {"template", pattern_to_json(s.body)}};
  }
  j["structures"] = std::move(structs);
  return j.dump(2) + "\n";
}

StructureFactory load_factory(std::string_view document, const Vocabulary& vocab) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::exception& e) {
    throw InputError(std::string("factory dump is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "wgram-factory") throw InputError("not a factory dump");
    if (j.at("version").get<int>() != kFactoryVersion) {
      throw InputError("unsupported factory dump version " + j.at("version").dump());
    }
    if (j.at("vocab").at("size").get<std::size_t>() != vocab.size() ||
        j.at("vocab").at("fingerprint").get<std::string>() != hex64(vocab.fingerprint())) {
      throw InputError("factory dump was compiled for a different vocabulary");
    }
    StructureFactory f;
    for (const auto& [text, ids] : j.at("token_ids").items()) {
      f.token_ids_[text] = ids.get<std::vector<TokenId>>();
    }
    for (const auto& [name, s] : j.at("structures").items()) {
      Structure st;
      st.name = name;
      st.arg_names = s.at("args").get<std::vector<std::string>>();
      st.body = pattern_from_json(s.at("template"));
      f.structures_.emplace(name, std::move(st));
    }
    f.vocab_fingerprint_ = vocab.fingerprint();
    f.vocab_size_ = vocab.size();
    f.stats_ = factory_stats(f);
    return f;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed factory dump: ") + e.what());
  }
}

}  // namespace wgram
