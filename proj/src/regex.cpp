#include "wgram/regex.hpp"

#include "wgram/error.hpp"

namespace wgram {

namespace {

std::set<unsigned char> chars_of(const CharClass& cls) {
  std::set<unsigned char> out;
  for (int c = 0; c < 128; ++c) {
    if (cls.matches(static_cast<unsigned char>(c))) out.insert(static_cast<unsigned char>(c));
  }
  return out;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

class RegexParser {
 public:
  explicit RegexParser(std::string_view pattern) : p_(pattern) {}

  RegexPtr parse() {
    if (p_.empty()) throw SyntaxError("empty regex", 1, 1);
    RegexPtr node = parse_alternation();
    if (pos_ < p_.size()) {
      if (p_[pos_] == ')') syntax("unmatched ')'");
      syntax("unexpected character");
    }
    return node;
  }

 private:
  [[noreturn]] void syntax(const std::string& what) const {
    throw SyntaxError("regex: " + what, 1, pos_ + 1);
  }
  [[noreturn]] void unsupported(const std::string& what, std::size_t at) const {
    throw UnsupportedConstruct("regex: unsupported construct " + what, at);
  }

  bool at_end() const { return pos_ >= p_.size(); }
  char peek() const { return p_[pos_]; }

  RegexPtr finish(RegexNode node, std::size_t start) {
    node.offset = start;
    node.source = std::string(p_.substr(start, pos_ - start));
    return std::make_shared<const RegexNode>(std::move(node));
  }

  RegexPtr parse_alternation() {
    std::size_t start = pos_;
    RegexPtr left = parse_concat();
    while (!at_end() && peek() == '|') {
      ++pos_;
      RegexPtr right = parse_concat();
      RegexNode alt;
      alt.kind = RegexKind::alternation;
      alt.children = {left, right};
      left = finish(std::move(alt), start);
    }
    return left;
  }

  RegexPtr parse_concat() {
    std::size_t start = pos_;
    std::vector<RegexPtr> items;
    while (!at_end() && peek() != '|' && peek() != ')') items.push_back(parse_postfix());
    if (items.empty()) syntax("empty expression");

    // Merge adjacent plain literals.
    std::vector<RegexPtr> merged;
    for (auto& item : items) {
      if (item->kind == RegexKind::literal && !merged.empty() &&
          merged.back()->kind == RegexKind::literal) {
        RegexNode lit = *merged.back();
        lit.literal += item->literal;
        lit.source += item->source;
        merged.back() = std::make_shared<const RegexNode>(std::move(lit));
      } else {
        merged.push_back(std::move(item));
      }
    }
    if (merged.size() == 1) return merged.front();
    RegexNode cat;
    cat.kind = RegexKind::concat;
    cat.children = std::move(merged);
    return finish(std::move(cat), start);
  }

  RegexPtr parse_postfix() {
    std::size_t start = pos_;
    RegexPtr atom = parse_atom();
    bool quantified = false;
    while (!at_end()) {
      char c = peek();
      RegexKind kind;
      if (c == '*')
        kind = RegexKind::star;
      else if (c == '+')
        kind = RegexKind::plus;
      else if (c == '?')
        kind = RegexKind::optional;
      else if (c == '{')
        unsupported("bounded repetition '{m,n}'", pos_);
      else
        break;
      if (quantified) unsupported("stacked or lazy quantifier", pos_);
      ++pos_;
      quantified = true;
      RegexNode q;
      q.kind = kind;
      q.children = {atom};
      atom = finish(std::move(q), start);
    }
    return atom;
  }

  RegexPtr parse_atom() {
    std::size_t start = pos_;
    char c = peek();
    switch (c) {
      case '(': {
        ++pos_;
        if (!at_end() && peek() == '?') unsupported("group modifier '(?'", start);
        RegexPtr inner = parse_alternation();
        if (at_end() || peek() != ')') syntax("missing ')'");
        ++pos_;
        RegexNode g;
        g.kind = RegexKind::group;
        g.children = {inner};
        return finish(std::move(g), start);
      }
      case '[': return parse_bracket();
      case '.': {
        ++pos_;
        RegexNode n;
        n.kind = RegexKind::char_class;
        n.cls = CharClass::any();
        return finish(std::move(n), start);
      }
      case '\\': return parse_escape();
      case '*':
      case '+':
      case '?': syntax("nothing to repeat");
      case '{':
      case '}': unsupported("bounded repetition '{m,n}'", pos_);
      case '^':
      case '$': unsupported("anchor", pos_);
      case ']': syntax("unmatched ']'");
      default: {
        ++pos_;
        RegexNode n;
        n.kind = RegexKind::literal;
        n.literal = std::string(1, c);
        return finish(std::move(n), start);
      }
    }
  }

  // Returns either a class (kind set) or a single literal character.
  struct Escape {
    bool is_class = false;
    CharClass cls;
    char ch = 0;
  };

  Escape read_escape() {
    std::size_t at = pos_;
    ++pos_;  // backslash
    if (at_end()) syntax("trailing backslash");
    char e = p_[pos_++];
    Escape out;
    switch (e) {
      case 'd': out.is_class = true; out.cls = CharClass::digit(); return out;
      case 'w': out.is_class = true; out.cls = CharClass::word(); return out;
      case 's': out.is_class = true; out.cls = CharClass::whitespace(); return out;
      case 'n': out.ch = '\n'; return out;
      case 't': out.ch = '\t'; return out;
      case 'r': out.ch = '\r'; return out;
      case 'x': {
        if (pos_ + 2 > p_.size()) syntax("truncated \\x escape");
        int hi = hex_digit(p_[pos_]);
        int lo = hex_digit(p_[pos_ + 1]);
        if (hi < 0 || lo < 0) syntax("bad \\x escape");
        pos_ += 2;
        out.ch = static_cast<char>((hi << 4) | lo);
        return out;
      }
      default: break;
    }
    auto u = static_cast<unsigned char>(e);
    if ((u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z')) {
      if (u >= '1' && u <= '9') unsupported("backreference", at);
      unsupported(std::string("escape '\\") + e + "'", at);
    }
    out.ch = e;
    return out;
  }

  RegexPtr parse_escape() {
    std::size_t start = pos_;
    Escape e = read_escape();
    RegexNode n;
    if (e.is_class) {
      n.kind = RegexKind::char_class;
      n.cls = e.cls;
    } else {
      n.kind = RegexKind::literal;
      n.literal = std::string(1, e.ch);
    }
    return finish(std::move(n), start);
  }

  RegexPtr parse_bracket() {
    std::size_t start = pos_;
    ++pos_;
    bool negated = false;
    if (!at_end() && peek() == '^') {
      negated = true;
      ++pos_;
    }
    std::set<unsigned char> members;
    bool first = true;
    for (;;) {
      if (at_end()) syntax("missing ']'");
      char c = peek();
      if (c == ']' && !first) {
        ++pos_;
        break;
      }
      first = false;
      unsigned char lo;
      if (c == '\\') {
        Escape e = read_escape();
        if (e.is_class) {
          auto cs = chars_of(e.cls);
          members.insert(cs.begin(), cs.end());
          continue;
        }
        lo = static_cast<unsigned char>(e.ch);
      } else {
        if (c == '[' && pos_ + 1 < p_.size() && p_[pos_ + 1] == ':') {
          unsupported("POSIX character class", pos_);
        }
        lo = static_cast<unsigned char>(c);
        ++pos_;
      }
      if (pos_ + 1 < p_.size() && peek() == '-' && p_[pos_ + 1] != ']') {
        ++pos_;
        unsigned char hi;
        if (peek() == '\\') {
          Escape e = read_escape();
          if (e.is_class) syntax("class escape as range bound");
          hi = static_cast<unsigned char>(e.ch);
        } else {
          hi = static_cast<unsigned char>(peek());
          ++pos_;
        }
        if (hi < lo) syntax("reversed range");
        for (unsigned v = lo; v <= hi; ++v) members.insert(static_cast<unsigned char>(v));
      } else {
        members.insert(lo);
      }
    }
    if (members.empty()) syntax("empty character set");
    RegexNode n;
    n.kind = RegexKind::char_class;
    n.cls = negated ? CharClass::negated(std::move(members)) : CharClass::literal(std::move(members));
    return finish(std::move(n), start);
  }

  std::string_view p_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) { return "\"" + escape_token(s) + "\""; }

}  // namespace

RegexPtr parse_regex(std::string_view pattern) { return RegexParser(pattern).parse(); }

std::string to_string(const RegexPtr& node) {
  switch (node->kind) {
    case RegexKind::literal: return "literal " + quote(node->literal);
    case RegexKind::char_class: return "class " + node->cls.describe();
    case RegexKind::concat: {
      std::string s = "concat(";
      for (std::size_t i = 0; i < node->children.size(); ++i) {
        if (i) s += ", ";
        s += to_string(node->children[i]);
      }
      return s + ")";
    }
    case RegexKind::alternation:
      return "alternation(" + to_string(node->children[0]) + ", " + to_string(node->children[1]) + ")";
    case RegexKind::star: return "star(" + to_string(node->children[0]) + ")";
    case RegexKind::plus: return "plus(" + to_string(node->children[0]) + ")";
    case RegexKind::optional: return "optional(" + to_string(node->children[0]) + ")";
    case RegexKind::group: return "group(" + to_string(node->children[0]) + ")";
  }
  return "?";
}

}  // namespace wgram
