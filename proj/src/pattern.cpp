#include "wgram/pattern.hpp"

#include <deque>
#include <optional>
#include <unordered_set>

#include "wgram/error.hpp"

namespace wgram {

namespace pattern {

namespace {

PatternPtr finish(PatternNode n) { return std::make_shared<const PatternNode>(std::move(n)); }

}  // namespace

PatternPtr tokens(std::vector<TokenId> ids, std::string label) {
  PatternNode n;
  n.kind = PatternKind::tokens;
  n.tokens = std::move(ids);
  n.label = std::move(label);
  n.nullable = n.tokens.empty();
  return finish(std::move(n));
}

PatternPtr set(TokenSet ids, bool complement, std::string label) {
  PatternNode n;
  n.kind = PatternKind::set;
  n.set = std::move(ids);
  n.complement = complement;
  n.label = std::move(label);
  return finish(std::move(n));
}

PatternPtr concat(std::vector<PatternPtr> children, std::string label) {
  PatternNode n;
  n.kind = PatternKind::concat;
  n.nullable = true;
  for (const auto& c : children) n.nullable = n.nullable && c->nullable;
  n.children = std::move(children);
  n.label = std::move(label);
  return finish(std::move(n));
}

PatternPtr alternation(std::vector<PatternPtr> children, std::string label) {
  PatternNode n;
  n.kind = PatternKind::alternation;
  for (const auto& c : children) n.nullable = n.nullable || c->nullable;
  n.children = std::move(children);
  n.label = std::move(label);
  return finish(std::move(n));
}

PatternPtr star(PatternPtr child, std::string label) {
  PatternNode n;
  n.kind = PatternKind::star;
  n.nullable = true;
  n.children = {std::move(child)};
  n.label = std::move(label);
  return finish(std::move(n));
}

PatternPtr plus(PatternPtr child, std::string label) {
  PatternNode n;
  n.kind = PatternKind::plus;
  n.nullable = child->nullable;
  n.star_companion = star(child, label);
  n.children = {std::move(child)};
  n.label = std::move(label);
  return finish(std::move(n));
}

PatternPtr optional(PatternPtr child, std::string label) {
  PatternNode n;
  n.kind = PatternKind::optional;
  n.nullable = true;
  n.children = {std::move(child)};
  n.label = std::move(label);
  return finish(std::move(n));
}

PatternPtr slot(std::string name) {
  PatternNode n;
  n.kind = PatternKind::slot;
  n.label = "{" + name + "}";
  n.name = std::move(name);
  return finish(std::move(n));
}

}  // namespace pattern

namespace {

// A repeated single character may be covered by multi-character tokens such
// as "xx", so it is lowered like the class [x].
PatternPtr lower_repeated(const RegexPtr& body, const Vocabulary& vocab) {
  const RegexNode* n = body.get();
  while (n->kind == RegexKind::group) n = n->children[0].get();
  if (n->kind != RegexKind::literal || n->literal.size() != 1) return lower_regex(body, vocab);
  TokenSet ids = classify(vocab, CharClass::literal({static_cast<unsigned char>(n->literal[0])}));
  if (ids.empty()) throw CompileError("regex literal '" + n->source + "' matches no vocabulary token");
  return pattern::set(std::move(ids), false, n->source);
}

}  // namespace

PatternPtr lower_regex(const RegexPtr& ast, const Vocabulary& vocab) {
  switch (ast->kind) {
    case RegexKind::literal: {
      std::vector<TokenId> ids;
      try {
        ids = tokenize(vocab, ast->literal);
      } catch (const InputError& e) {
        throw CompileError("regex literal '" + ast->source + "': " + e.what());
      }
      return pattern::tokens(std::move(ids), ast->source);
    }
    case RegexKind::char_class: {
      TokenSet ids = classify(vocab, ast->cls);
      if (ids.empty()) {
        throw CompileError("character class '" + ast->source + "' matches no vocabulary token");
      }
      return pattern::set(std::move(ids), ast->cls.is_complement(), ast->source);
    }
    case RegexKind::concat: {
      std::vector<PatternPtr> children;
      for (const auto& c : ast->children) children.push_back(lower_regex(c, vocab));
      return pattern::concat(std::move(children), ast->source);
    }
    case RegexKind::alternation: {
      std::vector<PatternPtr> children;
      for (const auto& c : ast->children) children.push_back(lower_regex(c, vocab));
      return pattern::alternation(std::move(children), ast->source);
    }
    case RegexKind::star: return pattern::star(lower_repeated(ast->children[0], vocab), ast->source);
    case RegexKind::plus: return pattern::plus(lower_repeated(ast->children[0], vocab), ast->source);
    case RegexKind::optional:
      return pattern::optional(lower_regex(ast->children[0], vocab), ast->source);
    case RegexKind::group: return lower_regex(ast->children[0], vocab);
  }
  throw CompileError("unknown regex node");
}

namespace {

// Continuations are persistent lists so that residuals share their tails and
// can be compared by pointer.
struct LoopEnd {
  TokenSet enter;
  TokenSet exit;
};

struct Cell;
using Cont = std::shared_ptr<const Cell>;

struct Cell {
  PatternPtr node;
  Cont next;
  const LoopEnd* loop_end = nullptr;
};

Cont cons(PatternPtr node, Cont next) {
  return std::make_shared<const Cell>(Cell{std::move(node), std::move(next), nullptr});
}

Cont prepend(const std::vector<PatternPtr>& nodes, Cont next) {
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) next = cons(*it, std::move(next));
  return next;
}

// Residuals for steps that consume the enclosing loop's enter or exit token.
const Cont& loop_mark() {
  static const Cont c = std::make_shared<const Cell>();
  return c;
}
const Cont& exit_mark() {
  static const Cont c = std::make_shared<const Cell>();
  return c;
}
bool is_mark(const Cont& c) { return c == loop_mark() || c == exit_mark(); }

bool same_node(const PatternNode& a, const PatternNode& b) {
  if (&a == &b) return true;
  if (a.kind != b.kind) return false;
  if (a.kind == PatternKind::tokens) return a.tokens == b.tokens;
  if (a.kind == PatternKind::set) return a.set == b.set && a.complement == b.complement;
  return false;
}

bool same_cont(Cont a, Cont b) {
  for (;;) {
    if (a == b) return true;
    if (!a || !b || !a->node || !b->node) return false;
    if (!same_node(*a->node, *b->node)) return false;
    a = a->next;
    b = b->next;
  }
}

struct Step {
  TokenSet tokens;
  Cont residual;
  bool complement = false;
};

struct FirstSteps {
  std::vector<Step> steps;
  bool crossed_stop = false;

  TokenSet all_tokens() const {
    TokenSet out;
    for (const auto& s : steps) out = out.unite(s.tokens);
    return out;
  }
  bool any_complement() const {
    for (const auto& s : steps)
      if (s.complement) return true;
    return false;
  }
};

// Emission ran past the boundary of a factored branch; retry unfactored.
struct FactorAbort {};

struct Emitted {
  std::vector<OperatorPtr> ops;
  TokenSet absorb;
  bool absorb_complement = false;
};

OperatorPtr sequence_of(std::vector<OperatorPtr> ops) {
  if (ops.empty()) return nullptr;
  if (ops.size() == 1) return std::move(ops.front());
  return make_sequence(std::move(ops));
}

class Emitter {
 public:
  explicit Emitter(const Vocabulary& vocab) : vocab_(vocab) {}

  OperatorPtr run(const PatternPtr& root) {
    check(root);
    Cont start = cons(root, cons(pattern::tokens({vocab_.eos()}, "<eos>"), nullptr));
    Emitted out = emit(start, nullptr);
    return sequence_of(std::move(out.ops));
  }

 private:
  void check(const PatternPtr& node) const {
    switch (node->kind) {
      case PatternKind::slot:
        throw CompileError("unbound placeholder " + node->label);
      case PatternKind::tokens:
        if (node->tokens.empty()) throw CompileError("empty literal");
        break;
      case PatternKind::set:
        if (node->set.empty()) throw CompileError("'" + node->label + "' matches no token");
        break;
      case PatternKind::star:
      case PatternKind::plus:
        if (node->children[0]->nullable) {
          throw CompileError("repetition body of '" + node->label + "' can match the empty string");
        }
        break;
      case PatternKind::concat:
      case PatternKind::alternation:
        if (node->children.empty()) throw CompileError("empty group");
        break;
      default: break;
    }
    for (const auto& c : node->children) check(c);
  }

  std::string describe(const TokenSet& ids) const {
    std::string s;
    std::size_t shown = 0;
    for (TokenId id : ids) {
      if (shown == 4) {
        s += ", ...";
        break;
      }
      if (shown++) s += ", ";
      s += "'" + escape_token(vocab_.token(id)) + "'";
    }
    return s;
  }

  [[noreturn]] void ambiguous(const PatternNode& at, const std::string& why) const {
    std::string label = at.label.empty() ? to_string(std::make_shared<const PatternNode>(at)) : at.label;
    throw AmbiguityError("FIRST/FOLLOW overlap in '" + label + "': " + why, label);
  }

  void first_steps(const Cont& c, const Cont& stop, FirstSteps& out) const {
    if (!c) return;
    if (c == stop && !c->loop_end) out.crossed_stop = true;
    if (c->loop_end) {
      out.steps.push_back({c->loop_end->enter, loop_mark(), false});
      out.steps.push_back({c->loop_end->exit, exit_mark(), false});
      return;
    }
    const PatternNode& n = *c->node;
    switch (n.kind) {
      case PatternKind::tokens: {
        Cont residual = c->next;
        if (n.tokens.size() > 1) {
          residual = cons(pattern::tokens({n.tokens.begin() + 1, n.tokens.end()}, n.label), c->next);
        }
        out.steps.push_back({TokenSet{n.tokens.front()}, std::move(residual), false});
        return;
      }
      case PatternKind::set: out.steps.push_back({n.set, c->next, n.complement}); return;
      case PatternKind::concat: first_steps(prepend(n.children, c->next), stop, out); return;
      case PatternKind::alternation:
        for (const auto& child : n.children) first_steps(cons(child, c->next), stop, out);
        return;
      case PatternKind::optional:
        first_steps(c->next, stop, out);
        first_steps(cons(n.children[0], c->next), stop, out);
        return;
      case PatternKind::star:
        first_steps(c->next, stop, out);
        first_steps(cons(n.children[0], c), stop, out);
        return;
      case PatternKind::plus:
        first_steps(cons(n.children[0], cons(n.star_companion, c->next)), stop, out);
        return;
      case PatternKind::slot: throw CompileError("unbound placeholder " + n.label);
    }
  }

  std::vector<Step> group(const std::vector<Step>& steps) const {
    std::vector<Step> groups;
    for (const auto& s : steps) {
      bool merged = false;
      for (auto& g : groups) {
        if (same_cont(g.residual, s.residual)) {
          g.tokens = g.tokens.unite(s.tokens);
          g.complement = g.complement || s.complement;
          merged = true;
          break;
        }
      }
      if (!merged) groups.push_back(s);
    }
    return groups;
  }

  void check_disjoint(const PatternNode& at, const std::vector<Step>& groups,
                      const TokenSet& absorb) const {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      TokenSet hit = groups[i].tokens.intersect(absorb);
      if (!hit.empty()) ambiguous(at, describe(hit) + " can both repeat and continue");
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        hit = groups[i].tokens.intersect(groups[j].tokens);
        if (!hit.empty()) ambiguous(at, describe(hit) + " can start more than one continuation");
      }
    }
  }

  WaitOp plain_wait(const TokenSet& absorb, bool absorb_complement, const TokenSet& waits,
                    bool waits_complement) const {
    WaitOp w;
    w.waits = waits;
    if (absorb_complement || waits_complement) {
      w.mode = SetMode::deny;
      w.ids = absorb.unite(waits).complement(vocab_.size());
    } else {
      w.ids = absorb;
    }
    return w;
  }

  WaitOp condition(const TokenSet& absorb, bool absorb_complement, const Step& yes,
                   const Step& no) const {
    WaitOp w;
    w.true_waits = yes.tokens;
    w.false_waits = no.tokens;
    if (absorb_complement || yes.complement || no.complement) {
      w.mode = SetMode::deny;
      w.ids = absorb.unite(yes.tokens).unite(no.tokens).complement(vocab_.size());
    } else {
      w.ids = absorb;
    }
    return w;
  }

  static std::optional<Cont> common_tail(const Cont& a, const Cont& b) {
    constexpr std::size_t kLimit = 256;
    if (a == b) return a;
    std::unordered_set<const Cell*> seen;
    std::size_t n = 0;
    for (const Cell* p = a.get(); p && n < kLimit; p = p->next.get(), ++n) seen.insert(p);
    n = 0;
    for (Cont p = b; p && n < kLimit; p = p->next, ++n) {
      if (seen.count(p.get())) return p;
    }
    return std::nullopt;
  }

  Emitted emit(Cont c, const Cont& stop) {
    Emitted out;
    TokenSet absorb;
    bool acmp = false;
    for (;;) {
      if (c == stop) break;
      if (!c) throw FactorAbort{};
      if (c->loop_end) throw CompileError("loop end reached outside its body");
      const PatternNode& n = *c->node;
      switch (n.kind) {
        case PatternKind::concat: c = prepend(n.children, c->next); break;
        case PatternKind::plus:
          c = cons(n.children[0], cons(n.star_companion, c->next));
          break;
        case PatternKind::tokens:
          if (absorb.empty()) {
            out.ops.push_back(make_write(n.tokens));
          } else {
            TokenSet first{n.tokens.front()};
            if (first.intersects(absorb)) ambiguous(n, describe(first) + " can both repeat and continue");
            out.ops.push_back(make_wait(plain_wait(absorb, acmp, first, false)));
            if (n.tokens.size() > 1) {
              out.ops.push_back(make_write({n.tokens.begin() + 1, n.tokens.end()}));
            }
            absorb = {};
            acmp = false;
          }
          c = c->next;
          break;
        case PatternKind::set:
          if (n.set.intersects(absorb)) {
            ambiguous(n, describe(n.set.intersect(absorb)) + " can both repeat and continue");
          }
          out.ops.push_back(make_wait(plain_wait(absorb, acmp, n.set, n.complement)));
          absorb = {};
          acmp = false;
          c = c->next;
          break;
        case PatternKind::star:
          c = emit_star(n, c, stop, absorb, acmp, out);
          break;
        case PatternKind::optional:
        case PatternKind::alternation:
          c = emit_decision(n, c, stop, absorb, acmp, out);
          break;
        case PatternKind::slot: throw CompileError("unbound placeholder " + n.label);
      }
    }
    out.absorb = std::move(absorb);
    out.absorb_complement = acmp;
    return out;
  }

  Cont emit_star(const PatternNode& n, const Cont& c, const Cont& stop, TokenSet& absorb,
                 bool& acmp, Emitted& out) {
    const PatternPtr& body = n.children[0];

    FirstSteps enter_first;
    first_steps(cons(body, nullptr), nullptr, enter_first);
    TokenSet enter = enter_first.all_tokens();
    bool enter_cmp = enter_first.any_complement();

    FirstSteps tail_first;
    first_steps(c->next, stop, tail_first);
    TokenSet follow = tail_first.all_tokens();
    TokenSet clash = enter.intersect(follow);
    if (!clash.empty()) ambiguous(n, describe(clash) + " can both continue and exit the repetition");

    const Cont sentinel = std::make_shared<const Cell>();
    FirstSteps probe;
    first_steps(cons(body, sentinel), nullptr, probe);
    bool single = true;
    for (const auto& s : probe.steps) single = single && s.residual == sentinel;

    if (single) {
      if (absorb.empty()) {
        absorb = enter;
        acmp = enter_cmp;
        return c->next;
      }
      return emit_decision(n, c, stop, absorb, acmp, out);
    }

    if (tail_first.crossed_stop) throw FactorAbort{};
    std::vector<Step> exits = group(tail_first.steps);
    for (const auto& g : exits) {
      if (is_mark(g.residual)) {
        ambiguous(n, "a repeated group at the end of a loop body cannot be decided with one token");
      }
    }
    if (exits.size() != 1) ambiguous(n, "the token after the repetition does not determine one continuation");
    const Step& exit = exits.front();
    TokenSet clash_absorb = absorb.intersect(enter.unite(exit.tokens));
    if (!clash_absorb.empty()) ambiguous(n, describe(clash_absorb) + " can both repeat and continue");

    loop_ends_.push_back(LoopEnd{enter, exit.tokens});
    Cont loop_end = std::make_shared<const Cell>(Cell{nullptr, nullptr, &loop_ends_.back()});
    FirstSteps body_first;
    first_steps(cons(body, loop_end), nullptr, body_first);
    std::vector<Step> starts = group(body_first.steps);
    if (starts.size() != 1) ambiguous(n, "the first token of the repeated group does not determine its remainder");
    check_disjoint(n, starts, {});

    Emitted inner = emit(starts.front().residual, loop_end);
    if (inner.ops.empty()) throw CompileError("empty loop body in '" + n.label + "'");
    Step enter_step{enter, nullptr, enter_cmp};
    WaitOp again = condition(inner.absorb, inner.absorb_complement, enter_step, exit);
    OperatorPtr loop = make_do_while(sequence_of(std::move(inner.ops)), std::move(again));
    out.ops.push_back(make_if_else(condition(absorb, acmp, exit, enter_step), nullptr, std::move(loop)));
    absorb = {};
    acmp = false;
    return exit.residual;
  }

  Cont emit_decision(const PatternNode& n, const Cont& c, const Cont& stop, TokenSet& absorb,
                     bool& acmp, Emitted& out) {
    FirstSteps first;
    first_steps(c, stop, first);
    if (first.crossed_stop) throw FactorAbort{};
    std::vector<Step> groups = group(first.steps);
    for (const auto& g : groups) {
      if (is_mark(g.residual)) {
        ambiguous(n, "an optional or alternative part at the end of a loop body cannot be decided with one token");
      }
    }
    check_disjoint(n, groups, absorb);

    if (groups.size() == 1) {
      out.ops.push_back(make_wait(plain_wait(absorb, acmp, groups[0].tokens, groups[0].complement)));
      absorb = {};
      acmp = false;
      return groups[0].residual;
    }
    if (groups.size() > 2) {
      ambiguous(n, "the branch needs a " + std::to_string(groups.size()) +
                       "-way decision; only two-way conditions exist");
    }

    WaitOp cond = condition(absorb, acmp, groups[0], groups[1]);
    if (auto common = common_tail(groups[0].residual, groups[1].residual)) {
      try {
        Emitted yes = emit(groups[0].residual, *common);
        Emitted no = emit(groups[1].residual, *common);
        if (!yes.absorb.empty() || !no.absorb.empty()) throw FactorAbort{};
        out.ops.push_back(make_if_else(cond, sequence_of(std::move(yes.ops)),
                                       sequence_of(std::move(no.ops))));
        absorb = {};
        acmp = false;
        return *common;
      } catch (const FactorAbort&) {
        // fall through to unfactored emission
      }
    }
    Emitted yes = emit(groups[0].residual, stop);
    Emitted no = emit(groups[1].residual, stop);
    if (yes.absorb != no.absorb || yes.absorb_complement != no.absorb_complement) {
      ambiguous(n, "branches end in different repetitions before the loop condition");
    }
    out.ops.push_back(make_if_else(std::move(cond), sequence_of(std::move(yes.ops)),
                                   sequence_of(std::move(no.ops))));
    absorb = std::move(yes.absorb);
    acmp = yes.absorb_complement;
    return stop;
  }

  const Vocabulary& vocab_;
  std::deque<LoopEnd> loop_ends_;
};

}  // namespace

OperatorPtr compile_pattern(const PatternPtr& root, const Vocabulary& vocab) {
  OperatorPtr tree = Emitter(vocab).run(root);
  validate(tree, vocab.size());
  return tree;
}

OperatorPtr compile_regex(const RegexPtr& ast, const Vocabulary& vocab) {
  return compile_pattern(lower_regex(ast, vocab), vocab);
}

std::string to_string(const PatternPtr& node) {
  auto list = [](const std::vector<PatternPtr>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ", ";
      s += to_string(xs[i]);
    }
    return s;
  };
  switch (node->kind) {
    case PatternKind::tokens: {
      std::string s = "tokens[";
      for (std::size_t i = 0; i < node->tokens.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(node->tokens[i]);
      }
      return s + "]";
    }
    case PatternKind::set: return (node->complement ? "nset" : "set") + node->set.to_string();
    case PatternKind::concat: return "concat(" + list(node->children) + ")";
    case PatternKind::alternation: return "alt(" + list(node->children) + ")";
    case PatternKind::star: return "star(" + to_string(node->children[0]) + ")";
    case PatternKind::plus: return "plus(" + to_string(node->children[0]) + ")";
    case PatternKind::optional: return "opt(" + to_string(node->children[0]) + ")";
    case PatternKind::slot: return "slot(" + node->name + ")";
  }
  return "?";
}

}  // namespace wgram
