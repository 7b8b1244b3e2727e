#include "wgram/earley.hpp"

#include <atomic>
#include <unordered_map>

namespace wgram::earley {

namespace {
std::atomic<std::uint64_t> g_invocations{0};
}

std::uint64_t invocation_count() { return g_invocations.load(); }

Symbol Grammar::add_symbol(std::string name, bool terminal) {
  names_.push_back(std::move(name));
  terminal_.push_back(terminal);
  by_lhs_.emplace_back();
  nullable_.push_back(false);
  return static_cast<Symbol>(names_.size() - 1);
}

Symbol Grammar::terminal(std::string name) { return add_symbol(std::move(name), true); }
Symbol Grammar::nonterminal(std::string name) { return add_symbol(std::move(name), false); }

void Grammar::add_rule(Symbol lhs, std::vector<Symbol> rhs) {
  if (terminal_.at(lhs)) throw Error("rule left-hand side must be a nonterminal");
  by_lhs_[lhs].push_back(rules_.size());
  rules_.push_back({lhs, std::move(rhs)});
  compute_nullable();
}

void Grammar::set_start(Symbol start) {
  Symbol aug = nonterminal(names_.at(start) + "'");
  add_rule(aug, {start});
  start_rule_ = rules_.size() - 1;
}

void Grammar::compute_nullable() {
  std::fill(nullable_.begin(), nullable_.end(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : rules_) {
      if (nullable_[r.lhs]) continue;
      bool all = true;
      for (Symbol s : r.rhs) all = all && nullable_[s];
      if (all) {
        nullable_[r.lhs] = true;
        changed = true;
      }
    }
  }
}

namespace {

struct ItemRef {
  std::uint32_t set;
  std::uint32_t index;
  friend bool operator==(const ItemRef&, const ItemRef&) = default;
};

// How an item with dot > 0 was reached: from `prev` by consuming one symbol
// spanning [child_begin, child_end).
struct Link {
  ItemRef prev;
  std::uint32_t child_begin;
  friend bool operator==(const Link&, const Link&) = default;
};

struct Item {
  std::uint32_t rule;
  std::uint32_t dot;
  std::uint32_t origin;
  std::vector<Link> links;
};

class Chart {
 public:
  Chart(const Grammar& g, std::span<const Symbol> input) : g_(g), input_(input) {
    if (g.start_rule() == static_cast<std::size_t>(-1)) throw Error("grammar has no start symbol");
    sets_.resize(input.size() + 1);
    index_.resize(input.size() + 1);
  }

  // Returns the index of the last set that received any item.
  std::size_t run() {
    add(0, static_cast<std::uint32_t>(g_.start_rule()), 0, 0, nullptr);
    std::size_t last = 0;
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      if (sets_[i].empty()) break;
      last = i;
      for (std::size_t k = 0; k < sets_[i].size(); ++k) process(i, k);
    }
    return last;
  }

  bool accepted() const { return find_completed_start() != nullptr; }

  ParseNode tree() const {
    const Item* top = find_completed_start();
    const auto& rule = g_.rules()[top->rule];
    ParseNode root = build(*top, input_.size());
    (void)rule;
    return root.children.front();  // strip the augmented rule
  }

 private:
  static std::uint64_t key(std::uint32_t rule, std::uint32_t dot, std::uint32_t origin) {
    return (static_cast<std::uint64_t>(rule) << 40) ^ (static_cast<std::uint64_t>(dot) << 24) ^ origin;
  }

  void add(std::size_t set, std::uint32_t rule, std::uint32_t dot, std::uint32_t origin,
           const Link* link) {
    auto& idx = index_[set];
    auto [it, inserted] = idx.emplace(key(rule, dot, origin), sets_[set].size());
    if (inserted) {
      Item item{rule, dot, origin, {}};
      if (link) item.links.push_back(*link);
      sets_[set].push_back(std::move(item));
      return;
    }
    if (!link) return;
    auto& links = sets_[set][it->second].links;
    if (std::find(links.begin(), links.end(), *link) == links.end()) links.push_back(*link);
  }

  void process(std::size_t i, std::size_t k) {
    const Item item = {sets_[i][k].rule, sets_[i][k].dot, sets_[i][k].origin, {}};
    const auto& rule = g_.rules()[item.rule];
    ItemRef self{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)};
    if (item.dot < rule.rhs.size()) {
      Symbol next = rule.rhs[item.dot];
      if (g_.is_terminal(next)) {
        if (i < input_.size() && input_[i] == next) {
          Link l{self, static_cast<std::uint32_t>(i)};
          add(i + 1, item.rule, item.dot + 1, item.origin, &l);
        }
        return;
      }
      for (std::size_t r : g_.rules_for(next)) add(i, static_cast<std::uint32_t>(r), 0, static_cast<std::uint32_t>(i), nullptr);
      if (g_.nullable(next)) {
        Link l{self, static_cast<std::uint32_t>(i)};
        add(i, item.rule, item.dot + 1, item.origin, &l);
      }
      return;
    }
    // Completion.
    const Symbol lhs = rule.lhs;
    const auto& origin_set = sets_[item.origin];
    for (std::size_t j = 0; j < origin_set.size(); ++j) {
      const auto& waiting = origin_set[j];
      const auto& wr = g_.rules()[waiting.rule];
      if (waiting.dot < wr.rhs.size() && wr.rhs[waiting.dot] == lhs) {
        Link l{{item.origin, static_cast<std::uint32_t>(j)}, item.origin};
        add(i, waiting.rule, waiting.dot + 1, waiting.origin, &l);
      }
    }
  }

  const Item* find_completed_start() const {
    const auto& last = sets_.back();
    for (const auto& item : last) {
      if (item.rule == g_.start_rule() && item.origin == 0 &&
          item.dot == g_.rules()[item.rule].rhs.size()) {
        return &item;
      }
    }
    return nullptr;
  }

  std::string describe_rule(std::size_t r) const {
    const auto& rule = g_.rules()[r];
    std::string s = g_.name(rule.lhs) + " ->";
    for (Symbol x : rule.rhs) s += " " + g_.name(x);
    return s;
  }

  const Item& completed(Symbol lhs, std::size_t begin, std::size_t end) const {
    const Item* found = nullptr;
    for (const auto& item : sets_[end]) {
      const auto& rule = g_.rules()[item.rule];
      if (rule.lhs == lhs && item.origin == begin && item.dot == rule.rhs.size()) {
        if (found) {
          throw AmbiguousParse("ambiguous parse of " + g_.name(lhs) + " over input [" +
                               std::to_string(begin) + ", " + std::to_string(end) +
                               "): derivable as '" + describe_rule(found->rule) + "' and as '" +
                               describe_rule(item.rule) + "'");
        }
        found = &item;
      }
    }
    if (!found) throw Error("earley: missing completed item while building tree");
    return *found;
  }

  ParseNode build(const Item& item, std::size_t end) const {
    const auto& rule = g_.rules()[item.rule];
    ParseNode node;
    node.symbol = rule.lhs;
    node.rule = item.rule;
    node.begin = item.origin;
    node.end = end;
    node.children.resize(rule.rhs.size());
    const Item* cur = &item;
    std::size_t cur_end = end;
    for (std::size_t d = rule.rhs.size(); d > 0; --d) {
      if (cur->links.size() > 1) {
        throw AmbiguousParse("ambiguous parse of '" + describe_rule(cur->rule) + "' over input [" +
                             std::to_string(cur->origin) + ", " + std::to_string(cur_end) +
                             "): symbol " + g_.name(rule.rhs[d - 1]) + " can start at " +
                             std::to_string(cur->links[0].child_begin) + " or " +
                             std::to_string(cur->links[1].child_begin));
      }
      const Link& link = cur->links.front();
      Symbol sym = rule.rhs[d - 1];
      ParseNode& child = node.children[d - 1];
      if (g_.is_terminal(sym)) {
        child.symbol = sym;
        child.begin = link.child_begin;
        child.end = link.child_begin + 1;
      } else {
        child = build(completed(sym, link.child_begin, cur_end), cur_end);
      }
      cur_end = link.child_begin;
      cur = &sets_[link.prev.set][link.prev.index];
    }
    return node;
  }

  const Grammar& g_;
  std::span<const Symbol> input_;
  std::vector<std::vector<Item>> sets_;
  std::vector<std::unordered_map<std::uint64_t, std::size_t>> index_;
};

}  // namespace

bool recognize(const Grammar& grammar, std::span<const Symbol> input) {
  ++g_invocations;
  Chart chart(grammar, input);
  chart.run();
  return chart.accepted();
}

ParseNode parse(const Grammar& grammar, std::span<const Symbol> input) {
  ++g_invocations;
  Chart chart(grammar, input);
  std::size_t last = chart.run();
  if (!chart.accepted()) {
    if (last < input.size()) {
      throw ParseError("unexpected " + grammar.name(input[last]), last);
    }
    throw ParseError("unexpected end of input", input.size());
  }
  return chart.tree();
}

}  // namespace wgram::earley
