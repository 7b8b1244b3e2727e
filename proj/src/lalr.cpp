#include "wgram/lalr.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace wgram::lalr {

Symbol Grammar::terminal(std::string name) {
  names_.push_back(std::move(name));
  terminal_.push_back(true);
  return static_cast<Symbol>(names_.size() - 1);
}

Symbol Grammar::nonterminal(std::string name) {
  names_.push_back(std::move(name));
  terminal_.push_back(false);
  return static_cast<Symbol>(names_.size() - 1);
}

std::size_t Grammar::add_rule(Symbol lhs, std::vector<Symbol> rhs) {
  if (lhs >= names_.size() || terminal_[lhs]) throw Error("rule head must be a nonterminal");
  for (Symbol s : rhs) {
    if (s >= names_.size()) throw Error("rule mentions an unknown symbol");
  }
  rules_.push_back({lhs, std::move(rhs)});
  return rules_.size() - 1;
}

namespace {

struct Item {
  std::uint32_t rule;
  std::uint32_t dot;
  Symbol look;
  auto operator<=>(const Item&) const = default;
};

using ItemSet = std::vector<Item>;  // sorted, unique

struct Analysis {
  std::vector<bool> nullable;
  std::vector<std::set<Symbol>> first;  // terminals

  Analysis(const Grammar& g) : nullable(g.symbol_count(), false), first(g.symbol_count()) {
    for (Symbol s = 0; s < g.symbol_count(); ++s) {
      if (g.is_terminal(s)) first[s].insert(s);
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& r : g.rules()) {
        bool all_nullable = true;
        for (Symbol s : r.rhs) {
          std::size_t before = first[r.lhs].size();
          first[r.lhs].insert(first[s].begin(), first[s].end());
          changed = changed || first[r.lhs].size() != before;
          if (!nullable[s]) {
            all_nullable = false;
            break;
          }
        }
        if (all_nullable && !nullable[r.lhs]) {
          nullable[r.lhs] = true;
          changed = true;
        }
      }
    }
  }
};

}  // namespace

Table::Table(const Grammar& grammar, Symbol start) : grammar_(grammar) {
  if (grammar_.is_terminal(start)) throw Error("start symbol must be a nonterminal");
  end_ = grammar_.terminal("end of input");
  Symbol augmented = grammar_.nonterminal("<start>");
  const std::uint32_t start_rule = static_cast<std::uint32_t>(grammar_.add_rule(augmented, {start}));
  const auto& rules = grammar_.rules();
  const std::size_t nsym = grammar_.symbol_count();
  Analysis an(grammar_);

  std::vector<std::vector<std::uint32_t>> by_lhs(nsym);
  for (std::uint32_t r = 0; r < rules.size(); ++r) by_lhs[rules[r].lhs].push_back(r);

  auto closure = [&](ItemSet items) {
    std::set<Item> seen(items.begin(), items.end());
    for (std::size_t k = 0; k < items.size(); ++k) {
      Item it = items[k];
      const auto& rhs = rules[it.rule].rhs;
      if (it.dot >= rhs.size() || grammar_.is_terminal(rhs[it.dot])) continue;
      std::set<Symbol> looks;
      bool rest_nullable = true;
      for (std::size_t j = it.dot + 1; j < rhs.size(); ++j) {
        looks.insert(an.first[rhs[j]].begin(), an.first[rhs[j]].end());
        if (!an.nullable[rhs[j]]) {
          rest_nullable = false;
          break;
        }
      }
      if (rest_nullable) looks.insert(it.look);
      for (std::uint32_t r : by_lhs[rhs[it.dot]]) {
        for (Symbol b : looks) {
          Item n{r, 0, b};
          if (seen.insert(n).second) items.push_back(n);
        }
      }
    }
    std::sort(items.begin(), items.end());
    return items;
  };

  // Canonical LR(1) collection.
  std::vector<ItemSet> states{closure({Item{start_rule, 0, end_}})};
  std::map<ItemSet, std::uint32_t> index{{states[0], 0}};
  std::vector<std::map<Symbol, std::uint32_t>> edges(1);
  for (std::size_t s = 0; s < states.size(); ++s) {
    std::map<Symbol, ItemSet> kernels;
    for (const Item& it : states[s]) {
      const auto& rhs = rules[it.rule].rhs;
      if (it.dot < rhs.size()) kernels[rhs[it.dot]].push_back({it.rule, it.dot + 1, it.look});
    }
    for (auto& [sym, kernel] : kernels) {
      ItemSet next = closure(std::move(kernel));
      auto [pos, inserted] = index.emplace(next, static_cast<std::uint32_t>(states.size()));
      if (inserted) {
        states.push_back(std::move(next));
        edges.emplace_back();
      }
      edges[s][sym] = pos->second;
    }
  }

  // Merge states with equal cores.
  std::map<std::set<std::pair<std::uint32_t, std::uint32_t>>, std::uint32_t> cores;
  std::vector<std::uint32_t> merged(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> core;
    for (const Item& it : states[s]) core.emplace(it.rule, it.dot);
    auto [pos, inserted] = cores.emplace(std::move(core), static_cast<std::uint32_t>(cores.size()));
    merged[s] = pos->second;
  }
  const std::size_t nstates = cores.size();

  for (Symbol s = 0; s < nsym; ++s) {
    if (grammar_.is_terminal(s)) {
      terminal_index_.push_back(terminals_.size());
      terminals_.push_back(s);
    } else {
      terminal_index_.push_back(0);
    }
  }
  action_.assign(nstates, std::vector<Action>(terminals_.size()));
  goto_.assign(nstates, std::vector<std::uint32_t>(nsym, 0));

  auto describe = [&](std::uint32_t r) {
    std::string d = grammar_.name(rules[r].lhs) + " ->";
    for (Symbol x : rules[r].rhs) d += " " + grammar_.name(x);
    return d;
  };
  auto set_action = [&](std::uint32_t state, Symbol t, Action a) {
    Action& slot = action_[state][terminal_index_[t]];
    if (slot.kind != Action::error && (slot.kind != a.kind || slot.target != a.target)) {
      std::string what = slot.kind == Action::shift || a.kind == Action::shift ? "shift/reduce" : "reduce/reduce";
      std::uint32_t r = a.kind == Action::reduce ? a.target : slot.target;
      throw GrammarConflict(what + " conflict on " + grammar_.name(t) + " reducing " + describe(r));
    }
    slot = a;
  };

  for (std::size_t s = 0; s < states.size(); ++s) {
    std::uint32_t m = merged[s];
    for (const auto& [sym, target] : edges[s]) {
      if (grammar_.is_terminal(sym)) {
        set_action(m, sym, {Action::shift, merged[target]});
      } else {
        goto_[m][sym] = merged[target];
      }
    }
    for (const Item& it : states[s]) {
      if (it.dot != rules[it.rule].rhs.size()) continue;
      if (it.rule == start_rule) {
        set_action(m, end_, {Action::accept, 0});
      } else {
        set_action(m, it.look, {Action::reduce, it.rule});
      }
    }
  }
}

std::vector<Symbol> Table::expected(std::size_t state) const {
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < terminals_.size(); ++i) {
    if (action_[state][i].kind != Action::error) out.push_back(terminals_[i]);
  }
  return out;
}

}  // namespace wgram::lalr
