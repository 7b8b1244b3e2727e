#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wgram/error.hpp"

namespace wgram::lalr {

using Symbol = std::uint32_t;

/// Grammar for table construction. Terminal ids come first; `end()` is the
/// implicit end-of-input terminal.
class Grammar {
 public:
  struct Rule {
    Symbol lhs;
    std::vector<Symbol> rhs;
  };

  Symbol terminal(std::string name);
  Symbol nonterminal(std::string name);
  std::size_t add_rule(Symbol lhs, std::vector<Symbol> rhs);

  bool is_terminal(Symbol s) const { return terminal_[s]; }
  const std::string& name(Symbol s) const { return names_[s]; }
  std::size_t symbol_count() const { return names_.size(); }
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<std::string> names_;
  std::vector<bool> terminal_;
  std::vector<Rule> rules_;
};

/// Raised at table construction when the grammar is not LALR(1).
class GrammarConflict : public Error {
 public:
  using Error::Error;
};

struct Action {
  enum Kind : std::uint8_t { error, shift, reduce, accept } kind = error;
  std::uint32_t target = 0;  // state for shift, rule for reduce
};

class Table {
 public:
  Table(const Grammar& grammar, Symbol start);

  const Grammar& grammar() const { return grammar_; }
  Symbol end() const { return end_; }
  std::size_t state_count() const { return goto_.size(); }
  const Action& action(std::size_t state, Symbol terminal) const { return action_[state][terminal_index_[terminal]]; }
  std::uint32_t go(std::size_t state, Symbol nonterminal) const { return goto_[state][nonterminal]; }
  /// Terminals with a non-error action in `state`, for diagnostics.
  std::vector<Symbol> expected(std::size_t state) const;

 private:
  Grammar grammar_;
  Symbol end_;
  std::vector<std::size_t> terminal_index_;
  std::vector<Symbol> terminals_;
  std::vector<std::vector<Action>> action_;
  std::vector<std::vector<std::uint32_t>> goto_;
};

/// Input rejected at token index `position`.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t position, std::vector<Symbol> expected)
      : InputError(what), position_(position), expected_(std::move(expected)) {}
  std::size_t position() const { return position_; }
  const std::vector<Symbol>& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::vector<Symbol> expected_;
};

/// Shift-reduce driver. `on_shift(index)` makes the value of input token
/// `index`; `on_reduce(rule, values)` folds the right-hand side values of a
/// reduction. Runs in time linear in the input length.
template <class Value, class OnShift, class OnReduce>
Value parse(const Table& table, std::span<const Symbol> input, OnShift&& on_shift, OnReduce&& on_reduce) {
  std::vector<std::uint32_t> states{0};
  std::vector<Value> values;
  std::size_t i = 0;
  for (;;) {
    Symbol look = i < input.size() ? input[i] : table.end();
    const Action& a = table.action(states.back(), look);
    switch (a.kind) {
      case Action::shift:
        values.push_back(on_shift(i));
        states.push_back(a.target);
        ++i;
        break;
      case Action::reduce: {
        const auto& rule = table.grammar().rules()[a.target];
        std::size_t n = rule.rhs.size();
        std::vector<Value> rhs(std::make_move_iterator(values.end() - n), std::make_move_iterator(values.end()));
        values.resize(values.size() - n);
        states.resize(states.size() - n);
        values.push_back(on_reduce(a.target, rhs));
        states.push_back(table.go(states.back(), rule.lhs));
        break;
      }
      case Action::accept: return std::move(values.back());
      case Action::error:
        throw ParseError("unexpected " + table.grammar().name(look), i, table.expected(states.back()));
    }
  }
}

}  // namespace wgram::lalr
