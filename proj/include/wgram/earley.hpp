#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wgram/error.hpp"

namespace wgram::earley {

using Symbol = std::uint32_t;

/// Context-free grammar over integer symbols. Rule 0 is the augmented start
/// rule added by set_start().
class Grammar {
 public:
  struct Rule {
    Symbol lhs;
    std::vector<Symbol> rhs;
  };

  Symbol terminal(std::string name);
  Symbol nonterminal(std::string name);
  void add_rule(Symbol lhs, std::vector<Symbol> rhs);
  void set_start(Symbol start);

  bool is_terminal(Symbol s) const { return terminal_[s]; }
  const std::string& name(Symbol s) const { return names_[s]; }
  std::size_t symbol_count() const { return names_.size(); }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<std::size_t>& rules_for(Symbol lhs) const { return by_lhs_[lhs]; }
  std::size_t start_rule() const { return start_rule_; }
  bool nullable(Symbol s) const { return nullable_[s]; }

 private:
  Symbol add_symbol(std::string name, bool terminal);
  void compute_nullable();

  std::vector<std::string> names_;
  std::vector<bool> terminal_;
  std::vector<Rule> rules_;
  std::vector<std::vector<std::size_t>> by_lhs_;
  std::vector<bool> nullable_;
  std::size_t start_rule_ = static_cast<std::size_t>(-1);
};

/// Derivation tree. Terminal leaves carry the input index they matched.
struct ParseNode {
  Symbol symbol = 0;
  std::size_t rule = 0;  // nonterminals only
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<ParseNode> children;
};

/// Input rejected; `position` is the index of the first token that cannot be
/// consumed (input size for unexpected end of input).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t position) : InputError(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Input has more than one derivation.
class AmbiguousParse : public InputError {
 public:
  using InputError::InputError;
};

bool recognize(const Grammar& grammar, std::span<const Symbol> input);

/// Returns the unique derivation of `input`; throws ParseError or AmbiguousParse.
ParseNode parse(const Grammar& grammar, std::span<const Symbol> input);

/// Number of recognize/parse calls made by this process.
std::uint64_t invocation_count();

}  // namespace wgram::earley
