#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wgram/operators.hpp"
#include "wgram/regex.hpp"
#include "wgram/vocabulary.hpp"

namespace wgram {

enum class PatternKind { tokens, set, concat, alternation, star, plus, optional, slot };

struct PatternNode;
using PatternPtr = std::shared_ptr<const PatternNode>;

/// Token-level pattern shared by regex compilation, templates, and requests.
/// Literals are already tokenized and classes already classified, so lowering
/// to operators needs no further vocabulary lookups.
struct PatternNode {
  PatternKind kind = PatternKind::tokens;
  std::vector<TokenId> tokens;    // tokens
  TokenSet set;                   // set
  bool complement = false;        // set written as a complement ([^...] or .)
  std::vector<PatternPtr> children;
  std::string name;               // slot
  std::string label;              // source text, used in diagnostics
  bool nullable = false;
  PatternPtr star_companion;      // plus: star over the same child
};

namespace pattern {
PatternPtr tokens(std::vector<TokenId> ids, std::string label = {});
PatternPtr set(TokenSet ids, bool complement, std::string label = {});
PatternPtr concat(std::vector<PatternPtr> children, std::string label = {});
PatternPtr alternation(std::vector<PatternPtr> children, std::string label = {});
PatternPtr star(PatternPtr child, std::string label = {});
PatternPtr plus(PatternPtr child, std::string label = {});
PatternPtr optional(PatternPtr child, std::string label = {});
PatternPtr slot(std::string name);
}  // namespace pattern

/// Classifies and tokenizes a regex AST against `vocab`.
PatternPtr lower_regex(const RegexPtr& ast, const Vocabulary& vocab);

/// Lowers a slot-free pattern followed by eos into an operator tree.
///
/// Loops exit on the first token that can follow them, and every branch point
/// must be decidable from a single token. Trigger tokens are consumed by the
/// Wait that fires on them. Throws AmbiguityError when a decision point cannot
/// be resolved with one token, and CompileError for other malformed input.
OperatorPtr compile_pattern(const PatternPtr& root, const Vocabulary& vocab);

/// parse_regex + lower_regex + compile_pattern.
OperatorPtr compile_regex(const RegexPtr& ast, const Vocabulary& vocab);

/// Canonical text form used by dumps and tests.
std::string to_string(const PatternPtr& node);

}  // namespace wgram
