#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "wgram/vocabulary.hpp"

namespace wgram {

enum class RegexKind { literal, char_class, concat, alternation, star, plus, optional, group };

struct RegexNode;
using RegexPtr = std::shared_ptr<const RegexNode>;

/// Parsed regex. Runs of plain characters are merged into one literal node.
struct RegexNode {
  RegexKind kind = RegexKind::literal;
  std::string literal;
  CharClass cls;
  std::vector<RegexPtr> children;
  std::string source;  // pattern text this node was parsed from
  std::size_t offset = 0;
};

/// Parses the supported subset: literals, escapes, \d \w \s, [...], [^...],
/// `.`, and `| ( ) * + ?`. Anything else raises UnsupportedConstruct.
RegexPtr parse_regex(std::string_view pattern);

/// S-expression form, e.g. `concat(literal "a", star(class digit))`.
std::string to_string(const RegexPtr& node);

}  // namespace wgram
