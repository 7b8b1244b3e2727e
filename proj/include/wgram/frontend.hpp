#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wgram/operators.hpp"
#include "wgram/templates.hpp"
#include "wgram/vocabulary.hpp"

namespace wgram {

/// Value bound to a template placeholder: literal text or a regex snippet.
struct ArgValue {
  bool regex = false;
  std::string text;
  bool operator==(const ArgValue&) const = default;
};

enum class Repeat { once, star, plus, optional };

struct RequestElement {
  enum Kind { invocation, literal, regex, group } kind = literal;
  std::string name;                                     // invocation
  std::vector<std::pair<std::string, ArgValue>> args;   // invocation, in source order
  std::string text;                                     // literal / regex
  std::vector<std::vector<RequestElement>> branches;    // group alternatives
  Repeat repeat = Repeat::once;
  std::size_t offset = 0;                               // byte offset in the expression
};

/// A parsed and validated request expression.
struct RequestFormat {
  std::vector<RequestElement> elements;
};

/// JSON request: {"format": "...", "args": {"name": "value", ...}}.
struct RequestDocument {
  std::string format;
  std::map<std::string, std::string> args;
};

RequestDocument parse_request_document(std::string_view json_text);

/// Parses a request expression with a table-driven LALR(1) parser.
///
///     SECTION(title="Intro") (SUBSECTION(title={sub}) re"[^<]*")+ "<hr>"
///
/// `{name}` refers to an entry of `args` and stands for its text. Every
/// invocation must name a structure of `factory` and bind each of its
/// arguments exactly once.
RequestFormat parse_request(std::string_view text, const StructureFactory& factory,
                            const std::map<std::string, std::string>& args = {});
RequestFormat parse_request(const RequestDocument& doc, const StructureFactory& factory);

/// Substitutes arguments into the invoked templates and lowers the whole
/// request (followed by eos) to one operator tree.
OperatorPtr build_operators(const RequestFormat& fmt, const StructureFactory& factory, const Vocabulary& vocab);

/// Canonical text form of a parsed request.
std::string to_string(const RequestFormat& fmt);

struct InstantiationCost {
  double parse_ms = 0.0;
  double build_ms = 0.0;
  double total_ms = 0.0;
  std::uint64_t earley_calls = 0;
  std::size_t expression_length = 0;
};

/// Times parse_request + build_operators and counts template parser calls
/// made meanwhile (always zero: templates are never reparsed online).
InstantiationCost instantiation_cost_probe(const RequestDocument& doc, const StructureFactory& factory,
                                           const Vocabulary& vocab);

}  // namespace wgram
