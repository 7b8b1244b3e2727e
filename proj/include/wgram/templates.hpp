#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wgram/pattern.hpp"
#include "wgram/vocabulary.hpp"

namespace wgram {

/// One parameterized structure: a pattern with `slot` placeholders.
struct Structure {
  std::string name;
  std::vector<std::string> arg_names;
  PatternPtr body;
};

struct FactoryStats {
  std::size_t structures = 0;
  std::size_t terminals = 0;
  std::size_t placeholders = 0;
  double compile_ms = 0.0;
};

/// Offline-compiled template store. Terminals are resolved to token ids and
/// regex terminals are classified against the vocabulary it was built for.
class StructureFactory {
 public:
  const Structure* find(std::string_view name) const;
  const std::map<std::string, Structure, std::less<>>& structures() const { return structures_; }
  const std::map<std::string, std::vector<TokenId>, std::less<>>& token_ids() const { return token_ids_; }
  std::uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const FactoryStats& stats() const { return stats_; }

 private:
  friend StructureFactory compile_templates(std::string_view, const Vocabulary&);
  friend StructureFactory load_factory(std::string_view, const Vocabulary&);

  std::map<std::string, Structure, std::less<>> structures_;
  std::map<std::string, std::vector<TokenId>, std::less<>> token_ids_;
  std::uint64_t vocab_fingerprint_ = 0;
  std::size_t vocab_size_ = 0;
  FactoryStats stats_;
};

/// Parses a `.wgram` template file (Earley) and resolves it against `vocab`.
///
///     # comment
///     NAME(param, ...) ::= body ;
///
/// Bodies use quoted terminals, `{param}` slots, `re"..."` regex terminals,
/// references to other rules, `|`, grouping, and postfix `* + ?`. Rules may
/// not be recursive.
StructureFactory compile_templates(std::string_view source, const Vocabulary& vocab);
StructureFactory compile_templates_file(const std::filesystem::path& path, const Vocabulary& vocab);

FactoryStats factory_stats(const StructureFactory& factory);

/// Versioned JSON serialization with sorted keys.
std::string dump_factory(const StructureFactory& factory);
/// Inverse of dump_factory; rejects dumps made for a different vocabulary.
StructureFactory load_factory(std::string_view document, const Vocabulary& vocab);

}  // namespace wgram
