#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wgram/token_set.hpp"

namespace wgram {

/// Token table over which masks range. Ids are dense and follow insertion order.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, std::string_view eos_token);

  std::size_t size() const { return tokens_.size(); }
  TokenId eos() const { return eos_; }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<TokenId> find(std::string_view text) const;

  /// Longest non-eos token that is a prefix of `text`; returns {id, length}.
  std::optional<std::pair<TokenId, std::size_t>> longest_prefix(std::string_view text) const;

  /// Concatenated token strings (eos renders as its own text).
  std::string detokenize(std::span<const TokenId> ids) const;

  /// Stable 64-bit content fingerprint, used to pin compiled artifacts to a table.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
  std::size_t max_token_length_ = 0;
};

/// Splits `text` into tokens, longest exact token first. Throws InputError if
/// some byte sequence cannot be covered.
std::vector<TokenId> tokenize(const Vocabulary& vocab, std::string_view text);

// Vocabulary file: first line "#eos <token>", then one escaped token per line.
std::string escape_token(std::string_view raw);
std::string unescape_token(std::string_view escaped);
Vocabulary parse_vocabulary(std::string_view document);
Vocabulary load_vocabulary(const std::filesystem::path& path);
std::string dump_vocabulary(const Vocabulary& vocab);

enum class CharClassKind { digit, word, whitespace, literal_set, negated_set, any };

struct CharClass {
  CharClassKind kind = CharClassKind::any;
  std::set<unsigned char> members;  // literal_set / negated_set only

  static CharClass digit() { return {CharClassKind::digit, {}}; }
  static CharClass word() { return {CharClassKind::word, {}}; }
  static CharClass whitespace() { return {CharClassKind::whitespace, {}}; }
  static CharClass any() { return {CharClassKind::any, {}}; }
  static CharClass literal(std::set<unsigned char> chars);
  static CharClass negated(std::set<unsigned char> chars);

  bool matches(unsigned char c) const;
  /// Whether the class was written as a complement (`[^...]` or `.`).
  bool is_complement() const {
    return kind == CharClassKind::negated_set || kind == CharClassKind::any;
  }
  std::string describe() const;

  friend bool operator==(const CharClass&, const CharClass&) = default;
};

/// Ids of non-empty, non-eos tokens whose every byte satisfies `cls`.
TokenSet classify(const Vocabulary& vocab, const CharClass& cls);

}  // namespace wgram
