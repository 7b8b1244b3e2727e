#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace wgram {

using TokenId = std::uint32_t;

/// Sorted, duplicate-free set of token ids.
class TokenSet {
 public:
  TokenSet() = default;
  TokenSet(std::initializer_list<TokenId> ids) : ids_(ids) { normalize(); }
  explicit TokenSet(std::vector<TokenId> ids) : ids_(std::move(ids)) { normalize(); }

  static TokenSet from_sorted(std::vector<TokenId> ids) {
    TokenSet s;
    s.ids_ = std::move(ids);
    return s;
  }

  bool contains(TokenId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }
  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }
  std::span<const TokenId> ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  TokenId front() const { return ids_.front(); }
  TokenId back() const { return ids_.back(); }

  TokenSet unite(const TokenSet& other) const {
    std::vector<TokenId> out;
    out.reserve(ids_.size() + other.ids_.size());
    std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                   std::back_inserter(out));
    return from_sorted(std::move(out));
  }

  TokenSet intersect(const TokenSet& other) const {
    std::vector<TokenId> out;
    std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                          std::back_inserter(out));
    return from_sorted(std::move(out));
  }

  TokenSet minus(const TokenSet& other) const {
    std::vector<TokenId> out;
    std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                        std::back_inserter(out));
    return from_sorted(std::move(out));
  }

  bool intersects(const TokenSet& other) const {
    auto a = ids_.begin();
    auto b = other.ids_.begin();
    while (a != ids_.end() && b != other.ids_.end()) {
      if (*a == *b) return true;
      if (*a < *b)
        ++a;
      else
        ++b;
    }
    return false;
  }

  bool is_subset_of(const TokenSet& other) const {
    return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
  }

  /// All ids in [0, universe) not in this set.
  TokenSet complement(std::size_t universe) const {
    std::vector<TokenId> out;
    out.reserve(universe > ids_.size() ? universe - ids_.size() : 0);
    auto it = ids_.begin();
    for (TokenId id = 0; id < universe; ++id) {
      if (it != ids_.end() && *it == id) {
        ++it;
        continue;
      }
      out.push_back(id);
    }
    return from_sorted(std::move(out));
  }

  /// Compact form with ranges collapsed, e.g. "{0-9,11}".
  std::string to_string() const {
    std::string out = "{";
    for (std::size_t i = 0; i < ids_.size();) {
      std::size_t j = i;
      while (j + 1 < ids_.size() && ids_[j + 1] == ids_[j] + 1) ++j;
      if (i != 0) out += ',';
      out += std::to_string(ids_[i]);
      if (j > i) out += '-' + std::to_string(ids_[j]);
      i = j + 1;
    }
    out += '}';
    return out;
  }

  friend bool operator==(const TokenSet&, const TokenSet&) = default;

 private:
  void normalize() {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  std::vector<TokenId> ids_;
};

}  // namespace wgram
