#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "wgram/operators.hpp"

namespace wgram {

/// Vocabulary-length bit vector; bit i set means token i is permitted.
class TokenMask {
 public:
  explicit TokenMask(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  /// Throws InputError if the spec names an id outside [0, vocab_size).
  static TokenMask from_spec(const MaskSpec& spec, std::size_t vocab_size);

  std::size_t size() const { return size_; }
  bool test(TokenId id) const { return id < size_ && (words_[id >> 6] >> (id & 63)) & 1u; }
  void set(TokenId id) { words_[id >> 6] |= std::uint64_t{1} << (id & 63); }
  std::size_t count() const;
  std::vector<TokenId> permitted() const;

  /// Packed export: ceil(size/8) bytes, byte k bit j (LSB first) is token 8k+j.
  std::vector<std::uint8_t> packed_bytes() const;

  friend bool operator==(const TokenMask&, const TokenMask&) = default;

 private:
  std::size_t size_;
  std::vector<std::uint64_t> words_;
};

struct CacheCounters {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t constructions = 0;
  std::uint64_t evictions = 0;
  std::size_t entries = 0;
};

/// Process-wide mask store keyed only by (mode, ids, vocabulary size), never by
/// request or machine state, so identical specs share one entry. LRU-bounded.
class MaskCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 4096;

  explicit MaskCache(std::size_t capacity = kDefaultCapacity);

  /// Looks the spec up, building and inserting the mask on a miss. `hit`
  /// reports which of the two happened.
  std::shared_ptr<const TokenMask> materialize(const MaskSpec& spec, std::size_t vocab_size,
                                               bool* hit = nullptr);
  CacheCounters report() const;
  std::size_t capacity() const { return capacity_; }

 private:
  struct Entry {
    std::uint64_t key_hash;
    SetMode mode;
    TokenSet ids;
    std::size_t vocab_size;
    std::shared_ptr<const TokenMask> mask;
  };
  using Lru = std::list<Entry>;

  std::uint64_t key_hash(const MaskSpec& spec, std::size_t vocab_size) const {
    return spec.hash ^ (vocab_size * 0x9e3779b97f4a7c15ull);
  }
  Lru::iterator find_locked(std::uint64_t h, const MaskSpec& spec, std::size_t vocab_size);

  std::size_t capacity_;
  mutable std::mutex mutex_;
  Lru lru_;  // front = most recently used
  std::unordered_map<std::uint64_t, std::vector<Lru::iterator>> index_;
  CacheCounters counters_;
};

/// The cache shared by every request in the process.
MaskCache& global_mask_cache();

inline std::shared_ptr<const TokenMask> materialize(const MaskSpec& spec, std::size_t vocab_size,
                                                    MaskCache& cache) {
  return cache.materialize(spec, vocab_size);
}

}  // namespace wgram
