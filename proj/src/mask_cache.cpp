#include "wgram/mask_cache.hpp"

#include <algorithm>
#include <bit>

#include "wgram/error.hpp"

namespace wgram {

TokenMask TokenMask::from_spec(const MaskSpec& spec, std::size_t vocab_size) {
  if (!spec.ids.empty() && spec.ids.back() >= vocab_size) {
    throw InputError("mask spec names token id " + std::to_string(spec.ids.back()) +
                     " but the vocabulary has " + std::to_string(vocab_size) + " tokens");
  }
  TokenMask mask(vocab_size);
  if (spec.mode == SetMode::allow) {
    for (TokenId id : spec.ids) mask.set(id);
    return mask;
  }
  std::fill(mask.words_.begin(), mask.words_.end(), ~std::uint64_t{0});
  if (vocab_size % 64) mask.words_.back() = (std::uint64_t{1} << (vocab_size % 64)) - 1;
  for (TokenId id : spec.ids) mask.words_[id >> 6] &= ~(std::uint64_t{1} << (id & 63));
  return mask;
}

std::size_t TokenMask::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<TokenId> TokenMask::permitted() const {
  std::vector<TokenId> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits) {
      int b = std::countr_zero(bits);
      out.push_back(static_cast<TokenId>(w * 64 + static_cast<std::size_t>(b)));
      bits &= bits - 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> TokenMask::packed_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<std::uint8_t>(words_[k / 8] >> (8 * (k % 8)));
  }
  return out;
}

MaskCache::MaskCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InputError("mask cache capacity must be at least 1");
}

MaskCache::Lru::iterator MaskCache::find_locked(std::uint64_t h, const MaskSpec& spec,
                                                std::size_t vocab_size) {
  auto bucket = index_.find(h);
  if (bucket == index_.end()) return lru_.end();
  for (auto it : bucket->second) {
    if (it->mode == spec.mode && it->vocab_size == vocab_size && it->ids == spec.ids) return it;
  }
  return lru_.end();
}

std::shared_ptr<const TokenMask> MaskCache::materialize(const MaskSpec& spec,
                                                        std::size_t vocab_size, bool* hit) {
  const std::uint64_t h = key_hash(spec, vocab_size);
  {
    std::lock_guard lock(mutex_);
    auto it = find_locked(h, spec, vocab_size);
    if (it != lru_.end()) {
      ++counters_.hits;
      if (hit) *hit = true;
      lru_.splice(lru_.begin(), lru_, it);
      return it->mask;
    }
    ++counters_.misses;
    ++counters_.constructions;
  }
  if (hit) *hit = false;

  auto mask = std::make_shared<const TokenMask>(TokenMask::from_spec(spec, vocab_size));

  std::lock_guard lock(mutex_);
  auto it = find_locked(h, spec, vocab_size);
  if (it != lru_.end()) return it->mask;  // lost a construction race; contents are identical
  lru_.push_front(Entry{h, spec.mode, spec.ids, vocab_size, mask});
  index_[h].push_back(lru_.begin());
  if (lru_.size() > capacity_) {
    auto victim = std::prev(lru_.end());
    auto& bucket = index_[victim->key_hash];
    bucket.erase(std::find(bucket.begin(), bucket.end(), victim));
    if (bucket.empty()) index_.erase(victim->key_hash);
    lru_.pop_back();
    ++counters_.evictions;
  }
  return mask;
}

CacheCounters MaskCache::report() const {
  std::lock_guard lock(mutex_);
  CacheCounters c = counters_;
  c.entries = lru_.size();
  return c;
}

MaskCache& global_mask_cache() {
  static MaskCache cache;
  return cache;
}

}  // namespace wgram
