#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wgram/mask_cache.hpp"
#include "wgram/operators.hpp"
#include "wgram/vocabulary.hpp"

namespace wgram {

struct DecodeConfig {
  std::uint64_t seed = 0;
  std::size_t max_tokens = 100000;
  double eos_bias = 0.3;  // chance of picking eos whenever it is permitted

  /// Throws InputError on out-of-range settings.
  void check() const;
};

/// Engine-side overhead split into compilation, state tracking, and mask creation.
struct BreakdownReport {
  static constexpr const char* kSchema = "wgram.breakdown/1";

  double grammar_compilation_ms = 0.0;
  double state_tracking_ms = 0.0;
  double mask_creation_ms = 0.0;
  double ttft_overhead_ms = 0.0;  // compilation until the first mask is ready
  double tpot_overhead_ms = 0.0;  // (tracking + masks) per generated token
  double total_ms = 0.0;
  std::size_t tokens_generated = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;  // each miss is one mask construction
  bool finished = false;

  std::string to_json() const;
};

/// Produces the operator tree for a run; called inside the compilation stage.
using TreeSource = std::function<OperatorPtr()>;

struct DecodeResult {
  std::vector<TokenId> tokens;
  BreakdownReport report;
};

/// Simulated decoding: a seeded sampler picks uniformly among permitted tokens.
/// Throws MaskSoundnessError if the machine rejects a token its mask allowed.
DecodeResult mock_decode(const TreeSource& source, const Vocabulary& vocab, const DecodeConfig& config,
                         MaskCache& cache = global_mask_cache());

struct ReplayResult {
  bool accepted = false;
  std::optional<std::size_t> violation;  // first offending stream position
  std::string reason;
  std::vector<StepOutcome> trace;                  // one entry per consumed token
  std::vector<std::vector<std::uint8_t>> masks;    // packed mask before each token
  BreakdownReport report;
};

/// One decimal token id per line; blank lines ignored.
std::vector<TokenId> parse_token_stream(std::string_view text, std::size_t vocab_size);
std::vector<TokenId> load_token_stream(const std::string& path, std::size_t vocab_size);

/// Checks a recorded stream: every token must pass the mask and the machine
/// must finish exactly at the end of the stream.
ReplayResult replay_decode(const std::vector<TokenId>& stream, const TreeSource& source, const Vocabulary& vocab,
                           MaskCache& cache = global_mask_cache());

struct StageStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

struct BenchReport {
  static constexpr const char* kSchema = "wgram.bench/1";

  std::size_t repetitions = 0;
  StageStats grammar_compilation, state_tracking, mask_creation, ttft_overhead, tpot_overhead;
  std::vector<BreakdownReport> runs;  // in repetition order

  std::string to_json() const;
  std::string to_table() const;
};

/// Repeats mock_decode with the same config. Runs may be spread over
/// `threads` workers; they all share `cache`.
BenchReport bench(const TreeSource& source, const Vocabulary& vocab, const DecodeConfig& config,
                  std::size_t repetitions, std::size_t threads = 1, MaskCache& cache = global_mask_cache());

}  // namespace wgram
