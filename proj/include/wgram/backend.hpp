#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "wgram/frontend.hpp"
#include "wgram/mask_cache.hpp"
#include "wgram/operators.hpp"
#include "wgram/templates.hpp"
#include "wgram/vocabulary.hpp"

namespace wgram {

/// Per-request decoding state: feed sampled ids, read the next mask.
class Session {
 public:
  Session(OperatorPtr root, std::size_t vocab_size, MaskCache& cache);

  StepOutcome accept_token(TokenId id);
  /// Packed next-token mask (see TokenMask::packed_bytes). Throws once finished.
  std::vector<std::uint8_t> vocab_mask() const;
  bool is_finished() const { return machine_.is_finished(); }

  std::string dump() const { return wgram::dump(machine_.root()); }
  const Machine& machine() const { return machine_; }

 private:
  Machine machine_;
  MaskCache* cache_;
};

/// Compiled templates plus vocabulary, shareable across threads.
class Backend {
 public:
  /// `structure_path` is a `.wgram` template file or a factory dump (JSON).
  Backend(const std::filesystem::path& structure_path, const std::filesystem::path& vocab_path);
  Backend(std::shared_ptr<const StructureFactory> factory, std::shared_ptr<const Vocabulary> vocab,
          MaskCache& cache = global_mask_cache());

  /// `request` is a JSON request document, or a bare format expression.
  Session build_operators(std::string_view request) const;
  Session build_operators(const RequestDocument& request) const;

  const StructureFactory& factory() const { return *factory_; }
  const Vocabulary& vocab() const { return *vocab_; }
  MaskCache& cache() const { return *cache_; }

 private:
  std::shared_ptr<const StructureFactory> factory_;
  std::shared_ptr<const Vocabulary> vocab_;
  MaskCache* cache_;
};

/// Reads a structure file: factory dump if it starts with '{', else templates.
StructureFactory load_structures(const std::filesystem::path& path, const Vocabulary& vocab);

/// JSON document if `request` starts with '{', else a bare format expression.
RequestDocument request_from_text(std::string_view request);

}  // namespace wgram
