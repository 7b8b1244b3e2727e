#include "wgram/backend.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "wgram/error.hpp"

namespace wgram {

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

}  // namespace

Session::Session(OperatorPtr root, std::size_t vocab_size, MaskCache& cache)
    : machine_(std::move(root), vocab_size), cache_(&cache) {}

StepOutcome Session::accept_token(TokenId id) {
  if (machine_.is_finished()) throw Error("accept_token on a finished machine");
  if (id >= machine_.vocab_size()) throw InputError("token id " + std::to_string(id) + " is outside the vocabulary");
  return machine_.step(id);
}

std::vector<std::uint8_t> Session::vocab_mask() const {
  if (machine_.is_finished()) throw Error("vocab_mask on a finished machine");
  return cache_->materialize(machine_.current_mask_spec(), machine_.vocab_size())->packed_bytes();
}

StructureFactory load_structures(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::string text = read_file(path, "structure file");
  if (trim_left(text).starts_with("{")) return load_factory(text, vocab);
  return compile_templates(text, vocab);
}

RequestDocument request_from_text(std::string_view request) {
  if (trim_left(request).starts_with("{")) return parse_request_document(request);
  return RequestDocument{std::string(request), {}};
}

Backend::Backend(const std::filesystem::path& structure_path, const std::filesystem::path& vocab_path)
    : cache_(&global_mask_cache()) {
  auto vocab = std::make_shared<const Vocabulary>(load_vocabulary(vocab_path));
  factory_ = std::make_shared<const StructureFactory>(load_structures(structure_path, *vocab));
  vocab_ = std::move(vocab);
}

Backend::Backend(std::shared_ptr<const StructureFactory> factory, std::shared_ptr<const Vocabulary> vocab,
                 MaskCache& cache)
    : factory_(std::move(factory)), vocab_(std::move(vocab)), cache_(&cache) {}

Session Backend::build_operators(std::string_view request) const {
  return build_operators(request_from_text(request));
}

Session Backend::build_operators(const RequestDocument& request) const {
  OperatorPtr root = wgram::build_operators(parse_request(request, *factory_), *factory_, *vocab_);
  return Session(std::move(root), vocab_->size(), *cache_);
}

}  // namespace wgram
