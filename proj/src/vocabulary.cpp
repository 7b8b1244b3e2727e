#include "wgram/vocabulary.hpp"

#include <fstream>
#include <sstream>

#include "wgram/error.hpp"

namespace wgram {

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::string_view eos_token)
    : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw InputError("vocabulary is empty");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw InputError("duplicate token '" + escape_token(tokens_[i]) + "' at ids " +
                       std::to_string(it->second) + " and " + std::to_string(i));
    }
    max_token_length_ = std::max(max_token_length_, tokens_[i].size());
  }
  auto eos = index_.find(std::string(eos_token));
  if (eos == index_.end()) {
    throw InputError("eos token '" + escape_token(eos_token) + "' is not in the vocabulary");
  }
  eos_ = eos->second;
}

std::optional<TokenId> Vocabulary::find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::pair<TokenId, std::size_t>> Vocabulary::longest_prefix(
    std::string_view text) const {
  std::string probe;
  for (std::size_t len = std::min(max_token_length_, text.size()); len > 0; --len) {
    probe.assign(text.substr(0, len));
    auto it = index_.find(probe);
    if (it != index_.end() && it->second != eos_) return std::make_pair(it->second, len);
  }
  return std::nullopt;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += tokens_.at(id);
  return out;
}

std::uint64_t Vocabulary::fingerprint() const {
  // FNV-1a over length-prefixed tokens plus the eos id.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  auto mix_u64 = [&mix](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(v >> (8 * i)));
  };
  mix_u64(tokens_.size());
  mix_u64(eos_);
  for (const auto& t : tokens_) {
    mix_u64(t.size());
    for (unsigned char c : t) mix(c);
  }
  return h;
}

std::vector<TokenId> tokenize(const Vocabulary& vocab, std::string_view text) {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto hit = vocab.longest_prefix(text.substr(pos));
    if (!hit) {
      throw InputError("text '" + escape_token(text) + "' has no token covering offset " +
                       std::to_string(pos) + " ('" + escape_token(text.substr(pos, 1)) + "')");
    }
    out.push_back(hit->first);
    pos += hit->second;
  }
  return out;
}

namespace {

const char* kHex = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string escape_token(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          out += "\\x";
          out += kHex[c >> 4];
          out += kHex[c & 0xf];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out;
}

std::string unescape_token(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    char c = escaped[i];
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i >= escaped.size()) throw InputError("dangling backslash in token escape");
    switch (escaped[i]) {
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'x': {
        if (i + 2 >= escaped.size()) throw InputError("truncated \\x escape in token");
        int hi = hex_value(escaped[i + 1]);
        int lo = hex_value(escaped[i + 2]);
        if (hi < 0 || lo < 0) throw InputError("bad \\x escape in token");
        out += static_cast<char>((hi << 4) | lo);
        i += 2;
        break;
      }
      default:
        throw InputError(std::string("unknown token escape \\") + escaped[i]);
    }
  }
  return out;
}

Vocabulary parse_vocabulary(std::string_view document) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < document.size()) {
    std::size_t nl = document.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(document.substr(start));
      break;
    }
    lines.push_back(document.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty() || !lines.front().starts_with("#eos ")) {
    throw InputError("vocabulary file must start with a '#eos <token>' line");
  }
  std::string eos = unescape_token(lines.front().substr(5));
  std::vector<std::string> tokens;
  tokens.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) tokens.push_back(unescape_token(lines[i]));
  return Vocabulary(std::move(tokens), eos);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vocabulary(buf.str());
}

std::string dump_vocabulary(const Vocabulary& vocab) {
  std::string out = "#eos " + escape_token(vocab.token(vocab.eos())) + "\n";
  for (const auto& t : vocab.tokens()) {
    out += escape_token(t);
    out += '\n';
  }
  return out;
}

CharClass CharClass::literal(std::set<unsigned char> chars) {
  if (chars.empty()) throw InputError("literal character set is empty");
  return {CharClassKind::literal_set, std::move(chars)};
}

CharClass CharClass::negated(std::set<unsigned char> chars) {
  if (chars.empty()) throw InputError("negated character set is empty");
  return {CharClassKind::negated_set, std::move(chars)};
}

bool CharClass::matches(unsigned char c) const {
  switch (kind) {
    case CharClassKind::digit: return c >= '0' && c <= '9';
    case CharClassKind::word:
      return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    case CharClassKind::whitespace: return c == ' ' || c == '\t' || c == '\n' || c == '\r';
    case CharClassKind::literal_set: return members.count(c) != 0;
    case CharClassKind::negated_set: return c < 0x80 && members.count(c) == 0;
    case CharClassKind::any: return true;
  }
  return false;
}

std::string CharClass::describe() const {
  switch (kind) {
    case CharClassKind::digit: return "digit";
    case CharClassKind::word: return "word";
    case CharClassKind::whitespace: return "whitespace";
    case CharClassKind::any: return "any";
    case CharClassKind::literal_set:
    case CharClassKind::negated_set: {
      std::string s = kind == CharClassKind::literal_set ? "set[" : "negated[";
      for (unsigned char c : members) s += escape_token(std::string_view(reinterpret_cast<const char*>(&c), 1));
      return s + "]";
    }
  }
  return "?";
}

TokenSet classify(const Vocabulary& vocab, const CharClass& cls) {
  std::vector<TokenId> out;
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (id == vocab.eos()) continue;
    const std::string& tok = vocab.token(id);
    if (tok.empty()) continue;
    bool all = true;
    for (unsigned char c : tok) {
      if (!cls.matches(c)) {
        all = false;
        break;
      }
    }
    if (all) out.push_back(id);
  }
  return TokenSet::from_sorted(std::move(out));
}

}  // namespace wgram
