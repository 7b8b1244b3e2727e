#include "wgram/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wgram/error.hpp"

namespace wgram {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

// The index-th set bit of `mask`, skipping `skip` when it is set.
TokenId nth_permitted(const TokenMask& mask, std::size_t index, std::optional<TokenId> skip) {
  for (TokenId id = 0; id < mask.size(); ++id) {
    if (!mask.test(id) || id == skip) continue;
    if (index-- == 0) return id;
  }
  throw MaskSoundnessError("sampler ran past the permitted set");
}

}  // namespace

void DecodeConfig::check() const {
  if (!(eos_bias >= 0.0 && eos_bias <= 1.0)) throw InputError("eos bias must lie in [0, 1]");
  if (max_tokens < 1) throw InputError("max tokens must be at least 1");
}

std::string BreakdownReport::to_json() const {
  nlohmann::json j = {
      {"schema", kSchema},
      {"grammar_compilation_ms", grammar_compilation_ms},
      {"state_tracking_ms", state_tracking_ms},
      {"mask_creation_ms", mask_creation_ms},
      {"ttft_overhead_ms", ttft_overhead_ms},
      {"tpot_overhead_ms", tpot_overhead_ms},
      {"total_ms", total_ms},
      {"tokens_generated", tokens_generated},
      {"cache_hits", cache_hits},
      {"cache_misses", cache_misses},
      {"finished", finished},
  };
  return j.dump(2);
}

DecodeResult mock_decode(const TreeSource& source, const Vocabulary& vocab, const DecodeConfig& config,
                         MaskCache& cache) {
  config.check();
  DecodeResult out;
  BreakdownReport& r = out.report;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const TokenId eos = vocab.eos();

  auto start = Clock::now();
  Machine machine(source(), vocab.size());
  auto compiled = Clock::now();
  r.grammar_compilation_ms = ms_between(start, compiled);

  while (!machine.is_finished() && out.tokens.size() < config.max_tokens) {
    auto m0 = Clock::now();
    bool hit = false;
    auto mask = cache.materialize(machine.current_mask_spec(), vocab.size(), &hit);
    auto m1 = Clock::now();
    r.mask_creation_ms += ms_between(m0, m1);
    ++(hit ? r.cache_hits : r.cache_misses);
    if (out.tokens.empty()) r.ttft_overhead_ms = r.grammar_compilation_ms + ms_between(m0, m1);

    std::size_t allowed = mask->count();
    if (allowed == 0) throw MaskSoundnessError("empty mask at step " + std::to_string(out.tokens.size()));
    TokenId pick;
    if (mask->test(eos) && (allowed == 1 || coin(rng) < config.eos_bias)) {
      pick = eos;
    } else {
      bool skip_eos = mask->test(eos);
      std::size_t choices = allowed - (skip_eos ? 1 : 0);
      std::uniform_int_distribution<std::size_t> dist(0, choices - 1);
      pick = nth_permitted(*mask, dist(rng), skip_eos ? std::optional<TokenId>(eos) : std::nullopt);
    }

    auto s0 = Clock::now();
    StepOutcome outcome = machine.step(pick);
    auto s1 = Clock::now();
    r.state_tracking_ms += ms_between(s0, s1);
    if (outcome == StepOutcome::rejected) {
      throw MaskSoundnessError("machine rejected permitted token " + std::to_string(pick) + " at step " +
                               std::to_string(out.tokens.size()));
    }
    out.tokens.push_back(pick);
  }

  r.total_ms = ms_between(start, Clock::now());
  r.tokens_generated = out.tokens.size();
  r.finished = machine.is_finished();
  if (r.tokens_generated) r.tpot_overhead_ms = (r.state_tracking_ms + r.mask_creation_ms) / r.tokens_generated;
  return out;
}

std::vector<TokenId> parse_token_stream(std::string_view text, std::size_t vocab_size) {
  std::vector<TokenId> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.empty()) continue;
    std::uint64_t id = 0;
    auto [end, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
    if (ec != std::errc() || end != line.data() + line.size()) {
      throw InputError("token stream line " + std::to_string(line_no) + ": not a token id");
    }
    if (id >= vocab_size) {
      throw InputError("token stream line " + std::to_string(line_no) + ": id " + std::to_string(id) +
                       " is outside the vocabulary");
    }
    out.push_back(static_cast<TokenId>(id));
  }
  return out;
}

std::vector<TokenId> load_token_stream(const std::string& path, std::size_t vocab_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open token stream " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_token_stream(buf.str(), vocab_size);
}

ReplayResult replay_decode(const std::vector<TokenId>& stream, const TreeSource& source, const Vocabulary& vocab,
                           MaskCache& cache) {
  ReplayResult out;
  BreakdownReport& r = out.report;
  auto start = Clock::now();
  Machine machine(source(), vocab.size());
  auto compiled = Clock::now();
  r.grammar_compilation_ms = ms_between(start, compiled);

  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (machine.is_finished()) {
      out.violation = i;
      out.reason = "token after the structure finished";
      break;
    }
    auto m0 = Clock::now();
    bool hit = false;
    auto mask = cache.materialize(machine.current_mask_spec(), vocab.size(), &hit);
    auto m1 = Clock::now();
    r.mask_creation_ms += ms_between(m0, m1);
    ++(hit ? r.cache_hits : r.cache_misses);
    if (i == 0) r.ttft_overhead_ms = r.grammar_compilation_ms + ms_between(m0, m1);
    out.masks.push_back(mask->packed_bytes());

    TokenId tok = stream[i];
    if (tok >= vocab.size()) throw InputError("token id " + std::to_string(tok) + " is outside the vocabulary");
    if (!mask->test(tok)) {
      out.violation = i;
      out.reason = "token " + std::to_string(tok) + " is masked out";
      out.trace.push_back(StepOutcome::rejected);
      break;
    }
    auto s0 = Clock::now();
    StepOutcome outcome = machine.step(tok);
    r.state_tracking_ms += ms_between(s0, Clock::now());
    out.trace.push_back(outcome);
    if (outcome == StepOutcome::rejected) {
      throw MaskSoundnessError("machine rejected permitted token " + std::to_string(tok) + " at position " +
                               std::to_string(i));
    }
    ++r.tokens_generated;
  }
  if (!out.violation && !machine.is_finished()) {
    out.violation = stream.size();
    out.reason = "stream ended before the structure finished";
  }
  out.accepted = !out.violation;
  r.finished = machine.is_finished();
  r.total_ms = ms_between(start, Clock::now());
  if (r.tokens_generated) r.tpot_overhead_ms = (r.state_tracking_ms + r.mask_creation_ms) / r.tokens_generated;
  return out;
}

namespace {

StageStats summarize(std::vector<double> xs) {
  StageStats s;
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean_ms = sum / xs.size();
  std::sort(xs.begin(), xs.end());
  // Nearest-rank percentiles.
  auto rank = [&](double p) {
    std::size_t k = static_cast<std::size_t>(std::ceil(p * xs.size()));
    return xs[std::clamp<std::size_t>(k, 1, xs.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  return s;
}

nlohmann::json stats_json(const StageStats& s) {
  return {{"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}};
}

}  // namespace

std::string BenchReport::to_json() const {
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) runs_json.push_back(nlohmann::json::parse(r.to_json()));
  nlohmann::json j = {
      {"schema", kSchema},
      {"repetitions", repetitions},
      {"stages",
       {{"grammar_compilation", stats_json(grammar_compilation)},
        {"state_tracking", stats_json(state_tracking)},
        {"mask_creation", stats_json(mask_creation)}}},
      {"ttft_overhead", stats_json(ttft_overhead)},
      {"tpot_overhead", stats_json(tpot_overhead)},
      {"runs", std::move(runs_json)},
  };
  return j.dump(2);
}

std::string BenchReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %12s %12s %12s\n", "stage", "mean_ms", "p50_ms", "p95_ms");
  out += line;
  auto row = [&](const char* name, const StageStats& s) {
    std::snprintf(line, sizeof line, "%-22s %12.6f %12.6f %12.6f\n", name, s.mean_ms, s.p50_ms, s.p95_ms);
    out += line;
  };
  row("grammar_compilation", grammar_compilation);
  row("state_tracking", state_tracking);
  row("mask_creation", mask_creation);
  row("ttft_overhead", ttft_overhead);
  row("tpot_overhead", tpot_overhead);
  return out;
}

BenchReport bench(const TreeSource& source, const Vocabulary& vocab, const DecodeConfig& config,
                  std::size_t repetitions, std::size_t threads, MaskCache& cache) {
  if (repetitions < 1) throw InputError("bench needs at least one repetition");
  config.check();
  BenchReport out;
  out.repetitions = repetitions;
  out.runs.resize(repetitions);
  threads = std::clamp<std::size_t>(threads, 1, repetitions);
  if (threads == 1) {
    for (std::size_t i = 0; i < repetitions; ++i) out.runs[i] = mock_decode(source, vocab, config, cache).report;
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i; (i = next++) < repetitions;) out.runs[i] = mock_decode(source, vocab, config, cache).report;
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  auto collect = [&](double BreakdownReport::*field) {
    std::vector<double> xs;
    for (const auto& r : out.runs) xs.push_back(r.*field);
    return summarize(std::move(xs));
  };
  out.grammar_compilation = collect(&BreakdownReport::grammar_compilation_ms);
  out.state_tracking = collect(&BreakdownReport::state_tracking_ms);
  out.mask_creation = collect(&BreakdownReport::mask_creation_ms);
  out.ttft_overhead = collect(&BreakdownReport::ttft_overhead_ms);
  out.tpot_overhead = collect(&BreakdownReport::tpot_overhead_ms);
  return out;
}

}  // namespace wgram
