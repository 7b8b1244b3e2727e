#pragma once

// Independent oracles and fixture access shared by unit and acceptance tests.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include "wgram/operators.hpp"
#include "wgram/vocabulary.hpp"

namespace wgram::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(WGRAM_TEST_DATA) / name;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

/// Naive mask from a spec: a plain vector<bool>, no bit tricks.
inline std::vector<bool> reference_mask(const MaskSpec& spec, std::size_t vocab_size) {
  std::vector<bool> bits(vocab_size, spec.mode == SetMode::deny);
  for (TokenId id : spec.ids) bits[id] = spec.mode == SetMode::allow;
  return bits;
}

/// Full match with std::regex (ECMAScript), the reference engine.
inline bool regex_full_match(const std::string& pattern, const std::string& text) {
  return std::regex_match(text, std::regex(pattern));
}

/// Reachable state graph of a machine, explored breadth first over every
/// vocabulary token.
struct StateGraph {
  std::vector<Machine> states;
  std::vector<std::vector<std::size_t>> successors;
  bool truncated = false;
};

inline StateGraph explore(const OperatorPtr& root, std::size_t vocab_size, std::size_t limit) {
  StateGraph g;
  std::unordered_multimap<std::uint64_t, std::size_t> seen;
  auto intern = [&](const Machine& m) -> std::size_t {
    auto range = seen.equal_range(m.state_hash());
    for (auto it = range.first; it != range.second; ++it) {
      if (g.states[it->second].same_state(m)) return it->second;
    }
    g.states.push_back(m);
    g.successors.emplace_back();
    seen.emplace(m.state_hash(), g.states.size() - 1);
    return g.states.size() - 1;
  };
  intern(Machine(root, vocab_size));
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    if (g.states.size() > limit) {
      g.truncated = true;
      break;
    }
    if (g.states[i].is_finished()) continue;
    for (TokenId t = 0; t < vocab_size; ++t) {
      Machine next = g.states[i];
      if (next.step(t) == StepOutcome::rejected) continue;
      std::size_t j = intern(next);
      g.successors[i].push_back(j);
    }
  }
  return g;
}

/// States from which a finished state is reachable.
inline std::vector<bool> can_finish(const StateGraph& g) {
  std::vector<std::vector<std::size_t>> preds(g.states.size());
  for (std::size_t i = 0; i < g.successors.size(); ++i) {
    for (std::size_t j : g.successors[i]) preds[j].push_back(i);
  }
  std::vector<bool> ok(g.states.size(), false);
  std::deque<std::size_t> work;
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    if (g.states[i].is_finished()) {
      ok[i] = true;
      work.push_back(i);
    }
  }
  while (!work.empty()) {
    std::size_t j = work.front();
    work.pop_front();
    for (std::size_t i : preds[j]) {
      if (!ok[i]) {
        ok[i] = true;
        work.push_back(i);
      }
    }
  }
  return ok;
}

}  // namespace wgram::testing
