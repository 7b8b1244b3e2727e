#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wgram/token_set.hpp"

namespace wgram {

enum class SetMode : std::uint8_t { allow, deny };

/// Permitted-token description for one decoding step. In allow mode `ids` is
/// the permitted set; in deny mode everything except `ids` is permitted.
struct MaskSpec {
  SetMode mode = SetMode::allow;
  TokenSet ids;
  std::uint64_t hash = 0;

  static MaskSpec allow(TokenSet ids);
  static MaskSpec deny(TokenSet ids);

  bool permits(TokenId id, std::size_t vocab_size) const {
    if (id >= vocab_size) return false;
    return ids.contains(id) == (mode == SetMode::allow);
  }
  std::size_t permitted_count(std::size_t vocab_size) const {
    return mode == SetMode::allow ? ids.size() : vocab_size - ids.size();
  }

  friend bool operator==(const MaskSpec& a, const MaskSpec& b) {
    return a.mode == b.mode && a.ids == b.ids;
  }
};

class Operator;
using OperatorPtr = std::shared_ptr<const Operator>;

/// Checkpoint that absorbs `ids` (allow mode) or everything outside `ids`
/// (deny mode) until a trigger arrives. A plain Wait triggers on `waits` and
/// then runs `body`; the boolean form reports true/false to an enclosing
/// IfElse or DoWhile.
struct WaitOp {
  SetMode mode = SetMode::allow;
  TokenSet ids;
  TokenSet waits;
  TokenSet true_waits;
  TokenSet false_waits;
  OperatorPtr body;

  bool is_boolean() const { return !true_waits.empty() || !false_waits.empty(); }
  const TokenSet& allows() const { return ids; }
};

struct WriteOp {
  std::vector<TokenId> sequence;
};

struct SequenceOp {
  std::vector<OperatorPtr> children;
};

struct IfElseOp {
  WaitOp condition;
  OperatorPtr if_body;
  OperatorPtr else_body;
};

struct DoWhileOp {
  OperatorPtr body;
  WaitOp condition;
};

enum class OperatorKind : std::uint8_t { wait, write, sequence, if_else, do_while };

/// Immutable operator-tree node. Mask specs for every emitting position are
/// computed once at construction.
class Operator {
 public:
  using Node = std::variant<WaitOp, WriteOp, SequenceOp, IfElseOp, DoWhileOp>;

  explicit Operator(Node node);

  OperatorKind kind() const { return static_cast<OperatorKind>(node_.index()); }
  const Node& node() const { return node_; }
  const WaitOp& as_wait() const { return std::get<WaitOp>(node_); }
  const WriteOp& as_write() const { return std::get<WriteOp>(node_); }
  const SequenceOp& as_sequence() const { return std::get<SequenceOp>(node_); }
  const IfElseOp& as_if_else() const { return std::get<IfElseOp>(node_); }
  const DoWhileOp& as_do_while() const { return std::get<DoWhileOp>(node_); }

  /// The Wait (plain or condition) this node waits on, if any.
  const WaitOp* waiting_on() const;

  /// Mask while waiting (Wait, IfElse condition, DoWhile condition).
  const MaskSpec& wait_mask() const { return masks_.front(); }
  /// Mask for a Write at `position`.
  const MaskSpec& write_mask(std::size_t position) const { return masks_[position]; }

  /// Static nesting depth; a leaf has depth 1.
  std::size_t depth() const { return depth_; }

 private:
  Node node_;
  std::vector<MaskSpec> masks_;
  std::size_t depth_ = 1;
};

OperatorPtr make_wait(WaitOp wait);
OperatorPtr make_write(std::vector<TokenId> sequence);
OperatorPtr make_sequence(std::vector<OperatorPtr> children);
OperatorPtr make_if_else(WaitOp condition, OperatorPtr if_body, OperatorPtr else_body);
OperatorPtr make_do_while(OperatorPtr body, WaitOp condition);

/// Boolean-form condition with allow-mode absorption.
WaitOp make_condition(TokenSet allows, TokenSet true_waits, TokenSet false_waits);

/// Throws InvalidOperator when the tree breaks a structural invariant.
void validate(const OperatorPtr& root, std::size_t vocab_size);

/// Deterministic indentation-structured rendering of a tree.
std::string dump(const OperatorPtr& root);

enum class StepOutcome { advanced, finished, rejected };
const char* to_string(StepOutcome outcome);

struct Frame {
  const Operator* op;
  std::uint32_t cursor;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Execution state over a shared operator tree. One per request.
class Machine {
 public:
  /// Validates the tree and positions the machine at its first emitting leaf.
  Machine(OperatorPtr root, std::size_t vocab_size);

  bool is_finished() const { return finished_; }
  const MaskSpec& current_mask_spec() const;
  bool permits(TokenId token) const;
  StepOutcome step(TokenId token);

  const OperatorPtr& root() const { return root_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::span<const Frame> frames() const { return frames_; }
  /// Frame pushes plus pops performed by the most recent step.
  std::size_t last_frame_ops() const { return last_frame_ops_; }

  /// Observable-state identity (frames and finished flag).
  bool same_state(const Machine& other) const {
    return finished_ == other.finished_ && frames_ == other.frames_;
  }
  std::uint64_t state_hash() const;

 private:
  void descend(const Operator* op);
  void complete();

  OperatorPtr root_;
  std::size_t vocab_size_;
  std::vector<Frame> frames_;
  bool finished_ = false;
  std::size_t last_frame_ops_ = 0;
};

}  // namespace wgram
