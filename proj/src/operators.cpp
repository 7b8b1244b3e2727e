#include "wgram/operators.hpp"

#include <algorithm>

#include "wgram/error.hpp"

namespace wgram {

namespace {

std::uint64_t hash_spec(SetMode mode, const TokenSet& ids) {
  std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(mode);
  h *= 1099511628211ull;
  for (TokenId id : ids) {
    h ^= id;
    h *= 1099511628211ull;
    h ^= h >> 29;
  }
  return h ^ ids.size();
}

enum class Hit { reject, absorb, trigger, yes, no };

Hit classify_token(const WaitOp& w, TokenId t, std::size_t vocab_size) {
  if (t >= vocab_size) return Hit::reject;
  if (w.is_boolean()) {
    if (w.true_waits.contains(t)) return Hit::yes;
    if (w.false_waits.contains(t)) return Hit::no;
  } else if (w.waits.contains(t)) {
    return Hit::trigger;
  }
  bool listed = w.ids.contains(t);
  if (w.mode == SetMode::allow) return listed ? Hit::absorb : Hit::reject;
  return listed ? Hit::reject : Hit::absorb;
}

MaskSpec wait_spec(const WaitOp& w) {
  if (w.mode == SetMode::deny) return MaskSpec::deny(w.ids);
  return MaskSpec::allow(w.ids.unite(w.waits).unite(w.true_waits).unite(w.false_waits));
}

std::size_t depth_of(const OperatorPtr& op) { return op ? op->depth() : 0; }

}  // namespace

MaskSpec MaskSpec::allow(TokenSet ids) {
  MaskSpec s{SetMode::allow, std::move(ids), 0};
  s.hash = hash_spec(s.mode, s.ids);
  return s;
}

MaskSpec MaskSpec::deny(TokenSet ids) {
  MaskSpec s{SetMode::deny, std::move(ids), 0};
  s.hash = hash_spec(s.mode, s.ids);
  return s;
}

Operator::Operator(Node node) : node_(std::move(node)) {
  std::visit(
      [this](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, WaitOp>) {
          masks_.push_back(wait_spec(n));
          depth_ = 1 + depth_of(n.body);
        } else if constexpr (std::is_same_v<T, WriteOp>) {
          for (TokenId id : n.sequence) masks_.push_back(MaskSpec::allow({id}));
        } else if constexpr (std::is_same_v<T, SequenceOp>) {
          std::size_t d = 0;
          for (const auto& c : n.children) d = std::max(d, depth_of(c));
          depth_ = 1 + d;
        } else if constexpr (std::is_same_v<T, IfElseOp>) {
          masks_.push_back(wait_spec(n.condition));
          depth_ = 1 + std::max(depth_of(n.if_body), depth_of(n.else_body));
        } else {
          masks_.push_back(wait_spec(n.condition));
          depth_ = 1 + depth_of(n.body);
        }
      },
      node_);
}

const WaitOp* Operator::waiting_on() const {
  switch (kind()) {
    case OperatorKind::wait: return &as_wait();
    case OperatorKind::if_else: return &as_if_else().condition;
    case OperatorKind::do_while: return &as_do_while().condition;
    default: return nullptr;
  }
}

OperatorPtr make_wait(WaitOp wait) { return std::make_shared<const Operator>(std::move(wait)); }

OperatorPtr make_write(std::vector<TokenId> sequence) {
  return std::make_shared<const Operator>(WriteOp{std::move(sequence)});
}

OperatorPtr make_sequence(std::vector<OperatorPtr> children) {
  return std::make_shared<const Operator>(SequenceOp{std::move(children)});
}

OperatorPtr make_if_else(WaitOp condition, OperatorPtr if_body, OperatorPtr else_body) {
  return std::make_shared<const Operator>(
      IfElseOp{std::move(condition), std::move(if_body), std::move(else_body)});
}

OperatorPtr make_do_while(OperatorPtr body, WaitOp condition) {
  return std::make_shared<const Operator>(DoWhileOp{std::move(body), std::move(condition)});
}

WaitOp make_condition(TokenSet allows, TokenSet true_waits, TokenSet false_waits) {
  WaitOp w;
  w.ids = std::move(allows);
  w.true_waits = std::move(true_waits);
  w.false_waits = std::move(false_waits);
  return w;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_ids(const TokenSet& s, std::size_t vocab_size, const char* what) {
  if (!s.empty() && s.back() >= vocab_size) {
    throw InvalidOperator(std::string(what) + " contains token id " + std::to_string(s.back()) +
                          " outside the vocabulary");
  }
}

void validate_node(const OperatorPtr& op, std::size_t vocab_size);

void validate_wait(const WaitOp& w, std::size_t vocab_size, bool as_condition) {
  check_ids(w.ids, vocab_size, w.mode == SetMode::allow ? "allows" : "denies");
  check_ids(w.waits, vocab_size, "waits");
  check_ids(w.true_waits, vocab_size, "true_waits");
  check_ids(w.false_waits, vocab_size, "false_waits");

  TokenSet triggers;
  if (as_condition) {
    if (!w.is_boolean() || w.true_waits.empty() || w.false_waits.empty()) {
      throw InvalidOperator("condition Wait needs non-empty true_waits and false_waits");
    }
    if (!w.waits.empty()) throw InvalidOperator("condition Wait cannot also carry waits");
    if (w.true_waits.intersects(w.false_waits)) {
      throw InvalidOperator("true_waits and false_waits overlap");
    }
    if (w.body) throw InvalidOperator("condition Wait cannot have a body");
    triggers = w.true_waits.unite(w.false_waits);
  } else {
    if (w.is_boolean()) throw InvalidOperator("boolean Wait outside a condition slot");
    if (w.waits.empty()) throw InvalidOperator("Wait has no trigger tokens");
    triggers = w.waits;
  }
  if (w.mode == SetMode::allow) {
    if (triggers.intersects(w.ids)) throw InvalidOperator("Wait trigger set overlaps allows");
  } else {
    if (triggers.intersects(w.ids)) throw InvalidOperator("Wait trigger set overlaps denies");
    if (w.ids.size() >= vocab_size) throw InvalidOperator("deny-mode Wait permits nothing");
  }
  if (w.body) validate_node(w.body, vocab_size);
}

void validate_node(const OperatorPtr& op, std::size_t vocab_size) {
  if (!op) throw InvalidOperator("null operator");
  switch (op->kind()) {
    case OperatorKind::wait: validate_wait(op->as_wait(), vocab_size, false); break;
    case OperatorKind::write: {
      const auto& seq = op->as_write().sequence;
      if (seq.empty()) throw InvalidOperator("empty Write");
      for (TokenId id : seq) {
        if (id >= vocab_size) {
          throw InvalidOperator("Write emits token id " + std::to_string(id) +
                                " outside the vocabulary");
        }
      }
      break;
    }
    case OperatorKind::sequence: {
      const auto& children = op->as_sequence().children;
      if (children.empty()) throw InvalidOperator("empty Sequence");
      for (const auto& c : children) validate_node(c, vocab_size);
      break;
    }
    case OperatorKind::if_else: {
      const auto& n = op->as_if_else();
      validate_wait(n.condition, vocab_size, true);
      if (n.if_body) validate_node(n.if_body, vocab_size);
      if (n.else_body) validate_node(n.else_body, vocab_size);
      break;
    }
    case OperatorKind::do_while: {
      const auto& n = op->as_do_while();
      if (!n.body) throw InvalidOperator("DoWhile without a body");
      validate_node(n.body, vocab_size);
      validate_wait(n.condition, vocab_size, true);
      break;
    }
  }
}

}  // namespace

void validate(const OperatorPtr& root, std::size_t vocab_size) { validate_node(root, vocab_size); }

// ---------------------------------------------------------------------------
// Dump

namespace {

std::string wait_line(const WaitOp& w) {
  std::string s = "Wait ";
  s += w.mode == SetMode::allow ? "allows=" : "denies=";
  s += w.ids.to_string();
  if (w.is_boolean()) {
    s += " true_waits=" + w.true_waits.to_string();
    s += " false_waits=" + w.false_waits.to_string();
  } else {
    s += " waits=" + w.waits.to_string();
  }
  return s;
}

void dump_node(const OperatorPtr& op, int indent, const std::string& label, std::string& out) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  out += pad + label;
  if (!op) {
    out += "None\n";
    return;
  }
  switch (op->kind()) {
    case OperatorKind::wait: {
      const auto& w = op->as_wait();
      out += wait_line(w) + "\n";
      if (w.body) dump_node(w.body, indent + 2, "body: ", out);
      break;
    }
    case OperatorKind::write: {
      out += "Write [";
      const auto& seq = op->as_write().sequence;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(seq[i]);
      }
      out += "]\n";
      break;
    }
    case OperatorKind::sequence:
      out += "Sequence\n";
      for (const auto& c : op->as_sequence().children) dump_node(c, indent + 2, "", out);
      break;
    case OperatorKind::if_else: {
      const auto& n = op->as_if_else();
      out += "IfElse\n";
      out += pad + "  condition: " + wait_line(n.condition) + "\n";
      dump_node(n.if_body, indent + 2, "if: ", out);
      dump_node(n.else_body, indent + 2, "else: ", out);
      break;
    }
    case OperatorKind::do_while: {
      const auto& n = op->as_do_while();
      out += "DoWhile\n";
      dump_node(n.body, indent + 2, "body: ", out);
      out += pad + "  condition: " + wait_line(n.condition) + "\n";
      break;
    }
  }
}

}  // namespace

std::string dump(const OperatorPtr& root) {
  std::string out;
  dump_node(root, 0, "", out);
  return out;
}

const char* to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::advanced: return "advanced";
    case StepOutcome::finished: return "finished";
    case StepOutcome::rejected: return "rejected";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Machine

Machine::Machine(OperatorPtr root, std::size_t vocab_size)
    : root_(std::move(root)), vocab_size_(vocab_size) {
  validate(root_, vocab_size_);
  frames_.reserve(root_->depth());
  descend(root_.get());
  last_frame_ops_ = 0;
}

void Machine::descend(const Operator* op) {
  for (;;) {
    frames_.push_back({op, 0});
    ++last_frame_ops_;
    switch (op->kind()) {
      case OperatorKind::sequence: op = op->as_sequence().children.front().get(); break;
      case OperatorKind::do_while: op = op->as_do_while().body.get(); break;
      default: return;
    }
  }
}

void Machine::complete() {
  for (;;) {
    frames_.pop_back();
    ++last_frame_ops_;
    if (frames_.empty()) {
      finished_ = true;
      return;
    }
    Frame& parent = frames_.back();
    switch (parent.op->kind()) {
      case OperatorKind::sequence: {
        const auto& children = parent.op->as_sequence().children;
        if (++parent.cursor < children.size()) {
          descend(children[parent.cursor].get());
          return;
        }
        break;
      }
      case OperatorKind::do_while:
        parent.cursor = 1;
        return;
      default:
        break;  // Wait body or IfElse branch finished: the parent completes too.
    }
  }
}

const MaskSpec& Machine::current_mask_spec() const {
  if (finished_) throw Error("current_mask_spec on a finished machine");
  const Frame& top = frames_.back();
  if (top.op->kind() == OperatorKind::write) return top.op->write_mask(top.cursor);
  return top.op->wait_mask();
}

bool Machine::permits(TokenId token) const {
  return current_mask_spec().permits(token, vocab_size_);
}

StepOutcome Machine::step(TokenId token) {
  if (finished_) throw Error("step on a finished machine");
  last_frame_ops_ = 0;
  Frame& top = frames_.back();
  const Operator* op = top.op;
  switch (op->kind()) {
    case OperatorKind::write: {
      const auto& seq = op->as_write().sequence;
      if (token != seq[top.cursor]) return StepOutcome::rejected;
      if (++top.cursor == seq.size()) complete();
      break;
    }
    case OperatorKind::wait: {
      const auto& w = op->as_wait();
      switch (classify_token(w, token, vocab_size_)) {
        case Hit::absorb: return StepOutcome::advanced;
        case Hit::trigger:
          if (w.body) {
            top.cursor = 1;
            descend(w.body.get());
          } else {
            complete();
          }
          break;
        default: return StepOutcome::rejected;
      }
      break;
    }
    case OperatorKind::if_else: {
      const auto& n = op->as_if_else();
      const Operator* branch = nullptr;
      switch (classify_token(n.condition, token, vocab_size_)) {
        case Hit::absorb: return StepOutcome::advanced;
        case Hit::yes:
          branch = n.if_body.get();
          top.cursor = 1;
          break;
        case Hit::no:
          branch = n.else_body.get();
          top.cursor = 2;
          break;
        default: return StepOutcome::rejected;
      }
      if (branch)
        descend(branch);
      else
        complete();
      break;
    }
    case OperatorKind::do_while: {
      const auto& n = op->as_do_while();
      switch (classify_token(n.condition, token, vocab_size_)) {
        case Hit::absorb: return StepOutcome::advanced;
        case Hit::yes:
          top.cursor = 0;
          descend(n.body.get());
          break;
        case Hit::no: complete(); break;
        default: return StepOutcome::rejected;
      }
      break;
    }
    case OperatorKind::sequence:
      throw Error("machine positioned on a Sequence frame");
  }
  return finished_ ? StepOutcome::finished : StepOutcome::advanced;
}

std::uint64_t Machine::state_hash() const {
  std::uint64_t h = finished_ ? 0x9e3779b97f4a7c15ull : 0;
  for (const Frame& f : frames_) {
    h ^= reinterpret_cast<std::uintptr_t>(f.op) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= f.cursor + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace wgram
