#pragma once

#include "greet/util.hpp"

#include <functional>
#include <string>
#include <vector>

namespace greet {

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode tape over dense row-major matrices. Every operation records a
// closure that accumulates exact gradients into its parents; backward() from
// a scalar replays them in reverse creation order. Each forward result is
// checked for NaN/Inf and the offending op is named in the error.
class Tape {
 public:
  Var input(Matrix value, bool requires_grad);
  Var constant(Matrix value) { return input(std::move(value), false); }

  const Matrix& value(const Var& v) const { return nodes_[check(v)].value; }
  bool needs_grad(const Var& v) const { return nodes_[check(v)].needs_grad; }

  // Accumulated gradient; zeros of the value's shape when the node was never
  // reached by backward().
  Matrix grad(const Var& v) const;

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node and propagates. May be called
  // once per tape.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }

  // --- used by the op implementations ---
  int emplace(Matrix value, bool needs_grad, std::function<void(Tape&)> backward,
              const char* op_name);
  Matrix& grad_buffer(int id);
  bool grad_live(int id) const { return nodes_[static_cast<std::size_t>(id)].grad_live; }
  const Matrix& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool grad_live = false;
    bool needs_grad = false;
    std::function<void(Tape&)> backward;
    const char* op = "";
  };

  std::size_t check(const Var& v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace greet
