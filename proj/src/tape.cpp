#include "greet/tape.hpp"

namespace greet {

std::size_t Tape::check(const Var& v) const {
  if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::logic_error("Var does not belong to this tape");
  }
  return static_cast<std::size_t>(v.id);
}

Var Tape::input(Matrix value, bool requires_grad) {
  int id = emplace(std::move(value), requires_grad, nullptr, "input");
  return Var{this, id};
}

int Tape::emplace(Matrix value, bool needs_grad, std::function<void(Tape&)> backward,
                  const char* op_name) {
  if (!value.allFinite()) {
    throw NumericalError(std::string("non-finite value produced by op '") + op_name + "'");
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.backward = std::move(backward);
  node.op = op_name;
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Matrix& Tape::grad_buffer(int id) {
  Node& node = nodes_[static_cast<std::size_t>(id)];
  if (!node.grad_live) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.grad_live = true;
  }
  return node.grad;
}

Matrix Tape::grad(const Var& v) const {
  const Node& node = nodes_[check(v)];
  if (node.grad_live) return node.grad;
  return Matrix::Zero(node.value.rows(), node.value.cols());
}

void Tape::backward(const Var& loss) {
  std::size_t idx = check(loss);
  if (backward_done_) throw std::logic_error("backward() may run once per tape");
  const Node& top = nodes_[idx];
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw std::logic_error("backward() requires a scalar (1x1) loss");
  }
  backward_done_ = true;
  if (!top.needs_grad) return;
  grad_buffer(static_cast<int>(idx))(0, 0) = 1.0;
  for (std::size_t i = idx + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.backward && node.needs_grad && node.grad_live) {
      // All consumers of node i come later on the tape, so its own gradient
      // is complete here.
      if (!node.grad.allFinite()) {
        throw NumericalError(std::string("non-finite gradient at op '") + node.op + "'");
      }
      node.backward(*this);
    }
  }
}

}  // namespace greet
