#include "sspfield/tape.hpp"

#include <cmath>
#include <numeric>

namespace sspfield::diff {
namespace {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in tensor shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor Tape::input(std::vector<int> shape, std::vector<double> value) {
  if (shape_product(shape) != value.size())
    throw ShapeError("input value count does not match shape");
  int id = emit(std::move(shape), value.size(), true, nullptr);
  nodes_[static_cast<std::size_t>(id)].value = std::move(value);
  return Tensor{this, id};
}

Tensor Tape::constant(std::vector<int> shape, std::vector<double> value) {
  if (shape_product(shape) != value.size())
    throw ShapeError("constant value count does not match shape");
  int id = emit(std::move(shape), value.size(), false, nullptr);
  nodes_[static_cast<std::size_t>(id)].value = std::move(value);
  return Tensor{this, id};
}

int Tape::emit(std::vector<int> shape, std::size_t n, bool needs_grad,
               std::function<void(Tape&)> pull) {
  if (shape_product(shape) != n)
    throw ShapeError("node element count does not match shape");
  Node node;
  node.shape = std::move(shape);
  node.value.resize(n);
  if (needs_grad) node.grad.assign(n, 0.0);
  node.needs_grad = needs_grad;
  node.pull = std::move(pull);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

void Tape::backward(const Tensor& root) {
  if (root.tape != this) throw ContractError("backward root from another tape");
  if (swept_) throw ContractError("tape already swept; one backward per tape");
  Node& r = nodes_[static_cast<std::size_t>(root.id)];
  if (r.value.size() != 1) throw ContractError("backward root must be scalar");
  if (!r.needs_grad) {
    swept_ = true;  // nothing depends on any input; all gradients stay zero
    return;
  }
  r.grad[0] = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad && n.pull) n.pull(*this);
  }
  swept_ = true;
}

const std::vector<double>& Tape::grad_of(const Tensor& t) const {
  if (t.tape != this) throw ContractError("gradient queried on another tape");
  const Node& n = nodes_[static_cast<std::size_t>(t.id)];
  if (!n.needs_grad) throw ContractError("gradient of a constant node");
  if (!swept_) throw ContractError("gradient queried before backward");
  return n.grad;
}

void Tape::clear() {
  nodes_.clear();
  dropout_site_ = 0;
  swept_ = false;
}

}  // namespace sspfield::diff
