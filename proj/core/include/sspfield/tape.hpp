#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sspfield/errors.hpp"

namespace sspfield::diff {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid as long as the
/// tape lives and is not cleared.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  const std::vector<int>& shape() const;
  const std::vector<double>& value() const;
  std::size_t size() const;
  int dim(int i) const;
  int rows() const;
  int cols() const;
  double scalar() const;  // size-1 tensors only
};

/// Reverse-mode tape. Forward ops append nodes; backward() runs one sweep in
/// reverse order, accumulating gradients additively across fan-out. One sweep
/// per tape.
class Tape {
 public:
  Tensor input(std::vector<int> shape, std::vector<double> value);
  Tensor constant(std::vector<int> shape, std::vector<double> value);
  Tensor scalar_const(double v) { return constant({1}, {v}); }

  /// Allocates a node with an uninitialized value buffer of n elements.
  /// `pull` propagates this node's gradient to its parents (empty for leaves).
  int emit(std::vector<int> shape, std::size_t n, bool needs_grad,
           std::function<void(Tape&)> pull);

  std::vector<double>& value(int id) { return nodes_[static_cast<std::size_t>(id)].value; }
  const std::vector<double>& value(int id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
  }
  std::vector<double>& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const std::vector<int>& shape(int id) const {
    return nodes_[static_cast<std::size_t>(id)].shape;
  }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  /// Single reverse sweep from a scalar root. A second sweep on the same tape
  /// or a non-scalar root throws ContractError.
  void backward(const Tensor& root);
  bool swept() const { return swept_; }

  const std::vector<double>& grad_of(const Tensor& t) const;

  std::size_t node_count() const { return nodes_.size(); }
  void clear();

  // Dropout mask keying (see rng.hpp). `train_mode` gates mask application;
  // each dropout call takes the next site index in builder order.
  std::uint64_t dropout_seed = 0;
  std::uint64_t dropout_step = 0;
  bool train_mode = false;
  std::uint64_t next_dropout_site() { return dropout_site_++; }

 private:
  struct Node {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void(Tape&)> pull;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  std::uint64_t dropout_site_ = 0;
  bool swept_ = false;
};

inline const std::vector<int>& Tensor::shape() const { return tape->shape(id); }
inline const std::vector<double>& Tensor::value() const { return tape->value(id); }
inline std::size_t Tensor::size() const { return tape->value(id).size(); }
inline int Tensor::dim(int i) const { return tape->shape(id)[static_cast<std::size_t>(i)]; }
inline int Tensor::rows() const { return tape->shape(id)[0]; }
inline int Tensor::cols() const {
  const auto& s = tape->shape(id);
  return s.size() > 1 ? s[1] : 1;
}
inline double Tensor::scalar() const {
  if (size() != 1) throw ContractError("scalar() on tensor of size != 1");
  return tape->value(id)[0];
}

}  // namespace sspfield::diff
