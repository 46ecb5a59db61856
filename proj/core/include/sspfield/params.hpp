#pragma once

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "sspfield/tape.hpp"

namespace sspfield {

struct ParamEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // same length as value
  std::vector<double> m, v;  // optimizer moments
  bool trainable = true;
};

/// Insertion-ordered named parameter collection. Iteration order is the
/// registration order, which fixes checkpoint layout and update order.
class ParameterStore {
 public:
  ParamEntry& add(const std::string& name, std::vector<int> shape,
                  std::vector<double> init, bool trainable = true);
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::deque<ParamEntry>& entries() { return entries_; }
  const std::deque<ParamEntry>& entries() const { return entries_; }
  std::size_t count() const { return entries_.size(); }

  /// Total number of scalar values, optionally restricted to trainable
  /// entries whose name starts with `prefix`.
  std::size_t value_count(const std::string& prefix = "",
                          bool trainable_only = false) const;

  void zero_grads();

 private:
  std::deque<ParamEntry> entries_;  // deque: references stay valid across add
  std::unordered_map<std::string, std::size_t> index_;
};

/// Lazily watches store entries on a tape. Trainable entries become
/// differentiable inputs unless their name matches a frozen prefix (then they
/// are constants, like non-trainable entries). harvest_grads() adds each
/// watched input's tape gradient into the store's grad buffer, scaled.
class TapeBinding {
 public:
  TapeBinding(diff::Tape& tape, ParameterStore& store,
              std::vector<std::string> frozen_prefixes = {});

  diff::Tensor get(const std::string& name);
  void harvest_grads(double scale = 1.0);

 private:
  bool frozen(const std::string& name) const;
  diff::Tape& tape_;
  ParameterStore& store_;
  std::vector<std::string> frozen_prefixes_;
  std::vector<std::pair<ParamEntry*, diff::Tensor>> watched_;
  std::unordered_map<std::string, diff::Tensor> cache_;
};

}  // namespace sspfield
