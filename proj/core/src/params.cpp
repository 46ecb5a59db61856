#include "sspfield/params.hpp"

#include <cmath>

#include "sspfield/errors.hpp"

namespace sspfield {

ParamEntry& ParameterStore::add(const std::string& name, std::vector<int> shape,
                                std::vector<double> init, bool trainable) {
  if (index_.count(name)) throw ContractError("duplicate parameter name " + name);
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension for parameter " + name);
    n *= static_cast<std::size_t>(d);
  }
  if (n != init.size())
    throw ShapeError("initial values do not match shape for parameter " + name);
  ParamEntry entry;
  entry.name = name;
  entry.shape = std::move(shape);
  entry.value = std::move(init);
  entry.grad.assign(n, 0.0);
  entry.m.assign(n, 0.0);
  entry.v.assign(n, 0.0);
  entry.trainable = trainable;
  entries_.push_back(std::move(entry));
  index_.emplace(name, entries_.size() - 1);
  return entries_.back();
}

ParamEntry& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return entries_[it->second];
}

const ParamEntry& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return entries_[it->second];
}

std::size_t ParameterStore::value_count(const std::string& prefix,
                                        bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (trainable_only && !e.trainable) continue;
    if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
    n += e.value.size();
  }
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& e : entries_)
    std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

TapeBinding::TapeBinding(diff::Tape& tape, ParameterStore& store,
                         std::vector<std::string> frozen_prefixes)
    : tape_(tape), store_(store), frozen_prefixes_(std::move(frozen_prefixes)) {}

bool TapeBinding::frozen(const std::string& name) const {
  for (const auto& p : frozen_prefixes_)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

diff::Tensor TapeBinding::get(const std::string& name) {
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  ParamEntry& e = store_.at(name);
  diff::Tensor t;
  if (e.trainable && !frozen(name)) {
    t = tape_.input(e.shape, e.value);
    watched_.emplace_back(&e, t);
  } else {
    t = tape_.constant(e.shape, e.value);
  }
  cache_.emplace(name, t);
  return t;
}

void TapeBinding::harvest_grads(double scale) {
  for (auto& [entry, tensor] : watched_) {
    const auto& g = tape_.grad_of(tensor);
    for (std::size_t i = 0; i < g.size(); ++i) entry->grad[i] += scale * g[i];
  }
}

}  // namespace sspfield
