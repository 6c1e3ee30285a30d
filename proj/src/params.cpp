#include "qaa/params.hpp"

#include <cmath>

#include "qaa/errors.hpp"

namespace qaa {

int ParamStore::add_entry(const std::string& name, Tensor value) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  Tensor grad(value.dims());
  entries_.push_back(Entry{name, std::move(value), std::move(grad)});
  int id = static_cast<int>(entries_.size()) - 1;
  index_[name] = id;
  return id;
}

void ParamStore::add_weight(const std::string& name, std::vector<int> dims) {
  Tensor t(dims);
  long long fan_out = dims.back();
  long long fan_in = 1;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) fan_in *= dims[i];
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (int i = 0; i < t.size(); ++i) t[i] = rng_.next_uniform(-bound, bound);
  add_entry(name, std::move(t));
}

void ParamStore::add_bias(const std::string& name, std::vector<int> dims) {
  add_entry(name, Tensor(std::move(dims)));
}

void ParamStore::add_custom(const std::string& name, Tensor value) {
  add_entry(name, std::move(value));
}

Tensor& ParamStore::value(const std::string& name) {
  return entries_[static_cast<std::size_t>(index_of(name))].value;
}

const Tensor& ParamStore::value(const std::string& name) const {
  return entries_[static_cast<std::size_t>(index_of(name))].value;
}

Tensor& ParamStore::grad(const std::string& name) {
  return entries_[static_cast<std::size_t>(index_of(name))].grad;
}

const Tensor& ParamStore::grad(const std::string& name) const {
  return entries_[static_cast<std::size_t>(index_of(name))].grad;
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

long long ParamStore::element_count() const {
  long long n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::randomize_uniform(std::uint64_t seed, double lo, double hi) {
  SplitMix rng(seed);
  for (auto& e : entries_) {
    for (int i = 0; i < e.value.size(); ++i) e.value[i] = rng.next_uniform(lo, hi);
  }
}

}  // namespace qaa
