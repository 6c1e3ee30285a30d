#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qaa/rng.hpp"
#include "qaa/tensor.hpp"

namespace qaa {

/// Ordered collection of named parameter tensors with matching gradient
/// accumulators. Iteration order is insertion order, and initialization draws
/// from a single splitmix stream in that order, so two stores built the same
/// way from the same seed hold bit-identical values.
class ParamStore {
public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  explicit ParamStore(std::uint64_t rng_seed) : rng_seed_(rng_seed), rng_(rng_seed) {}

  // Weight tensor initialized uniformly in +-sqrt(6 / (fan_in + fan_out)),
  // where fan_out is the last dim and fan_in the product of the others.
  void add_weight(const std::string& name, std::vector<int> dims);

  // Bias tensor initialized to zero.
  void add_bias(const std::string& name, std::vector<int> dims);

  // Parameter with explicit initial values.
  void add_custom(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  int index_of(const std::string& name) const;
  std::size_t count() const { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::uint64_t rng_seed() const { return rng_seed_; }

  void zero_grads();

  // Total number of scalar parameter elements.
  long long element_count() const;

  // Overwrites every parameter (weights and biases) with uniform draws from a
  // fresh stream; used by gradient checks to probe a generic point.
  void randomize_uniform(std::uint64_t seed, double lo, double hi);

private:
  int add_entry(const std::string& name, Tensor value);

  std::uint64_t rng_seed_;
  SplitMix rng_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace qaa
