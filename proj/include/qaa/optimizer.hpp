#pragma once

#include <string>
#include <vector>

#include "qaa/params.hpp"

namespace qaa {

struct OptimConfig {
  enum class Kind { adam, sgd };
  Kind kind = Kind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimConfig::Kind optim_kind_from_string(const std::string& s);

/// First-order updates over a ParamStore. step() consumes and zeroes the
/// gradient accumulators; Adam moments are kept per parameter in store order,
/// so identical seeds and data give bit-identical trajectories.
class Optimizer {
public:
  explicit Optimizer(OptimConfig config) : config_(config) {}

  void step(ParamStore& store);

  const OptimConfig& config() const { return config_; }
  long long steps_taken() const { return t_; }

private:
  OptimConfig config_;
  long long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace qaa
