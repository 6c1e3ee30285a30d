#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qaa/graph.hpp"
#include "qaa/params.hpp"

namespace qaa {

struct FdReport {
  struct Row {
    std::string param;
    double max_rel_err = 0.0;
  };
  std::vector<Row> rows;
  double max_rel_err = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_rel_err <= tolerance; }
};

/// Central finite-difference check of the analytic gradients produced by
/// backward(). `build_loss` must construct a scalar loss on the given graph
/// from the store's current values and be deterministic; two evaluations that
/// disagree are a contract violation. Relative error uses the denominator
/// max(1, |fd|, |analytic|).
FdReport finite_difference_check(const std::function<Var(Graph&)>& build_loss, ParamStore& store,
                                 double tolerance = 1e-4, double step = 1e-5);

}  // namespace qaa
