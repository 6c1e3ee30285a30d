#include "qaa/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "qaa/errors.hpp"

namespace qaa {

namespace {

double evaluate(const std::function<Var(Graph&)>& build_loss) {
  Graph g;
  Var loss = build_loss(g);
  const Tensor& v = loss.value();
  if (v.size() != 1) throw DomainError("gradient check requires a scalar loss");
  return v[0];
}

}  // namespace

FdReport finite_difference_check(const std::function<Var(Graph&)>& build_loss, ParamStore& store,
                                 double tolerance, double step) {
  double l0 = evaluate(build_loss);
  double l1 = evaluate(build_loss);
  if (l0 != l1) {
    throw NumericError("loss function is not deterministic: " + std::to_string(l0) + " vs " +
                       std::to_string(l1));
  }

  store.zero_grads();
  {
    Graph g;
    Var loss = build_loss(g);
    g.backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(store.count());
  for (const auto& e : store.entries()) analytic.push_back(e.grad);
  store.zero_grads();

  FdReport report;
  report.tolerance = tolerance;
  for (std::size_t p = 0; p < store.count(); ++p) {
    auto& entry = store.entry(p);
    FdReport::Row row;
    row.param = entry.name;
    for (int i = 0; i < entry.value.size(); ++i) {
      double saved = entry.value[i];
      entry.value[i] = saved + step;
      double plus = evaluate(build_loss);
      entry.value[i] = saved - step;
      double minus = evaluate(build_loss);
      entry.value[i] = saved;
      double fd = (plus - minus) / (2.0 * step);
      double an = analytic[p][i];
      double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      row.max_rel_err = std::max(row.max_rel_err, std::abs(fd - an) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, row.max_rel_err);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace qaa
