#include "qaa/optimizer.hpp"

#include <cmath>

#include "qaa/errors.hpp"

namespace qaa {

OptimConfig::Kind optim_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimConfig::Kind::adam;
  if (s == "sgd") return OptimConfig::Kind::sgd;
  throw ConfigError("unknown optimizer kind: " + s);
}

void Optimizer::step(ParamStore& store) {
  if (config_.kind == OptimConfig::Kind::adam && m_.empty()) {
    for (const auto& e : store.entries()) {
      m_.emplace_back(e.value.dims());
      v_.emplace_back(e.value.dims());
    }
  }
  for (const auto& e : store.entries()) {
    if (!e.grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + e.name + "'");
    }
  }
  ++t_;
  auto& entries = store.entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Tensor& w = entries[p].value;
    Tensor& g = entries[p].grad;
    if (config_.kind == OptimConfig::Kind::sgd) {
      for (int i = 0; i < w.size(); ++i) w[i] -= config_.lr * g[i];
    } else {
      Tensor& m = m_[p];
      Tensor& v = v_[p];
      double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
      double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
      for (int i = 0; i < w.size(); ++i) {
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
        double m_hat = m[i] / bc1;
        double v_hat = v[i] / bc2;
        w[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      }
    }
    g.fill(0.0);
  }
}

}  // namespace qaa
