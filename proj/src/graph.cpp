#include "qaa/graph.hpp"

#include <algorithm>
#include <cmath>

#include "qaa/errors.hpp"

namespace qaa {

const Tensor& Var::value() const { return graph->value_of(id); }
const std::vector<int>& Var::dims() const { return graph->value_of(id).dims(); }

Var Graph::make(Tensor value, bool requires_grad, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::input(Tensor value) { return make(std::move(value), false, nullptr); }

Var Graph::param(ParamStore& store, const std::string& name) {
  if (store_ == nullptr) store_ = &store;
  if (store_ != &store) throw ConfigError("graph already bound to a different ParamStore");
  int pidx = store.index_of(name);
  auto it = param_nodes_.find(pidx);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Var v = make(store.value(name), true, nullptr);
  nodes_[static_cast<std::size_t>(v.id)].param = pidx;
  param_nodes_[pidx] = v.id;
  return v;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw DomainError("loss node belongs to another graph");
  auto& ln = nodes_[static_cast<std::size_t>(loss.id)];
  if (ln.value.size() != 1) {
    throw DomainError("backward requires a scalar loss, got dims " +
                      dims_to_string(ln.value.dims()));
  }
  for (auto& n : nodes_) n.grad = Tensor(n.value.dims());
  ln.grad[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.requires_grad && n.backprop) n.backprop(*this, id);
  }
  if (store_ != nullptr) {
    for (auto& [pidx, nid] : param_nodes_) {
      auto& acc = store_->entry(static_cast<std::size_t>(pidx)).grad;
      const Tensor& g = nodes_[static_cast<std::size_t>(nid)].grad;
      for (int i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
  }
}

namespace {

Graph& common_graph(Var a, Var b) {
  if (a.graph != b.graph) throw DomainError("operands live on different graphs");
  return *a.graph;
}

bool wants_grad(Var v) { return v.graph->requires_grad(v.id); }

// Broadcast layout for binary elementwise ops: `blocks` repetitions of the
// smaller operand tile the larger one.
struct Broadcast {
  bool a_is_small = false;
  bool b_is_small = false;
  int blocks = 1;
  int small_size = 0;
};

bool is_suffix(const std::vector<int>& small, const std::vector<int>& large) {
  if (small.size() > large.size()) return false;
  return std::equal(small.rbegin(), small.rend(), large.rbegin());
}

Broadcast plan_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  Broadcast p;
  if (a.dims() == b.dims()) {
    p.small_size = a.size();
    return p;
  }
  if (is_suffix(b.dims(), a.dims())) {
    p.b_is_small = true;
    p.small_size = b.size();
    p.blocks = a.size() / b.size();
    return p;
  }
  if (is_suffix(a.dims(), b.dims())) {
    p.a_is_small = true;
    p.small_size = a.size();
    p.blocks = b.size() / a.size();
    return p;
  }
  throw ShapeError(std::string(op) + ": dims not broadcastable, " + dims_to_string(a.dims()) +
                   " vs " + dims_to_string(b.dims()));
}

// fwd(x, y) -> out; dx(x, y, g) and dy(x, y, g) give the two partials.
template <typename Fwd, typename DxFn, typename DyFn>
Var binary_op(Var a, Var b, const char* name, Fwd fwd, DxFn dx_fn, DyFn dy_fn) {
  Graph& g = common_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast p = plan_broadcast(av, bv, name);
  const Tensor& large = p.a_is_small ? bv : av;
  Tensor out(large.dims());
  for (int blk = 0; blk < p.blocks; ++blk) {
    for (int i = 0; i < p.small_size; ++i) {
      int f = blk * p.small_size + i;
      out[f] = fwd(p.a_is_small ? av[i] : av[f], p.b_is_small ? bv[i] : bv[f]);
    }
  }
  bool rg = wants_grad(a) || wants_grad(b);
  Graph::Backprop bp;
  if (rg) {
    int aid = a.id, bid = b.id;
    bp = [aid, bid, p, dx_fn, dy_fn](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      const Tensor& av2 = g2.value_of(aid);
      const Tensor& bv2 = g2.value_of(bid);
      Tensor& ga = g2.grad_ref(aid);
      Tensor& gb = g2.grad_ref(bid);
      for (int blk = 0; blk < p.blocks; ++blk) {
        for (int i = 0; i < p.small_size; ++i) {
          int f = blk * p.small_size + i;
          double x = p.a_is_small ? av2[i] : av2[f];
          double y = p.b_is_small ? bv2[i] : bv2[f];
          double gout = go[f];
          ga[p.a_is_small ? i : f] += dx_fn(x, y, gout);
          gb[p.b_is_small ? i : f] += dy_fn(x, y, gout);
        }
      }
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

template <typename Fwd, typename Bwd>
Var unary_op(Var x, Fwd fwd, Bwd bwd) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  Tensor out(xv.dims());
  for (int i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  bool rg = wants_grad(x);
  Graph::Backprop bp;
  if (rg) {
    int xid = x.id;
    bp = [xid, bwd](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      const Tensor& xv2 = g2.value_of(xid);
      const Tensor& yv = g2.value_of(self);
      Tensor& gx = g2.grad_ref(xid);
      for (int i = 0; i < xv2.size(); ++i) gx[i] += bwd(xv2[i], yv[i], go[i]);
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul: incompatible dims " + dims_to_string(av.dims()) + " x " +
                     dims_to_string(bv.dims()));
  }
  int m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      double aik = av.at(i, kk);
      if (aik == 0.0) continue;
      const double* brow = bv.data() + static_cast<std::size_t>(kk) * n;
      double* orow = out.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  bool rg = wants_grad(a) || wants_grad(b);
  Graph::Backprop bp;
  if (rg) {
    int aid = a.id, bid = b.id;
    bp = [aid, bid, m, k, n](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      const Tensor& av2 = g2.value_of(aid);
      const Tensor& bv2 = g2.value_of(bid);
      Tensor& ga = g2.grad_ref(aid);
      Tensor& gb = g2.grad_ref(bid);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          double gij = go.at(i, j);
          if (gij == 0.0) continue;
          for (int kk = 0; kk < k; ++kk) {
            ga.at(i, kk) += gij * bv2.at(kk, j);
            gb.at(kk, j) += av2.at(i, kk) * gij;
          }
        }
      }
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var add(Var a, Var b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double gout) { return gout; },
      [](double, double, double gout) { return gout; });
}

Var sub(Var a, Var b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double gout) { return gout; },
      [](double, double, double gout) { return -gout; });
}

Var mul(Var a, Var b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double gout) { return y * gout; },
      [](double x, double, double gout) { return x * gout; });
}

Var tanh(Var x) {
  return unary_op(
      x, [](double v) { return std::tanh(v); },
      [](double, double y, double gout) { return (1.0 - y * y) * gout; });
}

Var relu(Var x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double, double gout) { return v > 0.0 ? gout : 0.0; });
}

Var sigmoid(Var x) {
  return unary_op(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y, double gout) { return y * (1.0 - y) * gout; });
}

Var scale(Var x, double c) {
  return unary_op(
      x, [c](double v) { return c * v; },
      [c](double, double, double gout) { return c * gout; });
}

Var softmax(Var logits) {
  Graph& g = *logits.graph;
  const Tensor& xv = logits.value();
  if (xv.ndim() != 1 || xv.size() < 1) {
    throw DomainError("softmax requires a non-empty 1-D tensor, got dims " +
                      dims_to_string(xv.dims()));
  }
  int n = xv.size();
  double mx = xv[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
  Tensor out({n});
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(xv[i] - mx);
    z += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= z;
  bool rg = wants_grad(logits);
  Graph::Backprop bp;
  if (rg) {
    int xid = logits.id;
    bp = [xid, n](Graph& g2, int self) {
      const Tensor& y = g2.value_of(self);
      const Tensor& go = g2.grad_of(self);
      Tensor& gx = g2.grad_ref(xid);
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += y[i] * go[i];
      for (int i = 0; i < n; ++i) gx[i] += y[i] * (go[i] - dot);
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var cross_entropy(Var scores, int target) {
  Graph& g = *scores.graph;
  const Tensor& xv = scores.value();
  if (xv.ndim() != 1 || xv.size() < 1) {
    throw DomainError("cross_entropy requires a non-empty 1-D score vector");
  }
  int n = xv.size();
  if (target < 0 || target >= n) {
    throw DomainError("cross_entropy target " + std::to_string(target) + " out of range [0, " +
                      std::to_string(n) + ")");
  }
  double mx = xv[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(xv[i] - mx);
  double loss = std::log(z) - (xv[target] - mx);
  bool rg = wants_grad(scores);
  Graph::Backprop bp;
  if (rg) {
    int xid = scores.id;
    bp = [xid, target, n](Graph& g2, int self) {
      const Tensor& xv2 = g2.value_of(xid);
      const Tensor& go = g2.grad_of(self);
      Tensor& gx = g2.grad_ref(xid);
      double mx2 = xv2[0];
      for (int i = 1; i < n; ++i) mx2 = std::max(mx2, xv2[i]);
      double z2 = 0.0;
      for (int i = 0; i < n; ++i) z2 += std::exp(xv2[i] - mx2);
      for (int i = 0; i < n; ++i) {
        double p = std::exp(xv2[i] - mx2) / z2;
        gx[i] += (p - (i == target ? 1.0 : 0.0)) * go[0];
      }
    };
  }
  return g.make(Tensor({1}, {loss}), rg, std::move(bp));
}

Var sum(Var x) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  double total = 0.0;
  for (int i = 0; i < xv.size(); ++i) total += xv[i];
  bool rg = wants_grad(x);
  Graph::Backprop bp;
  if (rg) {
    int xid = x.id;
    bp = [xid](Graph& g2, int self) {
      double gout = g2.grad_of(self)[0];
      Tensor& gx = g2.grad_ref(xid);
      for (int i = 0; i < gx.size(); ++i) gx[i] += gout;
    };
  }
  return g.make(Tensor({1}, {total}), rg, std::move(bp));
}

Var mean_rows(Var x) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  if (xv.ndim() != 2) throw ShapeError("mean_rows requires a 2-D tensor");
  int r = xv.rows(), c = xv.cols();
  Tensor out({c});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) out[j] += xv.at(i, j);
  }
  for (int j = 0; j < c; ++j) out[j] /= r;
  bool rg = wants_grad(x);
  Graph::Backprop bp;
  if (rg) {
    int xid = x.id;
    bp = [xid, r, c](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      Tensor& gx = g2.grad_ref(xid);
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) gx.at(i, j) += go[j] / r;
      }
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var reshape(Var x, std::vector<int> dims) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  Tensor out(dims, xv.vec());
  bool rg = wants_grad(x);
  Graph::Backprop bp;
  if (rg) {
    int xid = x.id;
    bp = [xid](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      Tensor& gx = g2.grad_ref(xid);
      for (int i = 0; i < gx.size(); ++i) gx[i] += go[i];
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw DomainError("concat of zero tensors");
  Graph& g = *parts[0].graph;
  int total = 0;
  bool rg = false;
  for (const Var& p : parts) {
    if (p.graph != &g) throw DomainError("operands live on different graphs");
    if (p.value().ndim() != 1) throw ShapeError("concat requires 1-D tensors");
    total += p.value().size();
    rg = rg || wants_grad(p);
  }
  Tensor out({total});
  int off = 0;
  std::vector<int> ids;
  std::vector<int> sizes;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (int i = 0; i < pv.size(); ++i) out[off + i] = pv[i];
    ids.push_back(p.id);
    sizes.push_back(pv.size());
    off += pv.size();
  }
  Graph::Backprop bp;
  if (rg) {
    bp = [ids, sizes](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      int off2 = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        Tensor& gx = g2.grad_ref(ids[k]);
        for (int i = 0; i < sizes[k]; ++i) gx[i] += go[off2 + i];
        off2 += sizes[k];
      }
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var slice(Var x, int offset, int length) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  if (xv.ndim() != 1) throw ShapeError("slice requires a 1-D tensor");
  if (offset < 0 || length <= 0 || offset + length > xv.size()) {
    throw DomainError("slice [" + std::to_string(offset) + ", " +
                      std::to_string(offset + length) + ") out of range for size " +
                      std::to_string(xv.size()));
  }
  Tensor out({length});
  for (int i = 0; i < length; ++i) out[i] = xv[offset + i];
  bool rg = wants_grad(x);
  Graph::Backprop bp;
  if (rg) {
    int xid = x.id;
    bp = [xid, offset, length](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      Tensor& gx = g2.grad_ref(xid);
      for (int i = 0; i < length; ++i) gx[offset + i] += go[i];
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var select_row(Var matrix, int row) {
  Graph& g = *matrix.graph;
  const Tensor& mv = matrix.value();
  if (mv.ndim() != 2) throw ShapeError("select_row requires a 2-D tensor");
  if (row < 0 || row >= mv.rows()) {
    throw DomainError("row " + std::to_string(row) + " out of range for " +
                      dims_to_string(mv.dims()));
  }
  int c = mv.cols();
  Tensor out({c});
  for (int j = 0; j < c; ++j) out[j] = mv.at(row, j);
  bool rg = wants_grad(matrix);
  Graph::Backprop bp;
  if (rg) {
    int mid = matrix.id;
    bp = [mid, row, c](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      Tensor& gm = g2.grad_ref(mid);
      for (int j = 0; j < c; ++j) gm.at(row, j) += go[j];
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var bilinear(Var core, Var a, Var b) {
  Graph& g = common_graph(core, a);
  common_graph(a, b);
  const Tensor& cv = core.value();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (cv.ndim() != 3 || av.ndim() != 1 || bv.ndim() != 1 || cv.dims()[0] != av.size() ||
      cv.dims()[1] != bv.size()) {
    throw ShapeError("bilinear: incompatible dims core " + dims_to_string(cv.dims()) + ", a " +
                     dims_to_string(av.dims()) + ", b " + dims_to_string(bv.dims()));
  }
  int ni = cv.dims()[0], nj = cv.dims()[1], nk = cv.dims()[2];
  Tensor out({nk});
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      double ab = av[i] * bv[j];
      const double* slab = cv.data() + (static_cast<std::size_t>(i) * nj + j) * nk;
      for (int k = 0; k < nk; ++k) out[k] += slab[k] * ab;
    }
  }
  bool rg = wants_grad(core) || wants_grad(a) || wants_grad(b);
  Graph::Backprop bp;
  if (rg) {
    int cid = core.id, aid = a.id, bid = b.id;
    bp = [cid, aid, bid, ni, nj, nk](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      const Tensor& cv2 = g2.value_of(cid);
      const Tensor& av2 = g2.value_of(aid);
      const Tensor& bv2 = g2.value_of(bid);
      Tensor& gc = g2.grad_ref(cid);
      Tensor& ga = g2.grad_ref(aid);
      Tensor& gb = g2.grad_ref(bid);
      for (int i = 0; i < ni; ++i) {
        for (int j = 0; j < nj; ++j) {
          std::size_t base = (static_cast<std::size_t>(i) * nj + j) * nk;
          double ab = av2[i] * bv2[j];
          double acc_a = 0.0;
          for (int k = 0; k < nk; ++k) {
            double gk = go[k];
            gc[static_cast<int>(base) + k] += ab * gk;
            acc_a += cv2[static_cast<int>(base) + k] * gk;
          }
          ga[i] += acc_a * bv2[j];
          gb[j] += acc_a * av2[i];
        }
      }
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

Var dropout(Var x, double rate, SplitMix& rng, bool training) {
  if (!training || rate == 0.0) return x;
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout rate must be in [0, 1)");
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  double keep = 1.0 - rate;
  std::vector<double> mask(static_cast<std::size_t>(xv.size()));
  Tensor out(xv.dims());
  for (int i = 0; i < xv.size(); ++i) {
    mask[static_cast<std::size_t>(i)] = rng.next_double() < rate ? 0.0 : 1.0 / keep;
    out[i] = xv[i] * mask[static_cast<std::size_t>(i)];
  }
  bool rg = wants_grad(x);
  Graph::Backprop bp;
  if (rg) {
    int xid = x.id;
    bp = [xid, mask](Graph& g2, int self) {
      const Tensor& go = g2.grad_of(self);
      Tensor& gx = g2.grad_ref(xid);
      for (int i = 0; i < gx.size(); ++i) gx[i] += go[i] * mask[static_cast<std::size_t>(i)];
    };
  }
  return g.make(std::move(out), rg, std::move(bp));
}

}  // namespace qaa
