#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qaa/params.hpp"
#include "qaa/rng.hpp"
#include "qaa/tensor.hpp"

namespace qaa {

class Graph;

/// Handle to a node on a Graph's tape.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const std::vector<int>& dims() const;
};

/// Define-by-run reverse-mode tape. Forward ops append nodes eagerly;
/// backward() walks the tape in exact reverse recording order and adds leaf
/// gradients into the bound ParamStore's accumulators.
class Graph {
public:
  using Backprop = std::function<void(Graph&, int self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constant leaf; never receives a gradient.
  Var input(Tensor value);

  // Leaf bound to a ParamStore entry. Repeated calls with the same name
  // return the same node. All params on one graph must share one store.
  Var param(ParamStore& store, const std::string& name);

  // Backpropagates from a scalar loss node, accumulating into the store.
  void backward(Var loss);

  Var make(Tensor value, bool requires_grad, Backprop backprop);

  const Tensor& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  Tensor& grad_ref(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t node_count() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    int param = -1;  // index into the bound ParamStore, or -1
    Backprop backprop;
  };

  std::vector<Node> nodes_;
  ParamStore* store_ = nullptr;
  std::unordered_map<int, int> param_nodes_;
};

// --- primitive operations ---------------------------------------------------

// Matrix product of two 2-D tensors [m x k] . [k x n] -> [m x n].
Var matmul(Var a, Var b);

// Elementwise binary ops. Dims must match exactly, or the smaller operand's
// dims must be a suffix of the larger's, in which case it is broadcast over
// the leading axes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

// Pointwise unaries.
Var tanh(Var x);
Var relu(Var x);  // gradient at exactly 0 is 0
Var sigmoid(Var x);
Var scale(Var x, double c);

// Softmax over a 1-D tensor, computed with max subtraction.
Var softmax(Var logits);

// -log softmax(scores)[target] for a 1-D score vector.
Var cross_entropy(Var scores, int target);

// Reductions and shape plumbing.
Var sum(Var x);                       // any shape -> scalar [1]
Var mean_rows(Var x);                 // [r x c] -> [c]
Var reshape(Var x, std::vector<int> dims);
Var concat(const std::vector<Var>& parts);        // 1-D concat
Var slice(Var x, int offset, int length);         // 1-D slice
Var select_row(Var matrix, int row);              // [r x c] -> [c]

// o[k] = sum_{i,j} core[i,j,k] * a[i] * b[j] for a 3-D core.
Var bilinear(Var core, Var a, Var b);

// Inverted dropout; identity when training is false.
Var dropout(Var x, double rate, SplitMix& rng, bool training);

}  // namespace qaa
