#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qaa/errors.hpp"
#include "qaa/grad_check.hpp"
#include "qaa/graph.hpp"
#include "qaa/optimizer.hpp"
#include "qaa/rng.hpp"

using namespace qaa;

namespace {

Tensor random_tensor(std::vector<int> dims, std::uint64_t seed) {
  SplitMix rng(seed);
  Tensor t(std::move(dims));
  for (int i = 0; i < t.size(); ++i) t[i] = rng.next_uniform(-1.0, 1.0);
  return t;
}

// Independent triple-loop product used as the matmul oracle.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("matmul identity and hand products") {
  Graph g;
  Var eye = g.input(Tensor({2, 2}, {1, 0, 0, 1}));
  Var m = g.input(Tensor({2, 2}, {3, 4, 5, 6}));
  Var prod = matmul(eye, m);
  for (int i = 0; i < 4; ++i) CHECK(prod.value()[i] == m.value()[i]);

  Var a = g.input(Tensor({1, 2}, {1, 2}));
  Var b = g.input(Tensor({2, 1}, {3, 4}));
  CHECK(matmul(a, b).value()[0] == 11.0);

  Var bad = g.input(Tensor({3, 3}));
  CHECK_THROWS_AS(matmul(a, bad), ShapeError);
}

TEST_CASE("matmul matches the triple-loop oracle") {
  Tensor a = random_tensor({3, 4}, 11);
  Tensor b = random_tensor({4, 2}, 12);
  Graph g;
  Var prod = matmul(g.input(a), g.input(b));
  Tensor expect = naive_matmul(a, b);
  for (int i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(prod.value()[i] - expect[i]) <= 1e-12);
  }
}

TEST_CASE("matmul associativity on random tensors") {
  Tensor a = random_tensor({3, 4}, 1);
  Tensor b = random_tensor({4, 5}, 2);
  Tensor c = random_tensor({5, 2}, 3);
  Graph g;
  Var left = matmul(matmul(g.input(a), g.input(b)), g.input(c));
  Var right = matmul(g.input(a), matmul(g.input(b), g.input(c)));
  for (int i = 0; i < left.value().size(); ++i) {
    double l = left.value()[i], r = right.value()[i];
    CHECK(std::abs(l - r) <= 1e-9 * std::max(1.0, std::abs(l)));
  }
}

TEST_CASE("elementwise ops") {
  Graph g;
  Var a = g.input(Tensor({3}, {1, 0, 2}));
  Var b = g.input(Tensor({3}, {5, 7, 3}));
  Var prod = mul(a, b);
  CHECK(prod.value()[0] == 5.0);
  CHECK(prod.value()[1] == 0.0);
  CHECK(prod.value()[2] == 6.0);

  Var r = relu(g.input(Tensor({3}, {-1, 0, 2})));
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 0.0);
  CHECK(r.value()[2] == 2.0);

  Var t = tanh(g.input(Tensor({4})));
  for (int i = 0; i < 4; ++i) CHECK(t.value()[i] == 0.0);

  Var sc = scale(a, -2.0);
  CHECK(sc.value()[2] == -4.0);
}

TEST_CASE("broadcast add over the last axis") {
  Graph g;
  Var m = g.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var v = g.input(Tensor({3}, {10, 20, 30}));
  Var s = add(m, v);
  CHECK(s.value().at(0, 0) == 11.0);
  CHECK(s.value().at(1, 2) == 36.0);

  Var bad = g.input(Tensor({2}, {1, 1}));
  CHECK_THROWS_AS(add(m, bad), ShapeError);
}

TEST_CASE("softmax values and stability") {
  Graph g;
  Var u = softmax(g.input(Tensor({3})));
  for (int i = 0; i < 3; ++i) CHECK(u.value()[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Var two = softmax(g.input(Tensor({2}, {std::log(2.0), 0.0})));
  CHECK(two.value()[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(two.value()[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Var sharp = softmax(g.input(Tensor({2}, {10, -10})));
  CHECK(sharp.value()[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(sharp.value()[1] == doctest::Approx(0.0).epsilon(1e-4));

  Var huge = softmax(g.input(Tensor({2}, {1e4, 1e4})));
  CHECK(huge.value().all_finite());

  CHECK_THROWS_AS(softmax(g.input(Tensor({2, 2}))), DomainError);
}

TEST_CASE("softmax shift invariance") {
  Tensor logits = random_tensor({7}, 21);
  Tensor shifted = logits;
  for (int i = 0; i < shifted.size(); ++i) shifted[i] += 37.25;
  Graph g;
  Var s0 = softmax(g.input(logits));
  Var s1 = softmax(g.input(shifted));
  double total = 0.0;
  for (int i = 0; i < 7; ++i) {
    CHECK(std::abs(s0.value()[i] - s1.value()[i]) <= 1e-12);
    CHECK(s0.value()[i] > 0.0);
    total += s0.value()[i];
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("cross entropy values") {
  Graph g;
  Var uniform = cross_entropy(g.input(Tensor({4})), 2);
  CHECK(uniform.value()[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Var confident = cross_entropy(g.input(Tensor({3}, {30, 0, 0})), 0);
  CHECK(confident.value()[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(confident.value()[0] > 0.0);

  Var split = cross_entropy(g.input(Tensor({2})), 1);
  CHECK(split.value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(cross_entropy(g.input(Tensor({3})), 3), DomainError);
  CHECK_THROWS_AS(cross_entropy(g.input(Tensor({3})), -1), DomainError);
}

TEST_CASE("backward on linear and quadratic sums") {
  ParamStore store(5);
  store.add_custom("w", Tensor({3}, {0.5, -1.0, 2.0}));
  {
    Graph g;
    Var loss = sum(g.param(store, "w"));
    g.backward(loss);
    for (int i = 0; i < 3; ++i) CHECK(store.grad("w")[i] == 1.0);
  }

  ParamStore store2(5);
  store2.add_custom("w", Tensor({2}, {1.0, 2.0}));
  {
    Graph g;
    Var w = g.param(store2, "w");
    Var loss = sum(mul(w, w));
    g.backward(loss);
    CHECK(store2.grad("w")[0] == 2.0);
    CHECK(store2.grad("w")[1] == 4.0);
  }
}

TEST_CASE("backward requires scalar loss and leaves unused params at zero") {
  ParamStore store(5);
  store.add_custom("used", Tensor({2}, {1.0, 2.0}));
  store.add_custom("unused", Tensor({2}, {3.0, 4.0}));
  Graph g;
  Var w = g.param(store, "used");
  CHECK_THROWS_AS(g.backward(w), DomainError);
  Var loss = sum(w);
  g.backward(loss);
  CHECK(store.grad("used")[0] == 1.0);
  CHECK(store.grad("unused")[0] == 0.0);
  CHECK(store.grad("unused")[1] == 0.0);
}

TEST_CASE("composite tanh/matmul graph matches finite differences") {
  ParamStore store(17);
  store.add_weight("w", {4, 3});
  store.add_weight("u", {3, 2});
  store.randomize_uniform(31, -0.8, 0.8);
  Tensor x = random_tensor({1, 4}, 77);
  auto build = [&](Graph& g) {
    Var h = tanh(matmul(g.input(x), g.param(store, "w")));
    Var out = matmul(h, g.param(store, "u"));
    return sum(tanh(out));
  };
  FdReport report = finite_difference_check(build, store, 1e-6);
  CHECK(report.passed());
  CHECK(report.rows.size() == 2);
}

TEST_CASE("relu gradient away from the kink passes finite differences") {
  // relu is checked off the kink; x = 0 is excluded by the h-step probe.
  ParamStore store(3);
  store.add_custom("w", Tensor({3}, {0.4, -0.7, 1.3}));
  auto build = [&](Graph& g) { return sum(relu(g.param(store, "w"))); };
  FdReport report = finite_difference_check(build, store, 1e-6);
  CHECK(report.passed());
}

TEST_CASE("relu gradient at exactly zero is zero") {
  ParamStore store(3);
  store.add_custom("w", Tensor({1}, {0.0}));
  Graph g;
  Var loss = sum(relu(g.param(store, "w")));
  g.backward(loss);
  CHECK(store.grad("w")[0] == 0.0);
}

TEST_CASE("gradient check rejects non-deterministic losses") {
  ParamStore store(3);
  store.add_custom("w", Tensor({1}, {1.0}));
  int calls = 0;
  auto build = [&](Graph& g) {
    ++calls;
    return sum(scale(g.param(store, "w"), static_cast<double>(calls)));
  };
  CHECK_THROWS_AS(finite_difference_check(build, store), NumericError);
}

TEST_CASE("bilinear op value and gradients") {
  ParamStore store(9);
  store.add_weight("core", {2, 3, 2});
  store.add_weight("a", {2});
  store.add_weight("b", {3});
  store.randomize_uniform(41, -0.9, 0.9);
  {
    Graph g;
    Var out = bilinear(g.param(store, "core"), g.param(store, "a"), g.param(store, "b"));
    const Tensor& c = store.value("core");
    const Tensor& a = store.value("a");
    const Tensor& b = store.value("b");
    for (int k = 0; k < 2; ++k) {
      double expect = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) expect += c[(i * 3 + j) * 2 + k] * a[i] * b[j];
      }
      CHECK(out.value()[k] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  auto build = [&](Graph& g) {
    Var out = bilinear(g.param(store, "core"), g.param(store, "a"), g.param(store, "b"));
    return sum(tanh(out));
  };
  CHECK(finite_difference_check(build, store, 1e-6).passed());
}

TEST_CASE("shape plumbing ops backpropagate") {
  ParamStore store(13);
  store.add_weight("m", {3, 4});
  store.randomize_uniform(51, -1.0, 1.0);
  auto build = [&](Graph& g) {
    Var m = g.param(store, "m");
    Var row = select_row(m, 1);
    Var piece = slice(reshape(m, {12}), 2, 5);
    Var joined = concat({row, piece, mean_rows(m)});
    return sum(tanh(joined));
  };
  CHECK(finite_difference_check(build, store, 1e-6).passed());
}

TEST_CASE("softmax and cross entropy gradients") {
  ParamStore store(7);
  store.add_weight("logits", {5});
  store.randomize_uniform(61, -1.5, 1.5);
  auto soft = [&](Graph& g) {
    Var s = softmax(g.param(store, "logits"));
    Var weights = g.input(Tensor({5}, {0.3, -0.2, 0.9, 0.1, -0.5}));
    return sum(mul(s, weights));
  };
  CHECK(finite_difference_check(soft, store, 1e-6).passed());
  auto ce = [&](Graph& g) { return cross_entropy(g.param(store, "logits"), 2); };
  CHECK(finite_difference_check(ce, store, 1e-6).passed());
}

TEST_CASE("sigmoid and broadcast gradients") {
  ParamStore store(23);
  store.add_weight("m", {4, 3});
  store.add_weight("v", {3});
  store.randomize_uniform(71, -1.0, 1.0);
  auto build = [&](Graph& g) {
    Var s = sigmoid(add(g.param(store, "m"), g.param(store, "v")));
    Var p = mul(g.param(store, "m"), g.param(store, "v"));
    return sum(add(s, sub(p, g.param(store, "v"))));
  };
  CHECK(finite_difference_check(build, store, 1e-6).passed());
}

TEST_CASE("sgd step") {
  ParamStore store(1);
  store.add_custom("w", Tensor({1}, {1.0}));
  store.grad("w")[0] = 2.0;
  Optimizer opt(OptimConfig{OptimConfig::Kind::sgd, 0.1});
  opt.step(store);
  CHECK(store.value("w")[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(store.grad("w")[0] == 0.0);
}

TEST_CASE("zero gradient leaves sgd parameters unchanged") {
  ParamStore store(1);
  store.add_custom("w", Tensor({2}, {1.5, -0.5}));
  Optimizer opt(OptimConfig{OptimConfig::Kind::sgd, 0.1});
  opt.step(store);
  CHECK(store.value("w")[0] == 1.5);
  CHECK(store.value("w")[1] == -0.5);
}

TEST_CASE("adam first step matches the hand-derived update") {
  ParamStore store(1);
  store.add_custom("w", Tensor({1}, {0.0}));
  store.grad("w")[0] = 1.0;
  OptimConfig cfg;  // adam, lr 1e-3, betas 0.9/0.999, eps 1e-8
  Optimizer opt(cfg);
  opt.step(store);
  // m_hat = 1, v_hat = 1 after bias correction, so w = -lr / (1 + eps).
  double expect = -cfg.lr * 1.0 / (std::sqrt(1.0) + cfg.eps);
  CHECK(store.value("w")[0] == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("optimizer trajectories are bit-identical across runs") {
  auto run = [](std::uint64_t seed) {
    ParamStore store(seed);
    store.add_weight("w", {4, 4});
    Optimizer opt(OptimConfig{});
    for (int step = 0; step < 5; ++step) {
      Graph g;
      Var w = g.param(store, "w");
      Var loss = sum(mul(w, w));
      g.backward(loss);
      opt.step(store);
    }
    return store.value("w").vec();
  };
  auto a = run(33);
  auto b = run(33);
  CHECK(a == b);
}

TEST_CASE("nan gradient aborts naming the parameter") {
  ParamStore store(1);
  store.add_custom("alpha", Tensor({1}, {1.0}));
  store.add_custom("beta", Tensor({1}, {1.0}));
  store.grad("beta")[0] = std::nan("");
  Optimizer opt(OptimConfig{});
  try {
    opt.step(store);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
}

TEST_CASE("xavier initialization is bounded and deterministic") {
  ParamStore a(7), b(7);
  a.add_weight("w", {10, 20});
  b.add_weight("w", {10, 20});
  double bound = std::sqrt(6.0 / 30.0);
  for (int i = 0; i < a.value("w").size(); ++i) {
    CHECK(a.value("w")[i] == b.value("w")[i]);
    CHECK(std::abs(a.value("w")[i]) <= bound);
  }
  ParamStore c(7);
  c.add_bias("b", {20});
  for (int i = 0; i < 20; ++i) CHECK(c.value("b")[i] == 0.0);
}

TEST_CASE("dropout is identity in eval mode and masks in train mode") {
  SplitMix rng(5);
  Graph g;
  Var x = g.input(Tensor({100}, std::vector<double>(100, 1.0)));
  Var eval_out = dropout(x, 0.3, rng, false);
  CHECK(eval_out.id == x.id);

  Var train_out = dropout(x, 0.3, rng, true);
  int zeros = 0;
  for (int i = 0; i < 100; ++i) {
    double v = train_out.value()[i];
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.7)));
    if (v == 0.0) ++zeros;
  }
  CHECK(zeros > 5);
  CHECK(zeros < 70);
}
