#include <catch2/catch_amalgamated.hpp>

#include "support/gradcheck.hpp"
#include "uir/graph.hpp"
#include "uir/rng.hpp"
#include "uir/tensor.hpp"

using uir::Graph;
using uir::Shape;
using uir::Tensor;

TEST_CASE("tensor invariants") {
  Tensor t(Shape{2, 3}, 0.5, true);
  REQUIRE(t.numel() == 6);
  REQUIRE(t.values().size() == 6);
  REQUIRE(t.grad().size() == 6);
  t.grad()[2] = 1.5;
  t.zero_grad();
  for (double g : t.grad()) REQUIRE(g == 0.0);

  REQUIRE_THROWS_AS(Tensor(Shape{2, 0}), uir::ShapeError);
  REQUIRE_THROWS_AS(Tensor::from_values({3}, {1.0, 2.0}), uir::ShapeError);
}

TEST_CASE("clamp endpoints") {
  Graph g;
  Tensor x = Tensor::from_values({3}, {-0.2, 0.5, 1.3});
  Tensor y = g.clamp(x, 0.0, 1.0);
  REQUIRE(y.values() == std::vector<double>{0.0, 0.5, 1.0});
  REQUIRE_THROWS(g.clamp(x, 1.0, 0.0));
}

TEST_CASE("conv2d of all-ones 3x3 against all-ones kernel is 9") {
  Graph g;
  Tensor x(Shape{1, 3, 3}, 1.0);
  Tensor k(Shape{1, 1, 3, 3}, 1.0);
  Tensor y = g.conv2d(x, k, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 1});
  REQUIRE(y.values()[0] == 9.0);
}

TEST_CASE("abs of mean of symmetric values cancels") {
  Graph g;
  Tensor x = Tensor::from_values({2}, {-1.0, 1.0});
  REQUIRE(g.abs(g.mean(x)).item() == 0.0);
}

TEST_CASE("l1 loss values") {
  Graph g;
  Tensor a(Shape{4}, 0.3);
  Tensor b(Shape{4}, 0.1);
  REQUIRE(g.l1_loss(a, a).item() == 0.0);
  REQUIRE_THAT(g.l1_loss(a, b).item(), Catch::Matchers::WithinAbs(0.2, 1e-15));

  // brute-force elementwise oracle on a random pair
  uir::Rng rng(99);
  std::vector<double> pv(4), tv(4);
  for (auto& v : pv) v = rng.uniform(-1.0, 1.0);
  for (auto& v : tv) v = rng.uniform(-1.0, 1.0);
  double expected = 0.0;
  for (size_t i = 0; i < 4; ++i) expected += std::fabs(pv[i] - tv[i]);
  expected /= 4.0;
  Tensor p = Tensor::from_values({4}, pv);
  Tensor t = Tensor::from_values({4}, tv);
  REQUIRE_THAT(g.l1_loss(p, t).item(), Catch::Matchers::WithinAbs(expected, 1e-15));

  Tensor c(Shape{3}, 0.0);
  REQUIRE_THROWS_AS(g.l1_loss(a, c), uir::ShapeError);
}

TEST_CASE("shape mismatch errors name both shapes") {
  Graph g;
  Tensor a(Shape{2, 2}, 0.0);
  Tensor b(Shape{4}, 0.0);
  try {
    g.add(a, b);
    FAIL("expected ShapeError");
  } catch (const uir::ShapeError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("[2x2]") != std::string::npos);
    REQUIRE(msg.find("[4]") != std::string::npos);
  }
}

TEST_CASE("non-finite inputs are rejected") {
  Graph g;
  Tensor a = Tensor::from_values({2}, {1.0, std::nan("")});
  Tensor b(Shape{2}, 0.0);
  REQUIRE_THROWS_AS(g.add(a, b), uir::NonFiniteError);
}

TEST_CASE("backward of mean gives uniform gradients") {
  Graph g;
  Tensor w(Shape{4}, 2.0, true);
  Tensor loss = g.mean(w);
  g.backward(loss);
  for (double gv : w.grad()) REQUIRE(gv == 0.25);
}

TEST_CASE("backward of l1 against zero on positive values is the sign rule") {
  Graph g;
  Tensor w = Tensor::from_values({5}, {0.1, 0.2, 0.3, 0.4, 0.5}, true);
  Tensor zero(Shape{5}, 0.0);
  g.backward(g.l1_loss(w, zero));
  for (double gv : w.grad()) REQUIRE(gv == 0.2);  // 1/len
}

TEST_CASE("backward requires a scalar and a fresh graph") {
  Graph g;
  Tensor w(Shape{3}, 1.0, true);
  Tensor y = g.relu(w);
  REQUIRE_THROWS_AS(g.backward(y), uir::ShapeError);

  Tensor loss = g.mean(y);
  g.backward(loss);
  REQUIRE_THROWS_AS(g.backward(loss), uir::Error);  // consumed graph

  // a new forward pass re-arms the graph
  Tensor loss2 = g.mean(g.relu(w));
  g.backward(loss2);
}

TEST_CASE("non-recording graph records nothing") {
  Graph g(false);
  Tensor w(Shape{3}, 1.0, true);
  Tensor y = g.mean(g.relu(w));
  REQUIRE(g.size() == 0);
  REQUIRE(y.item() == 1.0);
}

TEST_CASE("two-layer conv net gradients match finite differences") {
  uir::Rng rng(4242);
  Tensor x(Shape{2, 6, 6});
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  Tensor k1(Shape{3, 2, 3, 3}, 0.0, true);
  Tensor b1(Shape{3}, 0.0, true);
  Tensor k2(Shape{1, 3, 3, 3}, 0.0, true);
  Tensor b2(Shape{1}, 0.0, true);
  for (auto& v : k1.values()) v = rng.uniform(-0.5, 0.5);
  for (auto& v : b1.values()) v = rng.uniform(-0.2, 0.2);
  for (auto& v : k2.values()) v = rng.uniform(-0.5, 0.5);
  for (auto& v : b2.values()) v = rng.uniform(-0.2, 0.2);
  Tensor target(Shape{1, 6, 6}, 0.0);
  for (auto& v : target.values()) v = rng.uniform(0.0, 1.0);

  auto build = [&](Graph& g) {
    Tensor h = g.relu(g.bias_add(g.conv2d(x, k1, 1, 1), b1));
    Tensor out = g.bias_add(g.conv2d(h, k2, 1, 1), b2);
    return g.l1_loss(out, target);
  };
  const auto cmp = gradcheck::compare_gradients({k1, b1, k2, b2}, build, 1e-4, 1e-7, 1e-5);
  INFO(cmp.detail);
  REQUIRE(cmp.ok);
}

TEST_CASE("conv_transpose2d gradients match finite differences") {
  uir::Rng rng(77);
  Tensor x(Shape{2, 4, 4}, 0.0, true);
  Tensor k(Shape{2, 1, 3, 3}, 0.0, true);
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  for (auto& v : k.values()) v = rng.uniform(-0.5, 0.5);
  for (int64_t stride : {1, 2}) {
    for (int64_t pad : {0, 1}) {
      auto build = [&](Graph& g) { return g.mean(g.abs(g.conv_transpose2d(x, k, stride, pad))); };
      const auto cmp = gradcheck::compare_gradients({x, k}, build);
      INFO("stride " << stride << " pad " << pad << ": " << cmp.detail);
      REQUIRE(cmp.ok);
    }
  }
}

TEST_CASE("strided conv2d gradients match finite differences") {
  uir::Rng rng(78);
  Tensor x(Shape{1, 6, 6}, 0.0, true);
  Tensor k(Shape{2, 1, 3, 3}, 0.0, true);
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  for (auto& v : k.values()) v = rng.uniform(-0.5, 0.5);
  auto build = [&](Graph& g) { return g.mean(g.abs(g.conv2d(x, k, 2, 1))); };
  const auto cmp = gradcheck::compare_gradients({x, k}, build);
  INFO(cmp.detail);
  REQUIRE(cmp.ok);
}

TEST_CASE("random op compositions match finite differences") {
  int checked = 0;
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    gradcheck::RandomProgram prog(seed);
    const auto cmp =
        gradcheck::compare_gradients(prog.leaves(), [&](Graph& g) { return prog.build(g); });
    INFO("seed " << seed << ": " << cmp.detail);
    REQUIRE(cmp.ok);
    ++checked;
  }
  REQUIRE(checked >= 20);
}

TEST_CASE("backward is linear in held subgraphs") {
  uir::Rng rng(11);
  Tensor w(Shape{8}, 0.0, true);
  for (auto& v : w.values()) v = rng.uniform(-1.0, 1.0);
  Tensor t1(Shape{8}, 0.25);
  Tensor t2(Shape{8}, -0.5);

  auto grad_of = [&](double a, double b) {
    w.zero_grad();
    Graph g;
    Tensor combined = g.add(g.scale(g.l1_loss(w, t1), a), g.scale(g.mse_loss(w, t2), b));
    g.backward(combined);
    return w.grad();
  };

  const auto g1 = grad_of(1.0, 0.0);
  const auto g2 = grad_of(0.0, 1.0);
  // power-of-two weights keep the scaling exact in floating point
  const double a = 2.0, b = 0.5;
  const auto gc = grad_of(a, b);
  for (size_t i = 0; i < gc.size(); ++i) REQUIRE(gc[i] == a * g1[i] + b * g2[i]);
}

TEST_CASE("clamp gradient is 1 strictly inside and 0 outside") {
  Tensor x = Tensor::from_values({5}, {-2.0, 0.0, 0.5, 1.0, 2.0}, true);
  Graph g;
  g.backward(g.mean(g.clamp(x, 0.0, 1.0)));
  const auto& gv = x.grad();
  REQUIRE(gv[0] == 0.0);  // below
  REQUIRE(gv[1] == 0.0);  // boundary counts as clipped
  REQUIRE(gv[2] == 0.2);  // inside: d(mean)/dx = 1/5
  REQUIRE(gv[3] == 0.0);  // boundary
  REQUIRE(gv[4] == 0.0);  // above
}

TEST_CASE("gradients accumulate across shared uses") {
  Tensor x = Tensor::from_values({1}, {3.0}, true);
  Graph g;
  Tensor y = g.mul(x, x);  // x^2
  g.backward(g.mean(y));
  REQUIRE(x.grad()[0] == 6.0);
}
