#include <catch2/catch_amalgamated.hpp>

#include "uir/model.hpp"

using uir::Graph;
using uir::RestorationModel;
using uir::Shape;
using uir::Tensor;

TEST_CASE("initialization is deterministic") {
  RestorationModel a(16, 4, 9);
  RestorationModel b(16, 4, 9);
  REQUIRE(a.params().size() == b.params().size());
  for (size_t i = 0; i < a.params().size(); ++i)
    REQUIRE(a.params()[i].tensor.values() == b.params()[i].tensor.values());

  RestorationModel c(16, 4, 10);
  REQUIRE(a.params()[0].tensor.values() != c.params()[0].tensor.values());
}

TEST_CASE("parameter count equals the layer arithmetic") {
  const int64_t width = 16, depth = 4;
  RestorationModel m(width, depth, 0);
  // independent sum: first 3->W, middle W->W, last W->3, all 3x3 plus biases
  int64_t expected = 0;
  expected += width * 3 * 9 + width;
  for (int64_t l = 0; l < depth - 2; ++l) expected += width * width * 9 + width;
  expected += 3 * width * 9 + 3;
  REQUIRE(m.param_count() == expected);
  REQUIRE(m.param_count() <= 50000);
}

TEST_CASE("default-size models stay under the parameter bound") {
  REQUIRE(RestorationModel(24, 5, 0).param_count() <= 50000);
  REQUIRE(RestorationModel(32, 6, 0).param_count() <= 50000);
}

TEST_CASE("zero-initialized final stage makes the model an identity map") {
  RestorationModel m(16, 4, 3);
  const auto img = uir::make_clean_corpus(1, 20, 20, 5)[0];
  Graph g(false);
  const Tensor out = uir::restore(m, g, img);
  REQUIRE(out.values() == img.values());
}

TEST_CASE("forward preserves shape for several input sizes") {
  RestorationModel m(8, 3, 1);
  for (int64_t side : {32, 48}) {
    Tensor img(Shape{3, side, side}, 0.25);
    Graph g(false);
    REQUIRE(uir::restore(m, g, img).shape() == img.shape());
  }
  Tensor rect(Shape{3, 16, 24}, 0.5);
  Graph g(false);
  REQUIRE(uir::restore(m, g, rect).shape() == rect.shape());
}

TEST_CASE("forward on a zero image is finite") {
  RestorationModel m(16, 4, 123);
  Tensor img(Shape{3, 16, 16}, 0.0);
  Graph g(false);
  REQUIRE(uir::restore(m, g, img).all_finite());
}

TEST_CASE("forward is deterministic") {
  RestorationModel m(16, 4, 123);
  // give the final stage nonzero weights so the output is nontrivial
  for (auto& v : m.params()[6].tensor.values()) v = 0.01;
  const auto img = uir::make_clean_corpus(1, 16, 16, 9)[0];
  Graph g1(false), g2(false);
  REQUIRE(uir::restore(m, g1, img).values() == uir::restore(m, g2, img).values());
}

TEST_CASE("invalid construction and inputs are rejected") {
  REQUIRE_THROWS_AS(RestorationModel(4, 4, 0), uir::ConfigError);
  REQUIRE_THROWS_AS(RestorationModel(16, 1, 0), uir::ConfigError);

  RestorationModel m(8, 2, 0);
  Graph g;
  REQUIRE_THROWS_AS(uir::restore(m, g, Tensor(Shape{1, 16, 16}, 0.0)), uir::ShapeError);
  REQUIRE_THROWS_AS(uir::restore(m, g, Tensor(Shape{3, 8, 8}, 0.0)), uir::ShapeError);
  REQUIRE_THROWS(uir::restore(m, g, Tensor(Shape{3, 16, 16}, 1.5)));  // range violation
}

TEST_CASE("training pass records gradients for every parameter") {
  RestorationModel m(8, 3, 4);
  const auto img = uir::make_clean_corpus(1, 16, 16, 6)[0];
  Tensor target(img.shape(), 0.5);
  Graph g;
  g.backward(g.l1_loss(uir::restore(m, g, img), target));
  bool any_nonzero = false;
  for (const auto& p : m.params())
    for (double gv : p.tensor.grad())
      if (gv != 0.0) any_nonzero = true;
  REQUIRE(any_nonzero);
}

TEST_CASE("clone is a deep copy") {
  RestorationModel m(8, 2, 4);
  RestorationModel c = m.clone();
  c.params()[0].tensor.values()[0] += 1.0;
  REQUIRE(m.params()[0].tensor.values()[0] != c.params()[0].tensor.values()[0]);
}
