#include <doctest.h>

#include "liddense/depth_io.hpp"
#include "liddense/ops.hpp"
#include "liddense/tensor.hpp"

using namespace liddense;

TEST_CASE("construction and shape helpers") {
  CHECK(shape_numel({2, 3, 4}) == 24);
  CHECK(shape_numel({}) == 1);
  CHECK(shape_string({2, 3}) == "[2,3]");
  const Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(t.rank() == 2);
  CHECK(t.dim(1) == 2);
  CHECK(t[3] == 4.0);
  CHECK(Tensor::scalar(5.0).item() == 5.0);
  CHECK(Tensor::full({3}, 2.5)[2] == 2.5);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("handles share storage, clone and detach copy") {
  Tensor a = Tensor::from({2}, {1, 2}, true);
  Tensor b = a;
  b.mutable_values()[0] = 9.0;
  CHECK(a[0] == 9.0);
  Tensor c = a.clone();
  c.mutable_values()[0] = 1.0;
  CHECK(a[0] == 9.0);
  CHECK(c.requires_grad());
  CHECK_FALSE(a.detach().requires_grad());
}

TEST_CASE("graph recording follows requires_grad and NoGradGuard") {
  const Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor k = Tensor::from({2}, {3, 4});
  const Tensor y = ops::mul(x, k);
  CHECK_FALSE(y.is_leaf());
  CHECK(y.requires_grad());
  CHECK(std::string(y.op_name()) == "mul");
  CHECK(ops::mul(k, k).is_leaf());
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    CHECK(ops::mul(x, k).is_leaf());
  }
  CHECK(grad_enabled());
}

TEST_CASE("diamond graph accumulates both paths") {
  // f = sum(a*b + a) -> df/da = b + 1, df/db = a
  Tensor a = Tensor::from({3}, {1, 2, 3}, true);
  Tensor b = Tensor::from({3}, {4, 5, 6}, true);
  const Tensor f = ops::sum(ops::add(ops::mul(a, b), a));
  backward(f);
  CHECK(std::vector<double>(a.grad().begin(), a.grad().end()) == std::vector<double>{5, 6, 7});
  CHECK(std::vector<double>(b.grad().begin(), b.grad().end()) == std::vector<double>{1, 2, 3});

  // Leaf grads accumulate across backward calls until zeroed.
  backward(f);
  CHECK(a.grad()[0] == 10.0);
  a.zero_grad();
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("tape lists inputs before consumers and visits shared nodes once") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor h = ops::mul(x, x);
  const Tensor f = ops::sum(ops::add(h, h));
  const Tape tape = Tape::record(f);
  CHECK(tape.size() == 4);  // x, h, add, sum
  const auto recs = tape.records();
  CHECK(recs.front() == x.node());
  CHECK(recs.back() == f.node());
  backward(f);
  CHECK(x.grad()[1] == doctest::Approx(8.0));  // d/dx 2x^2 = 4x
}

TEST_CASE("interior grads are reset between backward passes") {
  Tensor x = Tensor::from({1}, {3}, true);
  const Tensor h = ops::scale(x, 2.0);
  const Tensor f = ops::sum(h);
  backward(f);
  backward(f);
  CHECK(h.grad()[0] == 1.0);
  CHECK(x.grad()[0] == 4.0);
}

TEST_CASE("backward requires a scalar") {
  const Tensor x = Tensor::from({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(ops::scale(x, 2.0)), ShapeError);
}

TEST_CASE("piecewise recorder: record, replay and mismatch counting") {
  std::vector<std::int32_t> recorded;
  {
    piecewise::Recorder rec;
    CHECK(piecewise::active() == &rec);
    CHECK(piecewise::decide(piecewise::active(), 1) == 1);
    CHECK(piecewise::decide(piecewise::active(), 0) == 0);
    recorded = rec.decisions();
  }
  CHECK(piecewise::active() == nullptr);
  CHECK(piecewise::decide(nullptr, 7) == 7);
  {
    piecewise::Recorder rec(recorded);
    CHECK(rec.decide(0) == 1);  // replayed value wins
    CHECK(rec.decide(0) == 0);
    CHECK(rec.mismatches() == 1);
    CHECK(rec.consumed() == 2);
    CHECK_THROWS_AS(rec.decide(0), std::logic_error);
  }
}

TEST_CASE("relu replays the recorded mask") {
  Tensor x = Tensor::from({2}, {-1.0, 2.0}, true);
  std::vector<std::int32_t> mask;
  {
    piecewise::Recorder rec;
    ops::relu(x);
    mask = rec.decisions();
  }
  x.mutable_values()[0] = 0.5;
  x.mutable_values()[1] = -0.5;
  piecewise::Recorder rec(mask);
  const Tensor y = ops::relu(x);
  CHECK(y[0] == 0.0);   // kept off
  CHECK(y[1] == -0.5);  // kept on
  CHECK(rec.mismatches() == 2);
}

TEST_CASE("fault injection scales one backward rule") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  fault::arm("scale");
  CHECK(fault::armed("scale"));
  CHECK_FALSE(fault::armed("add"));
  backward(ops::sum(ops::scale(x, 3.0)));
  fault::disarm();
  CHECK(x.grad()[0] == doctest::Approx(3.03));
  x.zero_grad();
  backward(ops::sum(ops::scale(x, 3.0)));
  CHECK(x.grad()[0] == 3.0);
}
