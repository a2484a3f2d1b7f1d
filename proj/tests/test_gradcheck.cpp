#include <doctest.h>

#include <map>

#include "gradcheck_suites.hpp"
#include "liddense/depth_io.hpp"
#include "liddense/gradcheck.hpp"
#include "liddense/ops.hpp"

using namespace liddense;

TEST_CASE("quadratic: analytic gradient matches central differences") {
  Tensor x = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
  const auto rep = gradcheck([&] { return ops::sum(ops::mul(x, x)); }, {{"x", x}});
  CHECK(rep.passed());
  CHECK(rep.elements == 3);
  CHECK(rep.max_error < 1e-8);
  CHECK(rep.kinks == 0);
}

TEST_CASE("a stencil across the relu kink is counted and differenced on one side") {
  Tensor x = Tensor::from({2}, {2e-6, 1.0}, true);
  const auto rep = gradcheck([&] { return ops::sum(ops::relu(x)); }, {{"x", x}}, 1e-5);
  CHECK(rep.kinks == 1);
  CHECK(rep.passed());
  CHECK(rep.max_error < 1e-9);
}

TEST_CASE("gradcheck argument validation") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  const Tensor frozen = Tensor::from({2}, {1.0, 2.0});
  CHECK_THROWS_AS(gradcheck([&] { return ops::sum(x); }, {{"f", frozen}}), std::invalid_argument);
  CHECK_THROWS_AS(gradcheck([&] { return ops::scale(x, 2.0); }, {{"x", x}}), ShapeError);
  CHECK_THROWS_AS(gradcheck([&] { return ops::sum(x); }, {{"x", x}}, 0.0), std::invalid_argument);
  int calls = 0;
  CHECK_THROWS_AS(gradcheck([&] { return ops::scale(ops::sum(x), 1.0 + ++calls); }, {{"x", x}}),
                  NondeterminismError);
}

TEST_CASE("a wrong backward rule is reported") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  fault::arm("mul");
  const auto rep = gradcheck([&] { return ops::sum(ops::mul(x, x)); }, {{"x", x}});
  fault::disarm();
  CHECK_FALSE(rep.passed());
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].worst_analytic == doctest::Approx(1.01 * rep.entries[0].worst_numeric).epsilon(1e-6));
}

TEST_CASE("every component suite passes") {
  for (const auto& name : cli::suite_names()) {
    if (name == "network") continue;  // covered by the acceptance run
    CAPTURE(name);
    const auto r = cli::run_suite(name, 0, 1e-5, 1e-4);
    CHECK(r.report.passed());
    CHECK(r.report.elements > 0);
  }
}

TEST_CASE("suites are deterministic in the seed") {
  const auto a = cli::run_suite("sgdum", 3, 1e-5, 1e-4);
  const auto b = cli::run_suite("sgdum", 3, 1e-5, 1e-4);
  CHECK(a.report.max_error == b.report.max_error);
}

TEST_CASE("every injectable fault is detected by its suite") {
  const std::map<std::string, std::string> suite_for = {
      {"reassemble", "sgdum"}, {"sum", "relu"}};
  for (const auto& name : cli::fault_names()) {
    const auto it = suite_for.find(name);
    const std::string suite = it == suite_for.end() ? name : it->second;
    CAPTURE(name);
    fault::arm(name);
    const auto r = cli::run_suite(suite, 0, 1e-5, 1e-4);
    fault::disarm();
    CHECK_FALSE(r.report.passed());
  }
}
