#include <doctest.h>

#include <cstring>
#include <sstream>

#include "liddense/checkpoint.hpp"
#include "liddense/sgtbn.hpp"
#include "test_helpers.hpp"

using namespace liddense;

TEST_CASE("checkpoint round trip is bit exact") {
  sgtbn::SgtbnTiny a(5), b(6);
  // Values that decimal printing would mangle.
  a.parameters().items()[0].tensor.mutable_values()[0] = 0.1 + 0.2;
  a.parameters().items()[0].tensor.mutable_values()[1] = -0x1.fffffffffffffp-1022;
  testing::TempDir dir("ckpt");
  checkpoint::save(a.parameters(), dir / "model.txt");
  checkpoint::apply(b.parameters(), checkpoint::load(dir / "model.txt"));
  const auto& pa = a.parameters().items();
  const auto& pb = b.parameters().items();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t p = 0; p < pa.size(); ++p) {
    const auto va = pa[p].tensor.values(), vb = pb[p].tensor.values();
    REQUIRE(va.size() == vb.size());
    CHECK(std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) == 0);
  }

  std::ostringstream s1, s2;
  checkpoint::save(a.parameters(), s1);
  checkpoint::save(b.parameters(), s2);
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().rfind("liddense-checkpoint 1\n", 0) == 0);
}

TEST_CASE("checkpoint format errors") {
  auto load_text = [](const std::string& text) {
    std::istringstream in(text);
    return checkpoint::load(in);
  };
  CHECK_THROWS_AS(load_text(""), FormatError);
  CHECK_THROWS_AS(load_text("something-else 1\n"), FormatError);
  CHECK_THROWS_AS(load_text("liddense-checkpoint 2\nparameters 0\n"), FormatError);
  CHECK_THROWS_AS(load_text("liddense-checkpoint 1\nparameters 1\nw 1 3\n0x1p+0 0x1p+1\n"),
                  FormatError);
  CHECK_THROWS_AS(load_text("liddense-checkpoint 1\nparameters 1\nw 1 2\n0x1p+0 zz\n"),
                  FormatError);
  const auto ok = load_text("liddense-checkpoint 1\nparameters 1\nw 2 1 2\n0x1p+0 -0x1.8p+1\n");
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].name == "w");
  CHECK(ok[0].tensor.shape() == Shape{1, 2});
  CHECK(ok[0].tensor[1] == -3.0);
}

TEST_CASE("applying a mismatched checkpoint fails") {
  nn::ParameterSet params;
  params.add("w", Tensor::from({2}, {1.0, 2.0}, true));
  std::vector<NamedTensor> wrong_name = {{"v", Tensor::from({2}, {0.0, 0.0})}};
  std::vector<NamedTensor> wrong_shape = {{"w", Tensor::from({1, 2}, {0.0, 0.0})}};
  CHECK_THROWS_AS(checkpoint::apply(params, wrong_name), FormatError);
  CHECK_THROWS_AS(checkpoint::apply(params, wrong_shape), FormatError);
  CHECK_THROWS_AS(checkpoint::apply(params, {}), FormatError);
  CHECK(params.items()[0].tensor[0] == 1.0);
}
