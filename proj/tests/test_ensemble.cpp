#include <cmath>
#include <numeric>

#include "doctest.h"
#include "support.hpp"
#include "topicens/ensemble.hpp"

using namespace topicens;

TEST_CASE("mode names round trip") {
  for (auto m : {EnsembleMode::sampling, EnsembleMode::vary_alpha, EnsembleMode::vary_beta, EnsembleMode::vary_k}) {
    CHECK(ensemble_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(ensemble_mode_from_string("vary_gamma"), std::invalid_argument);
}

TEST_CASE("E1 samples ten seeds of one configuration") {
  const auto s = preset("E1", 100, 5);
  CHECK(s.mode == EnsembleMode::sampling);
  CHECK(s.members == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto c = s.member_config(i);
    CHECK(c.seed == 5 + i);
    CHECK(c.k == 20);
    CHECK(c.alpha == 0.25);
    CHECK(c.iterations == 100);
  }
}

TEST_CASE("E3 alpha spans 0.5/k to 20/k geometrically") {
  const auto s = preset("E3");
  REQUIRE(s.parameter_values.size() == 10);
  CHECK(s.parameter_values.front() == 0.5 / 20);
  CHECK(s.parameter_values.back() == 20.0 / 20);
  const double ratio = std::pow(40.0, 1.0 / 9.0);
  for (std::size_t i = 1; i < 10; ++i) CHECK(s.parameter_values[i] / s.parameter_values[i - 1] == doctest::Approx(ratio));
  CHECK(s.member_config(3).alpha == s.parameter_values[3]);
  CHECK(s.member_config(3).beta == 0.01);
}

TEST_CASE("E4 beta is evenly spaced 0.01..0.23") {
  const auto s = preset("E4");
  CHECK(s.parameter_values.front() == doctest::Approx(0.01));
  CHECK(s.parameter_values.back() == doctest::Approx(0.23));
  for (std::size_t i = 1; i < 10; ++i) CHECK(s.parameter_values[i] - s.parameter_values[i - 1] == doctest::Approx(0.22 / 9));
  CHECK(s.member_config(9).beta == s.parameter_values[9]);
}

TEST_CASE("E5 varies k and keeps alpha at 5/k") {
  const auto s = preset("E5");
  CHECK(s.parameter_values == std::vector<double>{20, 23, 27, 30, 33, 37, 40, 43, 47, 50});
  std::size_t topics = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto c = s.member_config(i);
    CHECK(c.alpha == doctest::Approx(5.0 / static_cast<double>(c.k)));
    topics += c.k;
  }
  CHECK(topics == 350);
}

TEST_CASE("E2 and unknown presets are refused") {
  CHECK_THROWS_AS(preset("E2"), std::invalid_argument);
  CHECK_THROWS_AS(preset("E9"), std::invalid_argument);
}

TEST_CASE("spec validation") {
  auto s = preset("E4");
  CHECK_NOTHROW(s.validate());
  s.parameter_values.pop_back();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset("E4");
  std::swap(s.parameter_values[1], s.parameter_values[2]);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset("E5");
  s.parameter_values[0] = 20.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset("E1");
  s.members = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = preset("E1");
  s.pin_seed = true;
  CHECK(s.member_config(4).seed == s.base_config.seed);
}

TEST_CASE("varied_parameters names what differs") {
  const auto names = [](const EnsembleSpec& s) {
    std::vector<LdaConfig> cs;
    for (std::size_t i = 0; i < s.members; ++i) cs.push_back(s.member_config(i));
    return varied_parameters(cs);
  };
  CHECK(names(preset("E1")).empty());
  CHECK(names(preset("E3")) == std::vector<std::string>{"alpha_scale"});
  CHECK(names(preset("E4")) == std::vector<std::string>{"beta"});
  // alpha follows 5/k, so only k varies
  CHECK(names(preset("E5")) == std::vector<std::string>{"k"});
}

TEST_CASE("spec JSON round trip") {
  for (const char* name : {"E1", "E3", "E4", "E5"}) {
    auto s = preset(name, 77, 3);
    const auto back = spec_from_json(nlohmann::json::parse(spec_to_json(s).dump()));
    CHECK(back.mode == s.mode);
    CHECK(back.members == s.members);
    CHECK(back.parameter_values == s.parameter_values);
    CHECK(back.base_config == s.base_config);
    CHECK(back.pin_seed == s.pin_seed);
  }
}

TEST_CASE("generate trains every member and shares the vocabulary") {
  const auto c2 = testutil::two_block_corpus(4);
  auto s = preset("E5", 20, 2);
  s.members = 3;
  s.parameter_values = {2, 3, 5};
  s.base_config = LdaConfig::defaults(2, 2);
  s.base_config.iterations = 20;
  const auto e = generate(c2.matrix, c2.vocabulary, s);
  REQUIRE(e.size() == 3);
  CHECK(e.total_topics() == 10);
  CHECK(e.members[2].num_topics() == 5);
  CHECK(e.members[2].config.alpha == doctest::Approx(5.0 / 5));
  CHECK(e.doc_ids == c2.matrix.doc_ids());
  CHECK_NOTHROW(e.check_invariants());
  for (std::size_t m = 0; m < 3; ++m) CHECK(e.members[m].model_id == m);

  // member i is the same model as a standalone train with member_config(i)
  const auto solo = train(c2.matrix, s.member_config(1));
  CHECK(solo.phi == e.members[1].phi);
}

TEST_CASE("refs, flat_index and contains agree") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = testutil::make_ensemble(testutil::random_models(rng));
    const auto refs = e.refs();
    CHECK(refs.size() == e.total_topics());
    for (std::size_t i = 0; i < refs.size(); ++i) {
      CHECK(e.flat_index(refs[i]) == i);
      CHECK(e.contains(refs[i]));
    }
    CHECK_FALSE(e.contains({e.size(), 0}));
    CHECK_THROWS_AS(e.flat_index({0, e.members[0].num_topics()}), std::out_of_range);
  }
}
