#include <doctest.h>

#include "zonecast/config.hpp"
#include "zonecast/error.hpp"

using namespace zonecast;
using namespace zonecast::config;

TEST_CASE("defaults validate and pick one-week lookback, two-week horizon") {
  RunConfig c;
  c.validate();
  const auto fc = c.forecast_config();
  CHECK(fc.step_seconds == 900);
  CHECK(fc.lookback_steps == 7 * 96);
  CHECK(fc.horizon_steps == 14 * 96);
  CHECK(c.candidate_specs().size() == 5);
}

TEST_CASE("text form: sections, comments, typed values") {
  const auto raw = parse_text(R"(# comment
[run]
seed = 7
[features]
horizon_steps = 96   # trailing
[select]
candidates = GP, XGB_STYLE
[regressor.GP]
max_samples = 300
[mpc]
start = 2022-08-01T00:00:00Z
lambda_comfort = 5
)");
  const auto c = apply(raw);
  CHECK(c.seed == 7);
  CHECK(c.horizon_steps == 96);
  REQUIRE(c.candidates.size() == 2);
  CHECK(c.candidates[0] == regressors::RegressorKind::GP);
  CHECK(c.candidate_specs()[0].get_int("max_samples") == 300);
  CHECK(c.candidate_specs()[0].seed == 7);
  CHECK(c.mpc.start == make_utc(2022, 8, 1));
  CHECK(c.mpc.config.lambda_comfort == 5.0);
}

TEST_CASE("text and JSON forms agree") {
  const auto a = apply(parse_any("[simulate]\nn_zones = 3\n[select]\ncandidates = GP,ADABOOST_R2\n"));
  const auto b = apply(parse_any(R"({"simulate": {"n_zones": 3}, "select": {"candidates": ["GP", "ADABOOST_R2"]}})"));
  CHECK(a.to_text() == b.to_text());
  CHECK(a.hash() == b.hash());
}

TEST_CASE("canonical text round-trips and the hash tracks content") {
  RunConfig c;
  c.seed = 99;
  c.mpc.base_price = 0.2;
  c.hyper[regressors::RegressorKind::GRADIENT_BOOSTING]["n_rounds"] = 40;
  const auto back = apply(parse_text(c.to_text()));
  CHECK(back.to_text() == c.to_text());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  RunConfig d = c;
  d.seed = 100;
  CHECK(d.hash() != c.hash());
}

TEST_CASE("unknown or malformed entries are rejected") {
  CHECK_THROWS_WITH_AS(apply(parse_text("[nope]\na = 1\n")), doctest::Contains("unknown section [nope]"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(apply(parse_text("[run]\ncolour = 1\n")), doctest::Contains("unknown key run.colour"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(apply(parse_text("[regressor.GP]\ndepth = 1\n")), doctest::Contains("unknown hyperparameter"),
                       ValidationError);
  CHECK_THROWS_AS(apply(parse_text("[regressor.SVM]\nc = 1\n")), ValidationError);
  CHECK_THROWS_AS(apply(parse_text("[run]\nseed = -1\n")), ValidationError);
  CHECK_THROWS_AS(apply(parse_text("[run]\nseed = many\n")), ValidationError);
  CHECK_THROWS_WITH_AS(parse_text("seed = 1\n"), doctest::Contains("outside a section"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_text("[run]\nseed = 1\nseed = 2\n"), doctest::Contains("duplicate key"),
                       ValidationError);
  CHECK_THROWS_AS(parse_text("[run\n"), ValidationError);
  CHECK_THROWS_AS(parse_json("{\"run\": 3}"), ValidationError);
  CHECK_THROWS_AS(parse_json("{bad json"), ValidationError);
}

TEST_CASE("validate catches inconsistent values") {
  CHECK_THROWS_AS(apply(parse_text("[preprocess]\ntarget_step_seconds = 600\n")).validate(), ValidationError);
  CHECK_THROWS_AS(apply(parse_text("[mpc]\ntotal_hours = 50\n")).validate(), ValidationError);
  CHECK_THROWS_AS(apply(parse_text("[mpc]\nstart = 2022-07-12T00:30:00Z\n")).validate(), ValidationError);
  CHECK_THROWS_AS(apply(parse_text("[select]\nn_folds = 0\n")).validate(), ValidationError);
}

TEST_CASE("built-in tariff spikes in the configured window") {
  RunConfig c;
  const auto t = c.builtin_tariff();
  REQUIRE(t.prices.size() == 48);
  CHECK(t.start == make_utc(2022, 7, 12));
  for (int h = 0; h < 48; ++h) {
    const bool spike = h % 24 >= 12 && h % 24 < 16;
    CHECK(t.prices[h] == doctest::Approx(spike ? 0.30 : 0.15));
  }
  t.validate(24);
}
