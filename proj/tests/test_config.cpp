// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "weakprior/config.hpp"

using namespace weakprior;

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("number formatting round-trips and is plain") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1234567.0) == "1234567");
  CHECK(format_number(-2.5e-10) == "-2.5e-10");
  CHECK(format_number(1.0 / 0.0) == "inf");
  CHECK(format_number(-1.0 / 0.0) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");
  const double x = 0.30000000000000004;
  CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("csv table") {
  CsvTable t({"a", "b"});
  t.row({"1", "x,y"}).row({"say \"hi\"", "2"});
  CHECK(t.str() == "a,b\n1,\"x,y\"\n\"say \"\"hi\"\"\",2\n");
  CHECK_THROWS_AS(t.row({"1"}), InvalidArgument);
}

TEST_CASE("sections reject unknown keys and wrong types") {
  const Json j = Json::parse(R"({"tau": 0.1, "count": 3, "name": "w", "list": [1, 2]})");
  const Section s(j, "world", {"tau", "count", "name", "list"});
  CHECK(s.number("tau", 0.0) == 0.1);
  CHECK(s.count("count", 0) == 3);
  CHECK(s.count("absent", 7) == 7);
  CHECK(s.text("name", "") == "w");
  CHECK(s.numbers("list", {}) == std::vector<double>{1, 2});
  CHECK_THROWS_AS(s.count("tau", 0), ConfigError);
  CHECK_THROWS_AS(s.text("tau", ""), ConfigError);
  try {
    Section(j, "world", {"tau"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("world.count") != std::string::npos);
    CHECK(msg.find("valid keys: tau") != std::string::npos);
  }
  CHECK_THROWS_AS(Section(Json::array(), "x", {}), ConfigError);
}

TEST_CASE("descriptors build the documented objects") {
  Rng rng(1);
  const auto w = parse_world(Json::parse(R"({"preset": "failure", "components": 3})"), "world");
  CHECK(w.tau == WorldConfig::failure().tau);
  CHECK(w.components == 3);
  CHECK_THROWS_AS(parse_world(Json::parse(R"({"preset": "celeba"})"), "world"), ConfigError);
  CHECK_THROWS_AS(parse_world(Json::parse(R"({"tau": 0.3})"), "world"), ConfigError);

  const auto p = build_prior(
      Json::parse(R"({"type": "explicit", "weights": [1, 3], "means": [[0, 0], [1, 1]], "tau2": [0.1, 0.2]})"), "prior",
      rng);
  CHECK(p.prior.weight(1) == doctest::Approx(0.75));
  CHECK(p.prior.tau2(1) == 0.2);
  CHECK_FALSE(p.shape.has_value());
  CHECK_THROWS_AS(build_prior(Json::parse(R"({"type": "explicit", "weights": [1], "means": []})"), "prior", rng),
                  ConfigError);

  const auto img = build_prior(Json::parse(R"({"type": "image_world", "shape": [8, 8, 1], "components": 2})"),
                               "prior", rng);
  REQUIRE(img.shape.has_value());
  CHECK(img.prior.dim() == 64);
  CHECK(build_operator(Json::parse(R"({"kind": "block_average", "factor": 4})"), "op", 64, img.shape, rng)
            .output_dim() == 4);
  CHECK(build_operator(Json::parse(R"({"kind": "dense", "rows": 5})"), "op", 64, img.shape, rng).output_dim() == 5);
  CHECK(build_operator(Json::parse(R"({"kind": "dense", "matrix": [[1, 2]]})"), "op", 2, std::nullopt, rng)
            .to_dense()(0, 1) == 2.0);
  CHECK_THROWS_AS(build_operator(Json::parse(R"({"kind": "box_mask"})"), "op", 2, std::nullopt, rng), ConfigError);
  CHECK_THROWS_AS(build_operator(Json::parse(R"({"kind": "block_average", "factor": 3})"), "op", 64, img.shape, rng),
                  ConfigError);

  const auto sc = parse_solve_config(
      Json::parse(R"({"optimizer": {"learning_rate": 0.05, "retraction": "expmap"}, "holdout": {"k": 2}})"), "solver");
  CHECK(sc.optimizer.learning_rate == 0.05);
  CHECK(sc.optimizer.retraction == Retraction::ExpMap);
  CHECK(sc.holdout.k == 2);
  CHECK_THROWS_AS(parse_solve_config(Json::parse(R"({"holdout": {"fraction": 0.9}})"), "solver"), ConfigError);

  const auto b = parse_bench(Json::parse(R"({"worlds": 2, "tasks": [{"kind": "sr", "param": 4}]})"));
  CHECK(b.run.worlds == 2);
  REQUIRE(b.tasks.size() == 1);
  CHECK(b.tasks[0].label() == "sr_x4");
  CHECK_THROWS_AS(parse_failure_sweep(Json::parse(R"({"sr_factors": [3]})")), ConfigError);
}
