#include <doctest.h>

#include <string>

#include "fgibbs/config.hpp"

using namespace fgibbs;

namespace {
ExperimentConfig parse(const std::string& text) {
  return parse_config_text(text, "test.cfg", nullptr);
}
ExperimentConfig parse_as(const std::string& text, ExperimentKind kind) {
  return parse_config_text(text, "test.cfg", &kind);
}
}  // namespace

TEST_CASE("config: defaults are valid for every experiment and hash distinctly") {
  std::vector<std::string> hashes;
  for (ExperimentKind kind : all_experiments()) {
    ExperimentConfig cfg = default_config(kind);
    CHECK_NOTHROW(validate_config(cfg));
    CHECK(cfg.canonical_text().rfind("experiment = ", 0) == 0);
    CHECK(cfg.hash().size() == 16);
    for (const auto& h : hashes) CHECK(h != cfg.hash());
    hashes.push_back(cfg.hash());
    // every schema key resolved, marked as a default
    for (const KeySpec& ks : config_schema(kind)) {
      REQUIRE(cfg.has(ks.key));
      CHECK(cfg.entry(ks.key).source == ConfigEntry::Source::Default);
    }
  }
}

TEST_CASE("config: minimal file loads with defaults recorded by provenance") {
  ExperimentConfig cfg = parse(
      "experiment = ground_state\n"
      "problem.d = 1\n"
      "problem.s = 1\n"
      "problem.p = 6\n");
  CHECK(cfg.kind == ExperimentKind::GroundState);
  CHECK(cfg.geti("problem.d") == 1);
  CHECK(cfg.getd("problem.p") == 6.0);
  CHECK(cfg.entry("problem.p").source == ConfigEntry::Source::File);
  CHECK(cfg.entry("problem.p").line == 4);
  // untouched keys keep their documented defaults
  CHECK(cfg.entry("solver.max_iter").source == ConfigEntry::Source::Default);
  CHECK(cfg.geti("solver.max_iter") == 5000);
  CHECK(cfg.getu("run.seed") == 12345);
}

TEST_CASE("config: unknown keys are hard errors naming the key and line") {
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nsmaples = 10\n"),
                       doctest::Contains("unknown key 'smaples'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nsmaples = 10\n"),
                       doctest::Contains(":2"), ConfigError);
  // a close miss is pointed at the intended key
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nmc.smaples = 10\n"),
                       doctest::Contains("did you mean 'mc.samples'"), ConfigError);
}

TEST_CASE("config: p = 2 is rejected citing the p > 2 precondition") {
  CHECK_THROWS_WITH_AS(parse("experiment = partition_ladder\nproblem.p = 2\n"),
                       doctest::Contains("p > 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = ground_state\nproblem.p = 2\n"),
                       doctest::Contains("p > 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = ground_state\nproblem.p = 2\n"),
                       doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("config: parse-level shape errors carry the offending line") {
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\njust words\n"),
                       doctest::Contains("expected 'key = value'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse("experiment = covariance\nmc.samples = 5\nmc.samples = 6\n"),
      doctest::Contains("duplicate key 'mc.samples'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nbad key! = 1\n"),
                       doctest::Contains("malformed key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("mc.samples = 5\n"),
                       doctest::Contains("must name the experiment"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = covarance\n"),
                       doctest::Contains("unknown experiment 'covarance'"), ConfigError);
}

TEST_CASE("config: comments, blank lines, and fraction values parse") {
  ExperimentConfig cfg = parse(
      "# an annotated configuration\n"
      "experiment = drift_divergence\n"
      "\n"
      "ladder.rho = 1/4, 1/8, 1/16, 1/32   # dyadic scales\n"
      "field.modes = 300\n"
      "drift.alpha = 1.2\n");
  auto rho = cfg.get_double_list("ladder.rho");
  REQUIRE(rho.size() == 4);
  CHECK(rho[0] == 0.25);
  CHECK(rho[3] == 0.03125);
  CHECK(cfg.getd("drift.alpha") == 1.2);
}

TEST_CASE("config: the subcommand kind is checked against the file") {
  ExperimentConfig cfg = parse_as("mc.samples = 50\n", ExperimentKind::Covariance);
  CHECK(cfg.kind == ExperimentKind::Covariance);
  CHECK(cfg.getu("mc.samples") == 50);
  CHECK_THROWS_WITH_AS(
      parse_as("experiment = covariance\n", ExperimentKind::PartitionLadder),
      doctest::Contains("but the subcommand is 'partition_ladder'"), ConfigError);
}

TEST_CASE("config: typed getters report the key and line on bad values") {
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nmc.samples = many\n"),
                       doctest::Contains("mc.samples"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nfield.modes = 12.5\n"),
                       doctest::Contains("expected an integer"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = covariance\nmc.samples = -4\n"),
                       doctest::Contains("nonnegative"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = ou_rates\nladder.M = 16,,32\n"),
                       doctest::Contains("ladder.M"), ConfigError);
}

TEST_CASE("config: command-line overrides re-validate and record provenance") {
  ExperimentConfig cfg = default_config(ExperimentKind::Covariance);
  std::string before = cfg.hash();
  apply_override(cfg, "run.seed", "99");
  CHECK(cfg.getu("run.seed") == 99);
  CHECK(cfg.entry("run.seed").source == ConfigEntry::Source::Flag);
  CHECK(cfg.hash() != before);
  apply_override(cfg, "run.workers", "0");  // stored unchecked; validation is a separate pass
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("[1, 64]"), ConfigError);
  apply_override(cfg, "run.workers", "2");
  CHECK_THROWS_WITH_AS(apply_override(cfg, "nope", "1"),
                       doctest::Contains("unknown key 'nope'"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_override(cfg, "experiment", "ou_rates"),
                       doctest::Contains("cannot be overridden"), ConfigError);
}

TEST_CASE("config: threshold scan demands the critical power") {
  CHECK_NOTHROW(parse("experiment = threshold_scan\nproblem.p = 6\n"));
  CHECK_THROWS_WITH_AS(parse("experiment = threshold_scan\nproblem.p = 6.5\n"),
                       doctest::Contains("critical power p = 4s/d + 2"), ConfigError);
  // s = 1.25 moves the critical power to 7
  CHECK_NOTHROW(parse("experiment = threshold_scan\nproblem.s = 1.25\nproblem.p = 7\n"));
}

TEST_CASE("config: drift experiment demands at least the critical power") {
  CHECK_NOTHROW(parse("experiment = drift_divergence\nproblem.p = 6\ncutoff.K = 4\n"));
  CHECK_THROWS_WITH_AS(parse("experiment = drift_divergence\nproblem.p = 5\n"),
                       doctest::Contains("p >= 4s/d + 2"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse("experiment = drift_divergence\nfield.law = massless_real\n"),
      doctest::Contains("complex laws"), ConfigError);
}

TEST_CASE("config: ladder shapes are checked against module preconditions") {
  CHECK_THROWS_WITH_AS(parse("experiment = partition_ladder\nladder.N = 16,32\n"),
                       doctest::Contains("at least 3 levels"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = partition_ladder\nladder.N = 16,32,32\n"),
                       doctest::Contains("strictly increasing"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = partition_ladder\nladder.N = 16,32,600\n"),
                       doctest::Contains("[1, 511]"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = ou_rates\nladder.M = 16,32,64\n"),
                       doctest::Contains("at least 4"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = ou_rates\nladder.M = 12,16,32,64\n"),
                       doctest::Contains("dyadic"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse("experiment = ou_rates\nladder.M = 16,32,64,128\nfield.modes = 64\n"),
      doctest::Contains("exceeds field.modes"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = drift_divergence\nladder.rho = 1/8,1/16,1/32,1/48\n"),
                       doctest::Contains("dyadic"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse("experiment = drift_divergence\nladder.rho = 1/8,1/16,1/32,1/256\n"),
      doctest::Contains("8 grid points"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse("experiment = drift_divergence\nladder.M = 8,16,32\n"),
      doctest::Contains("level for level"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("experiment = drift_divergence\ndrift.delta = 0.2\n"),
                       doctest::Contains("(0, 1/6)"), ConfigError);
}

TEST_CASE("config: canonical text round-trips through the parser") {
  ExperimentConfig cfg = parse(
      "experiment = ou_rates\n"
      "ladder.M = 8,16,32,64\n"
      "mc.samples = 17\n");
  ExperimentConfig back = parse(cfg.canonical_text());
  CHECK(back.kind == cfg.kind);
  CHECK(back.hash() == cfg.hash());
  CHECK(back.canonical_text() == cfg.canonical_text());
}
