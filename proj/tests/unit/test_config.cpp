#include <doctest.h>

#include <sstream>

#include "plaque/config.hpp"
#include "plaque/errors.hpp"

using namespace plaque;

namespace {

SimConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_CASE("empty input gives the channel experiment defaults") {
  const SimConfig c = parse("");
  CHECK(c == SimConfig{});
  CHECK(c.half_length == 5.0);
  CHECK(c.half_height == 2.0);
  CHECK(c.density == 1.0);
  CHECK(c.viscosity == 0.04);
  CHECK(c.sigma0 == 30.0);
  CHECK(c.u0 == 0.0);
  CHECK(c.inflow_amplitude == 20.0);
  CHECK(c.epsilon == 2e-4);
  CHECK(c.horizon == 4.8e4);
  CHECK(c.steps_per_period() == 32);
  CHECK(c.macro_steps() == 24);
  CHECK(2 * c.nx * c.ny == 426);
}

TEST_CASE("single assignments") {
  SimConfig expected;
  expected.epsilon = 1e-4;
  CHECK(parse("epsilon = 1e-4\n") == expected);

  const SimConfig c = parse("# comment\n dt = 1/64   # trailing\n\nflow = zero\nsnapshots = 100, 200\n");
  CHECK(c.steps_per_period() == 64);
  CHECK(c.flow == FlowModel::zero);
  CHECK(c.snapshot_times == std::vector<double>{100.0, 200.0});
}

TEST_CASE("invalid input") {
  CHECK_THROWS_AS(parse("dt = 0.3\n"), InvariantViolation);
  CHECK_THROWS_AS(parse("dT = 0.5\n"), InvariantViolation);
  CHECK_THROWS_AS(parse("nu = -1\n"), InvariantViolation);
  CHECK_THROWS_AS(parse("u0 = 2.5\n"), InvariantViolation);
  CHECK_THROWS_AS(parse("colour = red\n"), UnknownKey);
  try {
    parse("a = 5\n\nthis line is wrong\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse("nx = 7.5\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(parse("dt = 1/0\n"), ParseError);
  CHECK_THROWS_AS(parse("verify_periodicity = maybe\n"), ParseError);
}

TEST_CASE("serialization round trip") {
  SimConfig c;
  c.nx = 13;
  c.epsilon = 3e-3;
  c.dt = 1.0 / 48.0;
  c.flow = FlowModel::zero;
  c.verify_periodicity = true;
  c.snapshot_times = {0.5, 1e3};
  c.output_dir = "results/a";
  std::ostringstream out;
  write_config(c, out);
  CHECK(parse(out.str()) == c);

  // every key appears once, in order
  std::istringstream lines(out.str());
  std::string line;
  std::size_t k = 0;
  while (std::getline(lines, line)) {
    REQUIRE(k < config_keys().size());
    CHECK(line.rfind(config_keys()[k] + " = ", 0) == 0);
    ++k;
  }
  CHECK(k == config_keys().size());
}

TEST_CASE("derived quantities") {
  SimConfig c;
  c.u0 = 0.5;
  c.flow = FlowModel::pulsatile;
  const FlowParams p = c.flow_params();
  REQUIRE(p.inflow);
  CHECK(p.inflow(0.5, 0.0) == doctest::Approx(20.0));
  CHECK(p.inflow(0.5, 2.0) == doctest::Approx(0.0));
  CHECK(p.inflow(1.5, 1.0) == doctest::Approx(p.inflow(0.5, 1.0)));
  c.flow = FlowModel::zero;
  CHECK_FALSE(c.flow_params().inflow);
  const SolverOptions o = c.solver_options();
  CHECK(o.picard_tolerance == 1e-9);
  CHECK(o.max_picard_iterations == 50);
}
