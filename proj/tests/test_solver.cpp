#include "catch_amalgamated.hpp"

#include "ccsim/experiments.hpp"
#include "ccsim/solver.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace ccsim;
using Catch::Approx;

namespace {

Circuit circuit_of(std::string_view text) { return validate(parse_netlist(text)); }

using test::max_abs;

double total_delivered(const Circuit& c, const Solution& s) {
  double p = 0.0;
  for (const auto& e : delivered_power(c, s)) p += e.watts;
  return p;
}

/// Solves a random circuit, or returns nullopt when the draw is singular.
std::optional<Solution> try_solve(const Circuit& c) {
  try {
    return newton_solve(c, 0.0, Solution::zeros(c));
  } catch (const SolverError& e) {
    if (e.kind() != SolverError::Kind::singular_matrix) throw;
    return std::nullopt;
  }
}

NetlistDocument scaled_sources(NetlistDocument doc, double k) {
  for (auto& e : doc.elements) {
    if (e.kind == ElementKind::vsource || e.kind == ElementKind::isource) e.params["DC"] *= k;
  }
  return doc;
}

AmplifierSpec fig6_spec() {
  AmplifierSpec spec;
  spec.r1 = kFig6.r1;
  spec.r2 = kFig6.r2;
  spec.cccii = calibrated_conveyor();
  return spec;
}

}  // namespace

TEST_CASE("assemble sizes the system from nodes and branches", "[solver]") {
  SECTION("source and resistor") {
    const Circuit c = circuit_of("V1 1 0 DC 1\nR1 1 0 1k\n.op\n.end\n");
    const SystemMatrix sys = assemble(c, 0.0);
    CHECK(sys.dimension() == 2);
    CHECK(sys.node_count == 1);
  }
  SECTION("proposed amplifier") {
    AmplifierSpec spec;
    spec.cccii.rx = ExplicitRx{0.0};
    const SystemMatrix sys = assemble(build_proposed_amplifier(spec), 0.0);
    // in, x, out plus the source and X-port branches.
    CHECK(sys.dimension() == 5);
    CHECK(sys.node_count == 3);
  }
}

TEST_CASE("a clamp inside its dead zone leaves the system unchanged", "[solver]") {
  AmplifierSpec spec = fig6_spec();
  const Circuit level2 = build_proposed_amplifier(spec);
  spec.cccii.level = ModelLevel::ideal;
  const Circuit level1 = build_proposed_amplifier(spec);

  Solution guess = Solution::zeros(level2);
  guess.x(*level2.find_node("out")) = 0.3;
  const SystemMatrix a = assemble(level2, 0.0, &guess);
  const SystemMatrix b = assemble(level1, 0.0, &guess);
  CHECK(a.a == b.a);
  CHECK(a.b == b.b);
}

TEST_CASE("lu_solve examples", "[solver]") {
  SECTION("identity") {
    SystemMatrix sys{Eigen::Matrix2d::Identity(), Eigen::Vector2d(1.0, 2.0), 2};
    const Solution s = lu_solve(sys);
    CHECK(s.x(0) == 1.0);
    CHECK(s.x(1) == 2.0);
  }
  SECTION("divider") {
    const Circuit c = circuit_of("V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k\n.op\n.end\n");
    const Solution s = lu_solve(assemble(c, 0.0));
    CHECK(s.voltage(*c.find_node("2")) == Approx(0.5).margin(1e-12));
    CHECK(s.branch_current(2) == Approx(-0.5e-3).margin(1e-15));
  }
  SECTION("floating resistor is singular") {
    Circuit c;
    c.node_names = {"1", "2"};
    c.node_index = {{"1", 0}, {"2", 1}};
    c.elements.push_back(ResistorElement{"R1", 0, 1, 1e3});
    try {
      lu_solve(assemble(c, 0.0));
      FAIL("expected a singular matrix");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverError::Kind::singular_matrix);
      CHECK(e.singular_column == 1);
    }
    CHECK_THROWS_AS(newton_solve(c, 0.0, Solution::zeros(c)), SolverError);
  }
  SECTION("parallel voltage sources are singular") {
    const Circuit c = circuit_of("V1 1 0 DC 1\nV2 1 0 DC 2\nR1 1 0 1k\n.op\n.end\n");
    CHECK_THROWS_AS(lu_solve(assemble(c, 0.0)), SolverError);
  }
}

TEST_CASE("linear circuits converge in one Newton iteration", "[solver]") {
  std::mt19937_64 rng(41);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Circuit c = validate(test::random_linear_circuit(rng));
    const auto s = try_solve(c);
    if (!s) continue;
    ++solved;
    CHECK(s->iterations == 1);
    const Solution direct = lu_solve(assemble(c, 0.0));
    CHECK(max_abs(s->x - direct.x) <= 1e-12 * std::max(1.0, max_abs(direct.x)));
  }
  CHECK(solved > 150);
}

TEST_CASE("solutions satisfy every element equation", "[solver][property]") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    const Circuit c = validate(test::random_linear_circuit(rng));
    const auto s = try_solve(c);
    if (!s) continue;
    CHECK(test::element_imbalance(c, *s) <= 1e-9);
    CHECK(max_abs(residual(c, 0.0, s->x)) <= 1e-9);
  }
}

TEST_CASE("linearity and superposition", "[solver][property]") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const NetlistDocument doc = test::random_linear_circuit(rng);
    const Circuit c = validate(doc);
    const auto full = try_solve(c);
    if (!full) continue;
    const double tol = 1e-9 * std::max(1.0, max_abs(full->x));

    const double k = scale(rng);
    const Circuit scaled = validate(scaled_sources(doc, k));
    CHECK(max_abs(newton_solve(scaled, 0.0, Solution::zeros(scaled)).x - k * full->x) <= tol * 3);

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(full->x.size());
    for (std::size_t keep = 0; keep < doc.elements.size(); ++keep) {
      const ElementKind kind = doc.elements[keep].kind;
      if (kind != ElementKind::vsource && kind != ElementKind::isource) continue;
      NetlistDocument only = doc;
      for (std::size_t i = 0; i < only.elements.size(); ++i) {
        auto& e = only.elements[i];
        if (i != keep && (e.kind == ElementKind::vsource || e.kind == ElementKind::isource)) {
          e.params["DC"] = 0.0;
        }
      }
      const Circuit part = validate(only);
      sum += newton_solve(part, 0.0, Solution::zeros(part)).x;
    }
    CHECK(max_abs(sum - full->x) <= tol * 10);
  }
}

TEST_CASE("delivered power equals resistor dissipation", "[solver][property]") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 300; ++trial) {
    const Circuit c = validate(test::random_linear_circuit(rng));
    const auto s = try_solve(c);
    if (!s) continue;
    const double dissipated = test::resistor_dissipation(c, *s);
    CHECK(std::abs(total_delivered(c, *s) - dissipated) <= 1e-9 * std::max(1e-3, dissipated));
  }
}

TEST_CASE("ladder node voltages halve at every rung", "[solver]") {
  // R-2R ladder terminated in 2R: every rung sees R_eq = 2R to ground.
  std::string text = "V1 n0 0 DC 1\n";
  const int rungs = 8;
  for (int k = 0; k < rungs; ++k) {
    text += "RS" + std::to_string(k) + " n" + std::to_string(k) + " n" + std::to_string(k + 1) +
            " 1k\n";
    text += "RP" + std::to_string(k) + " n" + std::to_string(k + 1) + " 0 2k\n";
  }
  text += "RT n" + std::to_string(rungs) + " 0 2k\n.op\n.end\n";
  // Node n_{k+1} sits behind RS_k into an effective 1k to ground.
  const Circuit c = circuit_of(text);
  const Solution s = newton_solve(c, 0.0, Solution::zeros(c));
  double expected = 1.0;
  for (int k = 1; k <= rungs; ++k) {
    expected *= 0.5;
    CHECK(s.voltage(*c.find_node("n" + std::to_string(k))) == Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("clamped amplifier stays near the rails", "[solver]") {
  const AmplifierSpec spec = fig6_spec();
  const Circuit c = build_proposed_amplifier(spec);
  const Index out = *c.find_node("out");
  const double peak = 0.25e-3;  // quarter period of the 1 kHz input
  const Solution s = newton_solve(c, peak, Solution::zeros(c, peak));
  CHECK(s.iterations > 1);
  CHECK(s.voltage(out) <= spec.cccii.vdd + kClampBand);
  CHECK(s.voltage(out) >= spec.cccii.vdd - kClampBand);
  CHECK(max_abs(residual(c, peak, s.x)) <= 1e-9);
  CHECK(test::element_imbalance(c, s) <= 1e-9);

  const Solution trough = newton_solve(c, 0.75e-3, s);
  CHECK(trough.voltage(out) >= spec.cccii.vss - kClampBand);
  CHECK(trough.voltage(out) <= spec.cccii.vss + kClampBand);
}

TEST_CASE("Newton reports non-convergence with the last residual", "[solver]") {
  const Circuit c = build_proposed_amplifier(fig6_spec());
  NewtonOptions opts;
  opts.max_iter = 1;
  try {
    newton_solve(c, 0.25e-3, Solution::zeros(c, 0.25e-3), opts);
    FAIL("expected no convergence");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::no_convergence);
    CHECK(e.iterations == 1);
    CHECK(e.last_residual > opts.abs_tol);
  }
}

TEST_CASE("transient timepoints", "[solver]") {
  CHECK(timepoint_count(0.1, 1.0) == 11);
  CHECK(timepoint_count(20e-6, 1e-3) == 51);
  CHECK(timepoint_count(20e-6, 5e-3) == 251);
  CHECK(timepoint_count(0.3, 1.0) == 4);
  CHECK(timepoint_count(1.0, 1.0) == 2);
  CHECK_THROWS(transient(circuit_of("V1 1 0 DC 1\nR1 1 0 1k\n.op\n.end\n"), 0.0, 1.0));

  SECTION("DC source gives identical points") {
    const Circuit c = circuit_of("V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k\n.tran 0.1 1\n.end\n");
    const Waveform w = transient(c, 0.1, 1.0);
    REQUIRE(w.size() == 11);
    for (const auto& s : w.solutions) CHECK(s.x == w.solutions.front().x);
    CHECK(w.solutions.back().time == Approx(1.0));
  }
  SECTION("sine source is sampled at k * tstep") {
    const Circuit c = circuit_of("V1 1 0 SIN(0 50m 1k)\nR1 1 0 1k\n.tran 20u 1m\n.end\n");
    const Waveform w = transient(c, 20e-6, 1e-3);
    REQUIRE(w.size() == 51);
    REQUIRE(w.sine_frequencies == std::vector<double>{1e3});
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double t = static_cast<double>(k) * 20e-6;
      CHECK(w.time[k] == t);
      CHECK(w.solutions[k].voltage(0) ==
            Approx(0.05 * std::sin(2.0 * std::numbers::pi * 1e3 * t)).margin(1e-15));
    }
  }
}

TEST_CASE("warm starts do not change transient results", "[solver][property]") {
  const Circuit c = build_proposed_amplifier(fig6_spec());
  const Waveform w = transient(c, 20e-6, 2e-3);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const Solution cold = newton_solve(c, w.time[k], Solution::zeros(c, w.time[k]));
    CHECK(max_abs(cold.x - w.solutions[k].x) <= 1e-9);
  }
}

TEST_CASE("transient errors carry the failing time", "[solver]") {
  const Circuit c = circuit_of("V1 1 0 DC 1\nV2 1 0 DC 2\nR1 1 0 1k\n.tran 1 2\n.end\n");
  try {
    transient(c, 1.0, 2.0);
    FAIL("expected a singular matrix");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::singular_matrix);
    REQUIRE(e.time.has_value());
    CHECK(*e.time == 0.0);
    CHECK(std::string(e.what()).find("t=0") != std::string::npos);
  }
}

TEST_CASE("operating point reports source power", "[solver]") {
  const Circuit c = circuit_of("V1 1 0 DC 1\nR1 1 0 1k\n.op\n.end\n");
  const Waveform w = operating_point(c);
  REQUIRE(w.size() == 1);
  REQUIRE(w.power.size() == 1);
  CHECK(w.power[0].element == "V1");
  CHECK(w.power[0].samples[0] == Approx(1e-3).epsilon(1e-12));
}
