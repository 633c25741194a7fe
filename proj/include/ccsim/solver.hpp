#pragma once

#include "ccsim/netlist.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ccsim {

/// Dense MNA system A x = b.
struct SystemMatrix {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  /// Leading unknowns that are node voltages; the rest are branch currents.
  Index node_count = 0;

  Index dimension() const { return a.rows(); }
};

/// Unknown vector at one timepoint. Ground is implicit (0 V) and not stored.
struct Solution {
  Eigen::VectorXd x;
  Index node_count = 0;
  double time = 0.0;
  int iterations = 0;

  static Solution zeros(const Circuit& circuit, double t = 0.0);

  double voltage(Index node) const { return node == kGround ? 0.0 : x(node); }
  /// `row` is the absolute branch row stored on the element.
  double branch_current(Index row) const { return x(row); }
};

struct NewtonOptions {
  double abs_tol = 1e-9;
  int max_iter = 50;
  bool damping = true;
};

class SolverError : public Error {
 public:
  enum class Kind { singular_matrix, no_convergence };

  SolverError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

  Index singular_column = -1;
  int iterations = 0;
  double last_residual = 0.0;
  std::optional<double> time;

 private:
  Kind kind_;
};

/// Power delivered by one active element (positive = delivered to the rest
/// of the circuit), sampled at every timepoint.
struct PowerTrace {
  std::string element;
  bool independent = true;  // false for conveyor ports
  std::vector<double> samples;
};

struct Waveform {
  std::vector<double> time;
  std::vector<Solution> solutions;
  std::vector<PowerTrace> power;
  std::map<std::string, Index> node_index;
  /// Frequencies of sine sources, used to align measurement windows.
  std::vector<double> sine_frequencies;

  std::size_t size() const { return time.size(); }
};

/// Sums every device stamp at time `t`. Level-2 clamps are linearized about
/// `guess` (zeros when omitted).
SystemMatrix assemble(const Circuit& circuit, double t, const Solution* guess = nullptr);

/// Full nonlinear residual f(x) = A_lin x - b + clamp currents. Rows are KCL
/// (A) for nodes and constraint equations (V) for branches.
Eigen::VectorXd residual(const Circuit& circuit, double t, const Eigen::VectorXd& x);

/// Solves the system by LU with partial pivoting.
/// Throws SolverError(singular_matrix) when a pivot is below 1e-13 * ||A||_inf.
Solution lu_solve(const SystemMatrix& system);

/// Newton-Raphson on the companion-linearized system. Converged when the
/// residual is within abs_tol and, for circuits with clamps, the last update
/// is too. Linear circuits take exactly one iteration.
Solution newton_solve(const Circuit& circuit, double t, const Solution& init,
                      const NewtonOptions& opts = {});

/// Quasi-static sweep over t = 0, tstep, ..., tstop with warm starts.
Waveform transient(const Circuit& circuit, double tstep, double tstop,
                   const NewtonOptions& opts = {});

/// Operating point as a one-sample waveform at t = 0.
Waveform operating_point(const Circuit& circuit, const NewtonOptions& opts = {});

struct ElementPower {
  std::string element;
  bool independent;
  double watts;
};

/// Power delivered by each active element (sources and conveyors) at one
/// solution, in element order.
std::vector<ElementPower> delivered_power(const Circuit& circuit, const Solution& s);

/// Number of timepoints for a run: tstop / tstep rounded to the nearest
/// integer when within 1e-9 relative, otherwise floored; plus one.
std::size_t timepoint_count(double tstep, double tstop);

}  // namespace ccsim
