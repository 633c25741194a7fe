#include "ccsim/solver.hpp"

#include "ccsim/lu.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <type_traits>

namespace ccsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

SystemMatrix assemble_linear(const Circuit& circuit, double t) {
  const Index n = circuit.dimension();
  SystemMatrix sys{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), circuit.node_count()};
  for (const auto& element : circuit.elements) {
    const StampContribution s = std::visit(
        overloaded{
            [](const ResistorElement& r) { return stamp_resistor(r.pos, r.neg, r.resistance); },
            [t](const VoltageSourceElement& v) {
              return stamp_vsource(v.pos, v.neg, v.branch, v.waveform.value_at(t));
            },
            [t](const CurrentSourceElement& i) {
              return stamp_isource(i.pos, i.neg, i.waveform.value_at(t));
            },
            [](const ConveyorElement& c) {
              return stamp_cccii_linear(c.y, c.x, c.z, c.branch, c.params);
            },
        },
        element);
    s.apply_to(sys.a, sys.b);
  }
  return sys;
}

bool has_clamp(const ConveyorElement& c) {
  return c.params.level == ModelLevel::parasitic && c.z != kGround;
}

double norm_inf(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace

Solution Solution::zeros(const Circuit& circuit, double t) {
  return Solution{Eigen::VectorXd::Zero(circuit.dimension()), circuit.node_count(), t, 0};
}

SystemMatrix assemble(const Circuit& circuit, double t, const Solution* guess) {
  SystemMatrix sys = assemble_linear(circuit, t);
  for (const auto& element : circuit.elements) {
    const auto* c = std::get_if<ConveyorElement>(&element);
    if (c == nullptr || !has_clamp(*c)) continue;
    const double v_z = guess != nullptr ? guess->voltage(c->z) : 0.0;
    stamp_clamp(c->z, v_z, c->params).apply_to(sys.a, sys.b);
  }
  return sys;
}

Eigen::VectorXd residual(const Circuit& circuit, double t, const Eigen::VectorXd& x) {
  const SystemMatrix lin = assemble_linear(circuit, t);
  Eigen::VectorXd f = lin.a * x - lin.b;
  for (const auto& element : circuit.elements) {
    const auto* c = std::get_if<ConveyorElement>(&element);
    if (c == nullptr || !has_clamp(*c)) continue;
    f(c->z) += eval_clamp(x(c->z), c->params).current;
  }
  return f;
}

Solution lu_solve(const SystemMatrix& system) {
  if (!system.a.allFinite() || !system.b.allFinite()) {
    throw SolverError(SolverError::Kind::singular_matrix, "system has non-finite entries");
  }
  const PartialPivotLu<double> lu(system.a);
  if (lu.info() != Eigen::Success) {
    std::ostringstream os;
    os << "singular matrix: pivot below threshold in column " << lu.failed_column()
       << " (floating node or unsolvable topology)";
    SolverError err(SolverError::Kind::singular_matrix, os.str());
    err.singular_column = lu.failed_column();
    throw err;
  }
  Eigen::VectorXd x = lu.solve(system.b);
  // One round of iterative refinement.
  const Eigen::VectorXd r = system.b - system.a * x;
  x += lu.solve(r);
  return Solution{std::move(x), system.node_count, 0.0, 0};
}

Solution newton_solve(const Circuit& circuit, double t, const Solution& init,
                      const NewtonOptions& opts) {
  Solution current = init;
  if (current.x.size() != circuit.dimension()) current = Solution::zeros(circuit, t);
  current.node_count = circuit.node_count();
  current.time = t;

  // A small residual alone does not pin the voltage of a weakly loaded
  // clamp node, so nonlinear circuits also require a converged update.
  bool nonlinear = false;
  for (const auto& element : circuit.elements) {
    const auto* c = std::get_if<ConveyorElement>(&element);
    nonlinear = nonlinear || (c != nullptr && has_clamp(*c));
  }

  double r_current = norm_inf(residual(circuit, t, current.x));
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const SystemMatrix sys = assemble(circuit, t, &current);
    Eigen::VectorXd next = lu_solve(sys).x;
    double r_next = norm_inf(residual(circuit, t, next));

    if (opts.damping && r_next > opts.abs_tol && r_next > r_current) {
      Eigen::VectorXd step = next - current.x;
      for (int halving = 0; halving < 8; ++halving) {
        step *= 0.5;
        next = current.x + step;
        r_next = norm_inf(residual(circuit, t, next));
        if (r_next < r_current) break;
      }
    }

    const double update = norm_inf(next - current.x);
    current.x = std::move(next);
    r_current = r_next;
    if (r_current <= opts.abs_tol && (!nonlinear || update <= opts.abs_tol)) {
      current.iterations = iter;
      return current;
    }
  }

  std::ostringstream os;
  os << "Newton did not converge in " << opts.max_iter << " iterations (residual " << r_current
     << ")";
  SolverError err(SolverError::Kind::no_convergence, os.str());
  err.iterations = opts.max_iter;
  err.last_residual = r_current;
  throw err;
}

std::size_t timepoint_count(double tstep, double tstop) {
  const double ratio = tstop / tstep;
  const double nearest = std::round(ratio);
  const double steps =
      std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio) ? nearest : std::floor(ratio);
  return static_cast<std::size_t>(steps) + 1;
}

std::vector<ElementPower> delivered_power(const Circuit& circuit, const Solution& s) {
  std::vector<ElementPower> out;
  for (const auto& element : circuit.elements) {
    std::visit(
        overloaded{
            [](const ResistorElement&) {},
            [&](const VoltageSourceElement& v) {
              const double volts = s.voltage(v.pos) - s.voltage(v.neg);
              out.push_back({v.name, true, -volts * s.branch_current(v.branch)});
            },
            [&](const CurrentSourceElement& i) {
              const double volts = s.voltage(i.pos) - s.voltage(i.neg);
              out.push_back({i.name, true, -volts * i.waveform.value_at(s.time)});
            },
            [&](const ConveyorElement& c) {
              // Port currents flow into the device; I_Y = 0.
              const double i_x = s.branch_current(c.branch);
              double absorbed = s.voltage(c.x) * i_x;
              if (c.z != kGround) {
                double i_z = c.params.sigma() * i_x;
                if (has_clamp(c)) i_z += eval_clamp(s.voltage(c.z), c.params).current;
                absorbed += s.voltage(c.z) * i_z;
              }
              out.push_back({c.name, false, -absorbed});
            },
        },
        element);
  }
  return out;
}

Waveform transient(const Circuit& circuit, double tstep, double tstop, const NewtonOptions& opts) {
  if (!(tstep > 0.0) || !(tstop >= tstep)) {
    throw std::invalid_argument("transient requires tstep > 0 and tstop >= tstep");
  }
  const std::size_t count = timepoint_count(tstep, tstop);

  Waveform w;
  w.node_index = circuit.node_index;
  for (const auto& element : circuit.elements) {
    if (const auto* v = std::get_if<VoltageSourceElement>(&element); v && v->waveform.sine) {
      w.sine_frequencies.push_back(v->waveform.sine->frequency);
    }
  }
  w.time.reserve(count);
  w.solutions.reserve(count);

  Solution previous = Solution::zeros(circuit);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * tstep;
    Solution s;
    try {
      s = newton_solve(circuit, t, previous, opts);
    } catch (SolverError& e) {
      std::ostringstream os;
      os << "at t=" << t << ": " << e.what();
      SolverError tagged(e.kind(), os.str());
      tagged.singular_column = e.singular_column;
      tagged.iterations = e.iterations;
      tagged.last_residual = e.last_residual;
      tagged.time = t;
      throw tagged;
    }

    const auto powers = delivered_power(circuit, s);
    if (w.power.empty()) {
      for (const auto& p : powers) w.power.push_back({p.element, p.independent, {}});
      for (auto& trace : w.power) trace.samples.reserve(count);
    }
    for (std::size_t i = 0; i < powers.size(); ++i) w.power[i].samples.push_back(powers[i].watts);

    w.time.push_back(t);
    previous = s;
    w.solutions.push_back(std::move(s));
  }
  return w;
}

Waveform operating_point(const Circuit& circuit, const NewtonOptions& opts) {
  Waveform w;
  w.node_index = circuit.node_index;
  Solution s = newton_solve(circuit, 0.0, Solution::zeros(circuit), opts);
  for (const auto& p : delivered_power(circuit, s)) {
    w.power.push_back({p.element, p.independent, {p.watts}});
  }
  w.time.push_back(0.0);
  w.solutions.push_back(std::move(s));
  return w;
}

}  // namespace ccsim
