#pragma once

#include "ccsim/netlist.hpp"
#include "ccsim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ccsim::test {

inline std::vector<std::filesystem::path> fixtures(const std::string& subdir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(
           std::filesystem::path(CCSIM_FIXTURE_DIR) / subdir)) {
    if (entry.path().extension() == ".cir") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Error line encoded in malformed fixture names as `_line<N>`.
inline int expected_line(const std::filesystem::path& p) {
  const std::string stem = p.stem().string();
  const auto pos = stem.rfind("_line");
  return pos == std::string::npos ? -1 : std::stoi(stem.substr(pos + 5));
}

/// Random structurally valid document (not necessarily solvable).
inline NetlistDocument random_document(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 8);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<int> node(0, 5);
  std::uniform_real_distribution<double> mantissa(1.0, 10.0);
  std::uniform_int_distribution<int> exponent(-12, 9);
  std::bernoulli_distribution coin(0.5);
  const auto value = [&] { return mantissa(rng) * std::pow(10.0, exponent(rng)); };
  const auto label = [&] {
    const int n = node(rng);
    return n == 0 ? std::string("0") : "n" + std::to_string(n);
  };

  NetlistDocument doc;
  if (coin(rng)) doc.title = "random netlist";
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    ElementDecl e;
    switch (kind(rng)) {
      case 0:
        e = {ElementKind::resistor, "R" + std::to_string(i), {label(), label()}, {{"R", value()}}};
        break;
      case 1:
        e = {ElementKind::vsource, "V" + std::to_string(i), {label(), label()}, {}};
        if (coin(rng)) {
          e.params["DC"] = coin(rng) ? value() : -value();
        } else {
          e.params = {{"OFFSET", value()}, {"AMPLITUDE", value()}, {"FREQ", value()}};
        }
        break;
      case 2:
        e = {ElementKind::isource, "I" + std::to_string(i), {label(), label()}, {{"DC", -value()}}};
        break;
      default: {
        e = {ElementKind::cccii, "X" + std::to_string(i), {label(), label(), label()}, {}};
        e.params["POLARITY"] = coin(rng) ? 1.0 : -1.0;
        if (coin(rng)) {
          e.params["RX"] = value();
        } else {
          e.params["IB"] = value();
          e.params["BETA"] = value();
        }
        if (coin(rng)) e.params["LEVEL"] = coin(rng) ? 1.0 : 2.0;
        if (coin(rng)) {
          e.params["VDD"] = value();
          e.params["VSS"] = -value();
        }
      }
    }
    doc.elements.push_back(std::move(e));
  }
  if (coin(rng)) doc.directives.push_back({DirectiveKind::op});
  if (coin(rng)) {
    const double step = value();
    doc.directives.push_back({DirectiveKind::tran, step, step * 100.0});
  }
  if (coin(rng)) doc.directives.push_back({DirectiveKind::measure, 0, 0, MeasureKind::power, {}});
  if (coin(rng)) {
    doc.directives.push_back({DirectiveKind::measure, 0, 0, MeasureKind::gain, {label(), label()}});
  }
  if (coin(rng)) doc.directives.push_back({DirectiveKind::measure, 0, 0, MeasureKind::vpp, {label()}});
  return doc;
}

/// Random connected network of resistors, DC sources and level-1 conveyors.
/// Every node has a resistive path to ground, voltage sources only drive
/// distinct nodes against ground and conveyor X ports avoid driven nodes, so
/// most draws are solvable; conveyor chains can still form singular loops.
inline NetlistDocument random_linear_circuit(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> node_count(2, 7);
  std::uniform_real_distribution<double> ohms(100.0, 100e3);
  std::uniform_real_distribution<double> volts(-1.0, 1.0);
  std::uniform_real_distribution<double> amps(-1e-3, 1e-3);
  std::uniform_real_distribution<double> rx(0.0, 5e3);
  std::uniform_int_distribution<int> few(0, 2);
  std::bernoulli_distribution coin(0.5);

  const int n = node_count(rng);
  const auto name = [](int k) { return k == 0 ? std::string("0") : "n" + std::to_string(k); };
  const auto pick = [&](int lo) { return std::uniform_int_distribution<int>(lo, n)(rng); };

  NetlistDocument doc;
  int serial = 0;
  const auto add = [&](ElementKind kind, char prefix, std::vector<std::string> nodes,
                       std::map<std::string, double> params) {
    doc.elements.push_back(
        {kind, prefix + std::to_string(++serial), std::move(nodes), std::move(params)});
  };

  for (int k = 1; k <= n; ++k) {
    const int to = std::uniform_int_distribution<int>(0, k - 1)(rng);
    add(ElementKind::resistor, 'R', {name(k), name(to)}, {{"R", ohms(rng)}});
  }
  for (int i = few(rng) + 1; i > 0; --i) {
    const int a = pick(0), b = pick(0);
    if (a != b) add(ElementKind::resistor, 'R', {name(a), name(b)}, {{"R", ohms(rng)}});
  }

  std::vector<int> driven;
  for (int i = few(rng) + 1; i > 0; --i) {
    const int k = pick(1);
    if (std::find(driven.begin(), driven.end(), k) != driven.end()) continue;
    driven.push_back(k);
    add(ElementKind::vsource, 'V', {name(k), "0"}, {{"DC", volts(rng)}});
  }
  for (int i = few(rng); i > 0; --i) {
    const int a = pick(0), b = pick(0);
    if (a != b) add(ElementKind::isource, 'I', {name(a), name(b)}, {{"DC", amps(rng)}});
  }
  for (int i = few(rng); i > 0; --i) {
    const int x = pick(1), y = pick(0), z = pick(0);
    if (x == y || std::find(driven.begin(), driven.end(), x) != driven.end()) continue;
    driven.push_back(x);
    add(ElementKind::cccii, 'X', {name(y), name(x), name(z)},
        {{"POLARITY", coin(rng) ? 1.0 : -1.0}, {"RX", rx(rng)}});
  }
  doc.directives.push_back({DirectiveKind::op});
  return doc;
}

inline double max_abs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

/// Worst KCL / constraint violation recomputed element by element, without
/// going through the stamps.
inline double element_imbalance(const Circuit& c, const Solution& s) {
  Eigen::VectorXd leaving = Eigen::VectorXd::Zero(c.node_count());
  double constraint = 0.0;
  const auto out = [&](Index node, double amps) {
    if (node != kGround) leaving(node) += amps;
  };
  for (const auto& e : c.elements) {
    if (const auto* r = std::get_if<ResistorElement>(&e)) {
      const double i = (s.voltage(r->pos) - s.voltage(r->neg)) / r->resistance;
      out(r->pos, i);
      out(r->neg, -i);
    } else if (const auto* v = std::get_if<VoltageSourceElement>(&e)) {
      const double i = s.branch_current(v->branch);
      out(v->pos, i);
      out(v->neg, -i);
      constraint = std::max(constraint, std::abs(s.voltage(v->pos) - s.voltage(v->neg) -
                                                 v->waveform.value_at(s.time)));
    } else if (const auto* is = std::get_if<CurrentSourceElement>(&e)) {
      const double i = is->waveform.value_at(s.time);
      out(is->pos, i);
      out(is->neg, -i);
    } else if (const auto* x = std::get_if<ConveyorElement>(&e)) {
      const double i_x = s.branch_current(x->branch);
      out(x->x, i_x);
      double i_z = x->params.sigma() * i_x;
      if (x->params.level == ModelLevel::parasitic && x->z != kGround) {
        i_z += eval_clamp(s.voltage(x->z), x->params).current;
      }
      out(x->z, i_z);
      constraint = std::max(constraint, std::abs(s.voltage(x->x) - s.voltage(x->y) -
                                                 x->params.rx_ohms() * i_x));
    }
  }
  return std::max(max_abs(leaving), constraint);
}

inline double resistor_dissipation(const Circuit& c, const Solution& s) {
  double p = 0.0;
  for (const auto& e : c.elements) {
    if (const auto* r = std::get_if<ResistorElement>(&e)) {
      const double v = s.voltage(r->pos) - s.voltage(r->neg);
      p += v * v / r->resistance;
    }
  }
  return p;
}

}  // namespace ccsim::test
