#include "ccsim/measure.hpp"

#include <algorithm>
#include <cmath>

namespace ccsim {

namespace {

double time_tolerance(const Waveform& w) {
  return 1e-9 * std::max({std::abs(w.time.front()), std::abs(w.time.back()), 1e-30});
}

/// Indices [first, last] of the samples inside the window.
std::pair<std::size_t, std::size_t> window_range(const Waveform& w, const TimeWindow& win) {
  if (w.size() == 0) throw MeasureError(MeasureError::Kind::empty_window, "waveform is empty");
  const double tol = time_tolerance(w);
  if (!(win.start <= win.stop) || win.start < w.time.front() - tol ||
      win.stop > w.time.back() + tol) {
    throw MeasureError(MeasureError::Kind::empty_window, "window outside the waveform span");
  }
  auto lo = std::lower_bound(w.time.begin(), w.time.end(), win.start - tol);
  auto hi = std::upper_bound(w.time.begin(), w.time.end(), win.stop + tol);
  if (lo >= hi) throw MeasureError(MeasureError::Kind::empty_window, "window holds no samples");
  return {static_cast<std::size_t>(lo - w.time.begin()),
          static_cast<std::size_t>(hi - w.time.begin()) - 1};
}

}  // namespace

TimeWindow default_window(const Waveform& w) {
  if (w.size() == 0) throw MeasureError(MeasureError::Kind::empty_window, "waveform is empty");
  const double t0 = w.time.front();
  const double t1 = w.time.back();
  double span = (t1 - t0) / 2.0;
  if (w.sine_frequencies.size() == 1 && w.sine_frequencies.front() > 0.0) {
    const double f = w.sine_frequencies.front();
    const double periods = std::floor(span * f + 1e-9);
    if (periods >= 1.0) span = periods / f;
  }
  return {t1 - span, t1};
}

std::vector<double> node_trace(const Waveform& w, std::string_view node) {
  if (node == kGroundLabel) return std::vector<double>(w.size(), 0.0);
  auto it = w.node_index.find(std::string(node));
  if (it == w.node_index.end()) {
    throw MeasureError(MeasureError::Kind::unknown_node, "unknown node '" + std::string(node) + "'");
  }
  std::vector<double> out;
  out.reserve(w.size());
  for (const auto& s : w.solutions) out.push_back(s.voltage(it->second));
  return out;
}

double vpp(const Waveform& w, std::string_view node, std::optional<TimeWindow> window) {
  const auto trace = node_trace(w, node);
  const auto [first, last] = window_range(w, window.value_or(default_window(w)));
  const auto [mn, mx] = std::minmax_element(trace.begin() + static_cast<std::ptrdiff_t>(first),
                                            trace.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  return *mx - *mn;
}

double gain_pp(const Waveform& w, std::string_view in_node, std::string_view out_node,
               std::optional<TimeWindow> window) {
  const double v_in = vpp(w, in_node, window);
  if (!(v_in > 0.0)) {
    throw MeasureError(MeasureError::Kind::zero_input,
                       "input node '" + std::string(in_node) + "' has zero peak-to-peak swing");
  }
  return vpp(w, out_node, window) / v_in;
}

PowerSummary source_power(const Waveform& w, std::optional<TimeWindow> window) {
  if (w.power.empty()) {
    throw MeasureError(MeasureError::Kind::no_sources, "circuit has no power sources");
  }
  const TimeWindow win = window.value_or(default_window(w));
  const auto [first, last] = window_range(w, win);

  std::vector<double> total(last - first + 1, 0.0);
  for (const auto& trace : w.power) {
    for (std::size_t i = first; i <= last; ++i) total[i - first] += trace.samples[i];
  }

  double peak = 0.0;
  for (double p : total) peak = std::max(peak, std::abs(p));

  double average = total.front();
  if (last > first) {
    double integral = 0.0;
    for (std::size_t i = first; i < last; ++i) {
      integral += 0.5 * (total[i - first] + total[i - first + 1]) * (w.time[i + 1] - w.time[i]);
    }
    average = integral / (w.time[last] - w.time[first]);
  }
  return {average, peak, win};
}

Measurement measure(const Waveform& w, const Directive& d) {
  const TimeWindow win = default_window(w);
  switch (d.metric) {
    case MeasureKind::vpp:
      return {d.metric, {vpp(w, d.nodes.at(0), win)}, win};
    case MeasureKind::gain:
      return {d.metric, {gain_pp(w, d.nodes.at(0), d.nodes.at(1), win)}, win};
    case MeasureKind::power: {
      const PowerSummary p = source_power(w, win);
      return {d.metric, {p.average, p.peak}, win};
    }
  }
  return {d.metric, {}, win};
}

TuningCase classify_tuning(double r1, double r2, double r_x) {
  if (!(r1 > 0.0) || !(r2 > 0.0) || !(r_x >= 0.0) || !std::isfinite(r1) || !std::isfinite(r2) ||
      !std::isfinite(r_x)) {
    throw MeasureError(MeasureError::Kind::non_positive_resistance,
                       "classify_tuning requires r1 > 0, r2 > 0, r_x >= 0");
  }
  TuningCase c;
  if (r1 > r2) {
    c.label = TuningLabel::case_i;
  } else if (r2 > r1) {
    c.label = TuningLabel::case_ii;
  } else {
    c.label = TuningLabel::case_iii;
  }
  c.predicted_gain = r2 / (r1 + r_x);
  c.behavior = c.predicted_gain > 1.0 ? TuningBehavior::amplifies : TuningBehavior::attenuates;
  return c;
}

std::string_view to_string(TuningLabel label) {
  switch (label) {
    case TuningLabel::case_i:
      return "CaseI";
    case TuningLabel::case_ii:
      return "CaseII";
    case TuningLabel::case_iii:
      return "CaseIII";
  }
  return "?";
}

std::string_view to_string(TuningBehavior behavior) {
  return behavior == TuningBehavior::amplifies ? "amplifies" : "attenuates";
}

}  // namespace ccsim
