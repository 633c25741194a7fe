#pragma once

#include "ccsim/netlist.hpp"
#include "ccsim/solver.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccsim {

class MeasureError : public Error {
 public:
  enum class Kind { unknown_node, empty_window, zero_input, no_sources, non_positive_resistance };

  MeasureError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct TimeWindow {
  double start;
  double stop;
};

/// Trailing half of the run. With exactly one sine source the span is cut
/// down to a whole number of periods (when at least one fits).
TimeWindow default_window(const Waveform& w);

/// Voltage samples of `node` ("0" yields zeros).
std::vector<double> node_trace(const Waveform& w, std::string_view node);

/// max - min of the node voltage over the window.
double vpp(const Waveform& w, std::string_view node, std::optional<TimeWindow> window = {});

/// vpp(out) / vpp(in) over the same window.
double gain_pp(const Waveform& w, std::string_view in_node, std::string_view out_node,
               std::optional<TimeWindow> window = {});

struct PowerSummary {
  double average;  // W, time average (trapezoidal) over the window
  double peak;     // W, max |p(t)|
  TimeWindow window;
};

/// Total delivered power of all active elements (independent sources and
/// conveyor ports), delivery-positive.
PowerSummary source_power(const Waveform& w, std::optional<TimeWindow> window = {});

struct Measurement {
  MeasureKind kind;
  std::vector<double> values;  // vpp: {V}; gain: {ratio}; power: {average W, peak W}
  TimeWindow window;
};

/// Evaluates one `.measure` directive against a waveform.
Measurement measure(const Waveform& w, const Directive& directive);

enum class TuningLabel { case_i, case_ii, case_iii };
enum class TuningBehavior { attenuates, amplifies };

struct TuningCase {
  TuningLabel label;
  double predicted_gain;  // r2 / (r1 + r_x)
  TuningBehavior behavior;
};

/// Tuning regime of the proposed amplifier: the label comes from the R1/R2
/// ordering alone; the behavior from the parasitic gain r2 / (r1 + r_x).
TuningCase classify_tuning(double r1, double r2, double r_x);

std::string_view to_string(TuningLabel label);
std::string_view to_string(TuningBehavior behavior);

}  // namespace ccsim
