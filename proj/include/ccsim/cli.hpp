#pragma once

#include "ccsim/netlist.hpp"
#include "ccsim/report.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace ccsim::cli {

enum class OutputFormat { csv, table };

struct SweepSpec {
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int points = 2;
  bool log = false;
};

struct RunConfig {
  OutputFormat format = OutputFormat::csv;
  /// When set, the node's `time,value` samples are written instead of
  /// the measurement rows.
  std::optional<std::string> dump_node;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 1;   // parse, validation, usage, unknown names
inline constexpr int solver_error = 2;  // singular system, no convergence
}  // namespace exit_code

class UnknownParameter : public Error {
 public:
  using Error::Error;
};

/// Sweep points from `from` to `to` inclusive, linear or logarithmic.
std::vector<double> sweep_values(const SweepSpec& sweep);

/// Sets the value addressed by `key` in a copy of `doc`. Keys are an element
/// name (R value, DC value, or sine amplitude), `ELEMENT.PARAM`, or a bare
/// parameter name held by exactly one element. Throws UnknownParameter.
NetlistDocument with_parameter(const NetlistDocument& doc, std::string_view key, double value);

/// Runs the directives of an already parsed document.
int run_document(const NetlistDocument& doc, std::string_view name, const RunConfig& config,
                 std::ostream& out, std::ostream& err);

int run_file(const std::string& path, const RunConfig& config, std::ostream& out,
             std::ostream& err);

int run_experiment(std::string_view name, const RunConfig& config, std::ostream& out,
                   std::ostream& err);

/// `base` is a netlist path or a named circuit (see named_netlist).
int run_sweep(std::string_view base, const SweepSpec& sweep, const RunConfig& config,
              std::ostream& out, std::ostream& err);

/// Parses arguments and dispatches; returns the process exit status.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ccsim::cli
