#pragma once

#include "ccsim/devices.hpp"
#include "ccsim/measure.hpp"
#include "ccsim/netlist.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccsim {

class ExperimentError : public Error {
 public:
  enum class Kind { gain_out_of_range, unknown_experiment, invalid_spec };

  ExperimentError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct SineInput {
  double offset = 0.0;
  double amplitude = 0.05;  // 100 mVpp
  double frequency = 1e3;
};

/// Transient settings shared by all reproduction runs. The circuits are
/// frequency-flat, so the exact values only fix determinism.
struct RunSettings {
  double tstep = 20e-6;
  double tstop = 5e-3;
};

/// Single-conveyor amplifier: sine input at Y, R1 from X to ground, R2 from
/// Z to ground, output read at Z. Gain r2 / (r1 + R_X) for a plus-type
/// conveyor.
struct AmplifierSpec {
  double r1 = 1e3;
  double r2 = 100e3;
  SineInput input;
  CcciiParams cccii;
};

/// Node labels used by the builders.
inline constexpr std::string_view kInputNode = "in";
inline constexpr std::string_view kOutputNode = "out";

ElementDecl conveyor_decl(std::string name, std::string y, std::string x, std::string z,
                          const CcciiParams& params);

/// Netlist of the proposed amplifier, including `.tran` and the gain, vpp
/// and power measurements.
NetlistDocument proposed_amplifier_netlist(const AmplifierSpec& spec, const RunSettings& run = {});
Circuit build_proposed_amplifier(const AmplifierSpec& spec);

/// Two-conveyor comparison amplifier. Conveyor XA (Y = in) forces the input
/// across R1, whose current enters the X port of XB (Y grounded, a current
/// follower); XB mirrors it into R2 at the output. XA's Z port is unused and
/// floats. With plus-type conveyors the output is inverted, |gain| = r2/r1
/// for ideal conveyors.
NetlistDocument ferri_amplifier_netlist(double r1, double r2, const SineInput& input = {},
                                        const CcciiParams& conveyor = {},
                                        const RunSettings& run = {});
Circuit build_ferri_amplifier(double r1, double r2, const SineInput& input = {},
                              const CcciiParams& conveyor = {});

/// R_X that makes r2 / (r1 + R_X) equal the measured gain.
/// Throws ExperimentError(gain_out_of_range) unless 0 < gain < r2/r1.
double calibrate_rx(double gain_measured, double r1, double r2);

/// Published amplifier measurements (input 100 mVpp in every case).
struct FigureReference {
  std::string_view name;
  double r1;
  double r2;
  double vpp_in;
  double vpp_out;
};

inline constexpr FigureReference kFig6{"fig6", 1e3, 100e3, 0.1, 1.0};
inline constexpr FigureReference kFig7{"fig7", 2e3, 50e3, 0.1, 0.8};
inline constexpr FigureReference kFig8{"fig8", 8e3, 15e3, 0.1, 0.13};

/// R_X fitted to the kFig8 measurement (about 3538 ohm).
double calibrated_rx();

/// Level-2 conveyor with the calibrated R_X and +/-0.5 V rails.
CcciiParams calibrated_conveyor();

struct ReproductionRow {
  std::string name;
  double r1 = 0.0;
  double r2 = 0.0;
  ModelLevel level = ModelLevel::ideal;
  double rx = 0.0;
  double vpp_in = 0.0;             // measured at the input node
  double measured_vpp_out = 0.0;   // from the transient run
  double predicted_vpp_out = 0.0;  // closed form (rail-limited at level 2)
  std::optional<double> published_vpp_out;
  /// (measured - published) / published
  std::optional<double> deviation;
  /// Simulated level-1 gain of the same R1/R2 with R_X = 0.
  std::optional<double> ideal_gain;
  std::optional<TuningCase> tuning;
};

struct ReproductionReport {
  std::vector<ReproductionRow> rows;
};

/// Experiment names accepted by run_experiment, in `all` order.
const std::vector<std::string>& experiment_names();

/// fig6 | fig7 | fig8 | table2 | ferri | all.
ReproductionReport run_experiment(std::string_view name, const RunSettings& run = {});

/// Every experiment, in deterministic order.
ReproductionReport run_reproduction(const RunSettings& run = {});

/// Base netlists usable by sweeps and waveform dumps: proposed (ideal,
/// R1 = 1k, R2 = 100k), fig6 | fig7 | fig8 (calibrated level 2), ferri.
std::optional<NetlistDocument> named_netlist(std::string_view name, const RunSettings& run = {});

}  // namespace ccsim
