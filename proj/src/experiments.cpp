#include "ccsim/experiments.hpp"

#include "ccsim/solver.hpp"

#include <algorithm>
#include <cmath>

namespace ccsim {

namespace {

ElementDecl resistor_decl(std::string name, std::string a, std::string b, double r) {
  return {ElementKind::resistor, std::move(name), {std::move(a), std::move(b)}, {{"R", r}}};
}

ElementDecl sine_decl(std::string name, std::string a, std::string b, const SineInput& in) {
  return {ElementKind::vsource,
          std::move(name),
          {std::move(a), std::move(b)},
          {{"OFFSET", in.offset}, {"AMPLITUDE", in.amplitude}, {"FREQ", in.frequency}}};
}

void add_analysis(NetlistDocument& doc, const RunSettings& run) {
  doc.directives.push_back({DirectiveKind::tran, run.tstep, run.tstop, MeasureKind::vpp, {}});
  const std::string in(kInputNode);
  const std::string out(kOutputNode);
  doc.directives.push_back({DirectiveKind::measure, 0, 0, MeasureKind::gain, {in, out}});
  doc.directives.push_back({DirectiveKind::measure, 0, 0, MeasureKind::vpp, {out}});
  doc.directives.push_back({DirectiveKind::measure, 0, 0, MeasureKind::power, {}});
}

void check_positive(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw ExperimentError(ExperimentError::Kind::invalid_spec,
                          std::string(what) + " must be positive and finite");
  }
}

ReproductionRow figure_row(const FigureReference& ref, const RunSettings& run) {
  const SineInput input{0.0, ref.vpp_in / 2.0, 1e3};

  AmplifierSpec spec{ref.r1, ref.r2, input, CcciiParams{}};
  const Waveform ideal = transient(build_proposed_amplifier(spec), run.tstep, run.tstop);

  spec.cccii = calibrated_conveyor();
  const Waveform w = transient(build_proposed_amplifier(spec), run.tstep, run.tstop);

  ReproductionRow row;
  row.name = std::string(ref.name);
  row.r1 = ref.r1;
  row.r2 = ref.r2;
  row.level = spec.cccii.level;
  row.rx = spec.cccii.rx_ohms();
  row.vpp_in = vpp(w, kInputNode);
  row.measured_vpp_out = vpp(w, kOutputNode);
  row.predicted_vpp_out = std::min(ref.r2 / (ref.r1 + row.rx) * ref.vpp_in,
                                   spec.cccii.vdd - spec.cccii.vss);
  row.published_vpp_out = ref.vpp_out;
  row.deviation = (row.measured_vpp_out - ref.vpp_out) / ref.vpp_out;
  row.ideal_gain = gain_pp(ideal, kInputNode, kOutputNode);
  return row;
}

struct TuningConfig {
  const char* name;
  double r1;
  double r2;
};

constexpr TuningConfig kTuningConfigs[] = {
    {"table2_case1", 10e3, 1e3},
    {"table2_case2", 1e3, 100e3},
    {"table2_case3", 5e3, 5e3},
};

std::vector<ReproductionRow> tuning_rows(const RunSettings& run) {
  const double rx = calibrated_rx();
  std::vector<ReproductionRow> rows;
  for (const auto& cfg : kTuningConfigs) {
    AmplifierSpec spec{cfg.r1, cfg.r2, SineInput{}, CcciiParams{}};
    spec.cccii.rx = ExplicitRx{rx};
    const Waveform w = transient(build_proposed_amplifier(spec), run.tstep, run.tstop);

    ReproductionRow row;
    row.name = cfg.name;
    row.r1 = cfg.r1;
    row.r2 = cfg.r2;
    row.level = ModelLevel::ideal;
    row.rx = rx;
    row.vpp_in = vpp(w, kInputNode);
    row.measured_vpp_out = vpp(w, kOutputNode);
    row.tuning = classify_tuning(cfg.r1, cfg.r2, rx);
    row.predicted_vpp_out = row.tuning->predicted_gain * 2.0 * spec.input.amplitude;
    rows.push_back(std::move(row));
  }
  return rows;
}

ReproductionRow ferri_row(const RunSettings& run) {
  constexpr double r1 = 1e3;
  constexpr double r2 = 10e3;
  const SineInput input;
  const Waveform w = transient(build_ferri_amplifier(r1, r2, input), run.tstep, run.tstop);

  ReproductionRow row;
  row.name = "ferri";
  row.r1 = r1;
  row.r2 = r2;
  row.level = ModelLevel::ideal;
  row.vpp_in = vpp(w, kInputNode);
  row.measured_vpp_out = vpp(w, kOutputNode);
  row.predicted_vpp_out = r2 / r1 * 2.0 * input.amplitude;
  row.ideal_gain = gain_pp(w, kInputNode, kOutputNode);
  return row;
}

}  // namespace

ElementDecl conveyor_decl(std::string name, std::string y, std::string x, std::string z,
                          const CcciiParams& params) {
  params.check();
  ElementDecl decl{ElementKind::cccii, std::move(name), {std::move(y), std::move(x), std::move(z)},
                   {}};
  decl.params["POLARITY"] = params.sigma();
  if (const auto* e = std::get_if<ExplicitRx>(&params.rx)) {
    decl.params["RX"] = e->ohms;
  } else {
    const auto& b = std::get<BiasedRx>(params.rx);
    decl.params["IB"] = b.i_b;
    decl.params["BETA"] = b.process.beta_n();
  }
  decl.params["LEVEL"] = static_cast<double>(params.level);
  decl.params["VDD"] = params.vdd;
  decl.params["VSS"] = params.vss;
  return decl;
}

NetlistDocument proposed_amplifier_netlist(const AmplifierSpec& spec, const RunSettings& run) {
  check_positive(spec.r1, "r1");
  check_positive(spec.r2, "r2");
  if (!(spec.input.amplitude > 0.0)) {
    throw ExperimentError(ExperimentError::Kind::invalid_spec, "input amplitude must be positive");
  }
  const std::string in(kInputNode);
  const std::string out(kOutputNode);
  NetlistDocument doc;
  doc.title = "single-conveyor tunable voltage amplifier";
  doc.elements = {
      sine_decl("VIN", in, "0", spec.input),
      conveyor_decl("XCC", in, "x", out, spec.cccii),
      resistor_decl("R1", "x", "0", spec.r1),
      resistor_decl("R2", out, "0", spec.r2),
  };
  add_analysis(doc, run);
  return doc;
}

Circuit build_proposed_amplifier(const AmplifierSpec& spec) {
  return validate(proposed_amplifier_netlist(spec));
}

NetlistDocument ferri_amplifier_netlist(double r1, double r2, const SineInput& input,
                                        const CcciiParams& conveyor, const RunSettings& run) {
  check_positive(r1, "r1");
  check_positive(r2, "r2");
  const std::string in(kInputNode);
  const std::string out(kOutputNode);
  NetlistDocument doc;
  doc.title = "two-conveyor voltage amplifier";
  doc.elements = {
      sine_decl("VIN", in, "0", input),
      conveyor_decl("XA", in, "xa", "za", conveyor),
      resistor_decl("R1", "xa", "xb", r1),
      conveyor_decl("XB", "0", "xb", out, conveyor),
      resistor_decl("R2", out, "0", r2),
  };
  add_analysis(doc, run);
  return doc;
}

Circuit build_ferri_amplifier(double r1, double r2, const SineInput& input,
                              const CcciiParams& conveyor) {
  return validate(ferri_amplifier_netlist(r1, r2, input, conveyor));
}

double calibrate_rx(double gain_measured, double r1, double r2) {
  check_positive(r1, "r1");
  check_positive(r2, "r2");
  if (!(gain_measured > 0.0) || !(gain_measured < r2 / r1)) {
    throw ExperimentError(ExperimentError::Kind::gain_out_of_range,
                          "measured gain must lie in (0, r2/r1)");
  }
  const double rx = r2 / gain_measured - r1;
  if (!(rx > 0.0)) {
    throw ExperimentError(ExperimentError::Kind::gain_out_of_range,
                          "measured gain implies a non-positive R_X");
  }
  return rx;
}

double calibrated_rx() { return calibrate_rx(kFig8.vpp_out / kFig8.vpp_in, kFig8.r1, kFig8.r2); }

CcciiParams calibrated_conveyor() {
  CcciiParams p;
  p.level = ModelLevel::parasitic;
  p.rx = ExplicitRx{calibrated_rx()};
  p.vdd = 0.5;
  p.vss = -0.5;
  return p;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"fig6", "fig7", "fig8", "table2", "ferri"};
  return names;
}

ReproductionReport run_experiment(std::string_view name, const RunSettings& run) {
  ReproductionReport report;
  if (name == "fig6") {
    report.rows.push_back(figure_row(kFig6, run));
  } else if (name == "fig7") {
    report.rows.push_back(figure_row(kFig7, run));
  } else if (name == "fig8") {
    report.rows.push_back(figure_row(kFig8, run));
  } else if (name == "table2") {
    report.rows = tuning_rows(run);
  } else if (name == "ferri") {
    report.rows.push_back(ferri_row(run));
  } else if (name == "all") {
    return run_reproduction(run);
  } else {
    throw ExperimentError(ExperimentError::Kind::unknown_experiment,
                          "unknown experiment '" + std::string(name) + "'");
  }
  return report;
}

ReproductionReport run_reproduction(const RunSettings& run) {
  ReproductionReport report;
  for (const auto& name : experiment_names()) {
    auto part = run_experiment(name, run);
    std::move(part.rows.begin(), part.rows.end(), std::back_inserter(report.rows));
  }
  return report;
}

std::optional<NetlistDocument> named_netlist(std::string_view name, const RunSettings& run) {
  const auto figure = [&](const FigureReference& ref) {
    AmplifierSpec spec{ref.r1, ref.r2, SineInput{0.0, ref.vpp_in / 2.0, 1e3},
                       calibrated_conveyor()};
    return proposed_amplifier_netlist(spec, run);
  };
  if (name == "proposed") return proposed_amplifier_netlist(AmplifierSpec{}, run);
  if (name == "fig6") return figure(kFig6);
  if (name == "fig7") return figure(kFig7);
  if (name == "fig8") return figure(kFig8);
  if (name == "ferri") return ferri_amplifier_netlist(1e3, 10e3, SineInput{}, CcciiParams{}, run);
  return std::nullopt;
}

}  // namespace ccsim
