#include "ccsim/cli.hpp"

#include "ccsim/experiments.hpp"
#include "ccsim/measure.hpp"
#include "ccsim/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ccsim::cli {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void write_rows(std::ostream& out, const std::vector<ResultRow>& rows, OutputFormat format) {
  if (format == OutputFormat::table) {
    write_table(out, rows);
  } else {
    write_csv(out, rows);
  }
}

void write_waveform(std::ostream& out, const Waveform& w, const std::string& node) {
  const auto trace = node_trace(w, node);
  out << "time,value\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << format_number(w.time[i]) << ',' << format_number(trace[i]) << '\n';
  }
}

std::string metric_label(const Directive& d) {
  switch (d.metric) {
    case MeasureKind::vpp:
      return "vpp(" + d.nodes.at(0) + ")";
    case MeasureKind::gain:
      return "gain(" + d.nodes.at(0) + ":" + d.nodes.at(1) + ")";
    case MeasureKind::power:
      return "power";
  }
  return "";
}

struct Evaluation {
  std::vector<ResultRow> rows;
  std::optional<Waveform> last;  // tran if run, else op
};

/// Thrown by evaluate() so the caller can name the failing analysis.
struct AnalysisFailure {
  std::string analysis;
  SolverError error;
};

/// Runs .op then .tran, then every .measure against the last waveform.
/// `param`/`value` fill the corresponding CSV columns.
Evaluation evaluate(const NetlistDocument& doc, const Circuit& circuit, const std::string& name,
                    const std::string& param, const std::string& value) {
  Evaluation ev;
  auto add = [&](std::string metric, double result, std::string unit) {
    ev.rows.push_back({name, param, value, std::move(metric), format_number(result),
                       std::move(unit)});
  };

  const bool has_op = std::any_of(doc.directives.begin(), doc.directives.end(),
                                  [](const Directive& d) { return d.kind == DirectiveKind::op; });
  const Directive* tran = doc.tran();

  if (has_op || tran == nullptr) {
    Waveform op;
    try {
      op = operating_point(circuit);
    } catch (const SolverError& e) {
      throw AnalysisFailure{"operating-point", e};
    }
    if (has_op) {
      for (Index i = 0; i < circuit.node_count(); ++i) {
        add("v(" + circuit.node_names[static_cast<std::size_t>(i)] + ")",
            op.solutions.front().voltage(i), "V");
      }
      for (const auto& element : circuit.elements) {
        if (const auto* v = std::get_if<VoltageSourceElement>(&element)) {
          add("i(" + v->name + ")", op.solutions.front().branch_current(v->branch), "A");
        } else if (const auto* c = std::get_if<ConveyorElement>(&element)) {
          add("i(" + c->name + ".x)", op.solutions.front().branch_current(c->branch), "A");
        }
      }
    }
    ev.last = std::move(op);
  }
  if (tran != nullptr) {
    try {
      ev.last = transient(circuit, tran->tstep, tran->tstop);
    } catch (const SolverError& e) {
      throw AnalysisFailure{"transient", e};
    }
  }

  for (const auto& d : doc.directives) {
    if (d.kind != DirectiveKind::measure) continue;
    const Measurement m = measure(*ev.last, d);
    if (d.metric == MeasureKind::power) {
      add("power_avg", m.values.at(0), "W");
      add("power_peak", m.values.at(1), "W");
    } else {
      add(metric_label(d), m.values.at(0), d.metric == MeasureKind::vpp ? "V" : "");
    }
  }
  return ev;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<double> sweep_values(const SweepSpec& sweep) {
  if (sweep.points < 2) throw std::invalid_argument("a sweep needs at least 2 points");
  if (!std::isfinite(sweep.from) || !std::isfinite(sweep.to)) {
    throw std::invalid_argument("sweep bounds must be finite");
  }
  if (sweep.log && !(sweep.from > 0.0 && sweep.to > 0.0)) {
    throw std::invalid_argument("log sweeps need positive bounds");
  }
  std::vector<double> values;
  const double n = static_cast<double>(sweep.points - 1);
  for (int i = 0; i < sweep.points; ++i) {
    const double f = static_cast<double>(i) / n;
    if (i == sweep.points - 1) {
      values.push_back(sweep.to);
    } else if (sweep.log) {
      values.push_back(sweep.from * std::pow(sweep.to / sweep.from, f));
    } else {
      values.push_back(sweep.from + (sweep.to - sweep.from) * f);
    }
  }
  return values;
}

NetlistDocument with_parameter(const NetlistDocument& doc, std::string_view key, double value) {
  NetlistDocument out = doc;
  const auto dot = key.find('.');
  if (dot != std::string_view::npos) {
    ElementDecl* e = out.find_element(key.substr(0, dot));
    const std::string param = upper(key.substr(dot + 1));
    if (e == nullptr || !e->params.contains(param)) {
      throw UnknownParameter("unknown parameter '" + std::string(key) + "'");
    }
    e->params[param] = value;
    return out;
  }

  if (ElementDecl* e = out.find_element(key)) {
    for (const char* p : {"R", "DC", "AMPLITUDE"}) {
      if (e->params.contains(p)) {
        e->params[p] = value;
        return out;
      }
    }
    throw UnknownParameter("element '" + std::string(key) +
                           "' has no primary value; use ELEMENT.PARAM");
  }

  const std::string param = upper(key);
  ElementDecl* match = nullptr;
  for (auto& e : out.elements) {
    if (e.params.contains(param) && param != "POLARITY") {
      if (match != nullptr) {
        throw UnknownParameter("parameter '" + std::string(key) +
                               "' is ambiguous; use ELEMENT.PARAM");
      }
      match = &e;
    }
  }
  if (match == nullptr) throw UnknownParameter("unknown parameter '" + std::string(key) + "'");
  match->params[param] = value;
  return out;
}

int run_document(const NetlistDocument& doc, std::string_view name, const RunConfig& config,
                 std::ostream& out, std::ostream& err) {
  const std::string label(name);
  try {
    const Circuit circuit = validate(doc);
    Evaluation ev = evaluate(doc, circuit, label, "", "");
    if (config.dump_node) {
      write_waveform(out, *ev.last, *config.dump_node);
    } else {
      write_rows(out, ev.rows, config.format);
    }
    return exit_code::ok;
  } catch (const ValidationError& e) {
    err << label << ": " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const AnalysisFailure& f) {
    err << label << ": " << f.analysis << " analysis failed: " << f.error.what() << '\n';
    return exit_code::solver_error;
  } catch (const MeasureError& e) {
    err << label << ": measurement failed: " << e.what() << '\n';
    return exit_code::input_error;
  }
}

int run_file(const std::string& path, const RunConfig& config, std::ostream& out,
             std::ostream& err) {
  const auto text = read_file(path);
  if (!text) {
    err << path << ": cannot read file\n";
    return exit_code::input_error;
  }
  NetlistDocument doc;
  try {
    doc = parse_netlist(*text);
  } catch (const ParseError& e) {
    err << path << ':' << e.line() << ": error: " << e.reason() << '\n';
    return exit_code::input_error;
  }
  return run_document(doc, std::filesystem::path(path).stem().string(), config, out, err);
}

int run_experiment(std::string_view name, const RunConfig& config, std::ostream& out,
                   std::ostream& err) {
  try {
    if (config.dump_node) {
      const auto doc = named_netlist(name);
      if (!doc) {
        err << "experiment '" << name << "' has no single circuit to dump\n";
        return exit_code::input_error;
      }
      return run_document(*doc, name, config, out, err);
    }
    const ReproductionReport report = ccsim::run_experiment(name);
    write_rows(out, to_rows(report), config.format);
    return exit_code::ok;
  } catch (const ExperimentError& e) {
    err << e.what() << '\n';
    return exit_code::input_error;
  } catch (const SolverError& e) {
    err << "experiment " << name << ": " << e.what() << '\n';
    return exit_code::solver_error;
  }
}

int run_sweep(std::string_view base, const SweepSpec& sweep, const RunConfig& config,
              std::ostream& out, std::ostream& err) {
  const std::string base_name(base);
  NetlistDocument doc;
  std::string label = base_name;
  if (auto named = named_netlist(base)) {
    doc = std::move(*named);
  } else {
    const auto text = read_file(base_name);
    if (!text) {
      err << base << ": neither a named circuit nor a readable netlist\n";
      return exit_code::input_error;
    }
    try {
      doc = parse_netlist(*text);
    } catch (const ParseError& e) {
      err << base << ':' << e.line() << ": error: " << e.reason() << '\n';
      return exit_code::input_error;
    }
    label = std::filesystem::path(base_name).stem().string();
  }

  std::vector<double> values;
  try {
    values = sweep_values(sweep);
    with_parameter(doc, sweep.param, values.front());
  } catch (const UnknownParameter& e) {
    err << label << ": " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const std::invalid_argument& e) {
    err << label << ": " << e.what() << '\n';
    return exit_code::input_error;
  }

  std::vector<ResultRow> rows;
  for (double v : values) {
    const NetlistDocument point = with_parameter(doc, sweep.param, v);
    try {
      const Circuit circuit = validate(point);
      auto ev = evaluate(point, circuit, label, sweep.param, format_number(v));
      std::move(ev.rows.begin(), ev.rows.end(), std::back_inserter(rows));
    } catch (const ValidationError& e) {
      err << label << " at " << sweep.param << '=' << format_number(v) << ": " << e.what() << '\n';
      return exit_code::input_error;
    } catch (const AnalysisFailure& f) {
      err << label << " at " << sweep.param << '=' << format_number(v) << ": " << f.analysis
          << " analysis failed: " << f.error.what() << '\n';
      return exit_code::solver_error;
    } catch (const MeasureError& e) {
      err << label << " at " << sweep.param << '=' << format_number(v)
          << ": measurement failed: " << e.what() << '\n';
      return exit_code::input_error;
    }
  }
  write_rows(out, rows, config.format);
  return exit_code::ok;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Behavioral current-conveyor circuit simulator"};
  app.require_subcommand(1);

  std::string format = "csv";
  std::string out_path;
  std::string dump_node;
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"csv", "table"}))
      ->capture_default_str();
  app.add_option("--out", out_path, "Write results to this file instead of stdout");
  app.add_option("--dump-waveform", dump_node, "Emit time,value samples of a node");

  std::string run_path;
  auto* run_cmd = app.add_subcommand("run", "Run a netlist file");
  run_cmd->add_option("file", run_path, "Netlist path")->required();

  std::string experiment;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a named reproduction experiment");
  exp_cmd->add_option("name", experiment, "fig6 | fig7 | fig8 | table2 | ferri | all")->required();

  std::string sweep_base;
  std::string from_text;
  std::string to_text;
  SweepSpec sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter of a netlist or named circuit");
  sweep_cmd->add_option("base", sweep_base, "Netlist path or named circuit")->required();
  sweep_cmd->add_option("--param", sweep.param, "ELEMENT, ELEMENT.PARAM or PARAM")->required();
  sweep_cmd->add_option("--from", from_text, "Start value (SI suffixes allowed)")->required();
  sweep_cmd->add_option("--to", to_text, "Stop value (SI suffixes allowed)")->required();
  sweep_cmd->add_option("--points", sweep.points, "Number of points (>= 2)")->required();
  sweep_cmd->add_flag("--log", sweep.log, "Logarithmic spacing");

  for (auto* sub : {run_cmd, exp_cmd, sweep_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::input_error;
  }

  RunConfig config;
  config.format = format == "table" ? OutputFormat::table : OutputFormat::csv;
  if (!dump_node.empty()) config.dump_node = dump_node;

  std::ofstream file;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) {
      err << out_path << ": cannot open for writing\n";
      return exit_code::input_error;
    }
    sink = &file;
  }

  if (*run_cmd) return run_file(run_path, config, *sink, err);
  if (*exp_cmd) return run_experiment(experiment, config, *sink, err);

  const auto from = parse_number(from_text);
  const auto to = parse_number(to_text);
  if (!from || !to) {
    err << "sweep: --from/--to must be numbers\n";
    return exit_code::input_error;
  }
  sweep.from = *from;
  sweep.to = *to;
  return run_sweep(sweep_base, sweep, config, *sink, err);
}

}  // namespace ccsim::cli
