#pragma once

#include "ccsim/devices.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ccsim {

// ---------------------------------------------------------------------------
// Parsed document
// ---------------------------------------------------------------------------

enum class ElementKind { resistor, vsource, isource, cccii };

/// One element line. Numeric parameters are stored in SI units under fixed
/// upper-case keys:
///   resistor  R
///   vsource   DC | OFFSET AMPLITUDE FREQ
///   isource   DC
///   cccii     POLARITY (+1/-1), RX | IB BETA, LEVEL, VDD, VSS
/// Optional keys are present only when written in the source text.
struct ElementDecl {
  ElementKind kind;
  std::string name;
  std::vector<std::string> nodes;
  std::map<std::string, double> params;

  bool operator==(const ElementDecl&) const = default;
};

enum class DirectiveKind { tran, op, measure };

enum class MeasureKind { vpp, gain, power };

struct Directive {
  DirectiveKind kind;
  double tstep = 0.0;  // tran
  double tstop = 0.0;  // tran
  MeasureKind metric = MeasureKind::vpp;  // measure
  std::vector<std::string> nodes;         // measure: vpp(n) -> {n}; gain(a,b) -> {a,b}

  bool operator==(const Directive&) const = default;
};

/// `.end` is implied: the parser requires it and the serializer always emits it.
struct NetlistDocument {
  std::optional<std::string> title;
  std::vector<ElementDecl> elements;
  std::vector<Directive> directives;

  bool operator==(const NetlistDocument&) const = default;

  const Directive* tran() const;
  const ElementDecl* find_element(std::string_view name) const;
  ElementDecl* find_element(std::string_view name);
};

class ParseError : public Error {
 public:
  enum class Kind { syntax, duplicate_name, unknown_element_kind, missing_end };

  ParseError(Kind kind, int line, std::string reason);

  Kind kind() const noexcept { return kind_; }
  /// 1-based source line; 0 when the error is not tied to one line.
  int line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  Kind kind_;
  int line_;
  std::string reason_;
};

/// Parses the netlist dialect. Never aborts: malformed input raises a
/// ParseError carrying the offending line.
NetlistDocument parse_netlist(std::string_view text);

/// Numeric literal with optional SPICE scale suffix (f p n u m k meg g,
/// case-insensitive). Returns nullopt when the token is not a finite number.
std::optional<double> parse_number(std::string_view token);

/// Canonical text form: one line per element/directive, numbers in shortest
/// round-trip scientific notation, terminated by `.end`.
std::string serialize(const NetlistDocument& doc);

// ---------------------------------------------------------------------------
// Validated circuit
// ---------------------------------------------------------------------------

inline constexpr std::string_view kGroundLabel = "0";

struct ResistorElement {
  std::string name;
  Index pos;
  Index neg;
  double resistance;
  bool operator==(const ResistorElement&) const = default;
};

struct VoltageSourceElement {
  std::string name;
  Index pos;
  Index neg;
  Index branch;  // absolute row of the branch current
  SourceWaveform waveform;
  bool operator==(const VoltageSourceElement&) const = default;
};

struct CurrentSourceElement {
  std::string name;
  Index pos;
  Index neg;
  SourceWaveform waveform;
  bool operator==(const CurrentSourceElement&) const = default;
};

struct ConveyorElement {
  std::string name;
  Index y;
  Index x;
  Index z;  // kGround when Z is grounded or left floating
  Index branch;  // absolute row of i_x
  CcciiParams params;
  bool operator==(const ConveyorElement&) const = default;
};

using Element =
    std::variant<ResistorElement, VoltageSourceElement, CurrentSourceElement, ConveyorElement>;

/// Node-indexed circuit ready for assembly. Unknown vector layout is
/// [node voltages (node_count)..., branch currents (branch_count)...].
struct Circuit {
  std::map<std::string, Index> node_index;
  std::vector<std::string> node_names;  // index -> label
  /// Conveyor Z terminals touching nothing else; removed from the system.
  std::vector<std::string> floating_nodes;
  std::vector<Element> elements;
  Index branch_count = 0;

  Index node_count() const { return static_cast<Index>(node_names.size()); }
  Index dimension() const { return node_count() + branch_count; }

  /// kGround for "0"; nullopt for labels that are not solved for.
  std::optional<Index> find_node(std::string_view label) const;

  bool operator==(const Circuit&) const = default;
};

class ValidationError : public Error {
 public:
  enum class Kind { dangling_node, no_ground_reference, invalid_element };

  ValidationError(Kind kind, std::string subject, const std::string& what)
      : Error(what), kind_(kind), subject_(std::move(subject)) {}

  Kind kind() const noexcept { return kind_; }
  /// Node or element name the error refers to.
  const std::string& subject() const noexcept { return subject_; }

 private:
  Kind kind_;
  std::string subject_;
};

/// Resolves node labels, allocates branch unknowns (one per voltage source,
/// one per conveyor X port) and checks that the network is solvable.
Circuit validate(const NetlistDocument& doc);

/// Resolved conveyor parameters of a `cccii` declaration.
CcciiParams cccii_params(const ElementDecl& decl);

/// Resolved waveform of a source declaration.
SourceWaveform source_waveform(const ElementDecl& decl);

}  // namespace ccsim
