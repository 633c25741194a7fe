#include "ccsim/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

namespace ccsim {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_punct(char c) { return c == '(' || c == ')' || c == ',' || c == '='; }

/// Whitespace-separated words, with ( ) , = split out as their own tokens.
std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_punct(c)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::scientific);
  return std::string(buf.data(), res.ptr);
}

bool is_node_label(const std::string& token) {
  return !token.empty() && !is_punct(token.front());
}

[[noreturn]] void invalid(const ElementDecl& decl, const std::string& reason) {
  throw ValidationError(ValidationError::Kind::invalid_element, decl.name,
                        decl.name + ": " + reason);
}

std::size_t expected_node_count(ElementKind kind) { return kind == ElementKind::cccii ? 3 : 2; }

double require_param(const ElementDecl& decl, const std::string& key) {
  auto it = decl.params.find(key);
  if (it == decl.params.end()) invalid(decl, "missing parameter " + key);
  if (!std::isfinite(it->second)) invalid(decl, "parameter " + key + " is not finite");
  return it->second;
}

void check_keys(const ElementDecl& decl, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : decl.params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      invalid(decl, "unexpected parameter " + key);
    }
  }
}

/// Structural check shared by the parser (reported with a line number) and
/// by validate() for programmatically built documents.
void check_decl(const ElementDecl& decl) {
  if (decl.name.empty()) invalid(decl, "empty element name");
  if (decl.nodes.size() != expected_node_count(decl.kind)) {
    invalid(decl, "expected " + std::to_string(expected_node_count(decl.kind)) + " nodes, got " +
                      std::to_string(decl.nodes.size()));
  }
  for (const auto& n : decl.nodes) {
    if (!is_node_label(n)) invalid(decl, "invalid node label '" + n + "'");
  }
  switch (decl.kind) {
    case ElementKind::resistor: {
      check_keys(decl, {"R"});
      const double r = require_param(decl, "R");
      if (!(r > 0.0)) invalid(decl, "resistance must be positive");
      break;
    }
    case ElementKind::vsource:
    case ElementKind::isource:
      source_waveform(decl);
      break;
    case ElementKind::cccii:
      cccii_params(decl);
      break;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

const Directive* NetlistDocument::tran() const {
  auto it = std::find_if(directives.begin(), directives.end(),
                         [](const Directive& d) { return d.kind == DirectiveKind::tran; });
  return it == directives.end() ? nullptr : &*it;
}

const ElementDecl* NetlistDocument::find_element(std::string_view name) const {
  const std::string key = to_lower(name);
  for (const auto& e : elements) {
    if (to_lower(e.name) == key) return &e;
  }
  return nullptr;
}

ElementDecl* NetlistDocument::find_element(std::string_view name) {
  return const_cast<ElementDecl*>(std::as_const(*this).find_element(name));
}

ParseError::ParseError(Kind kind, int line, std::string reason)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + reason : reason),
      kind_(kind),
      line_(line),
      reason_(std::move(reason)) {}

std::optional<double> parse_number(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::string_view body = token;
  if (body.front() == '+') body.remove_prefix(1);
  if (body.empty() || body.front() == '+') return std::nullopt;

  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc{} || ptr == body.data()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;

  const std::string suffix = to_lower(std::string_view(ptr, body.data() + body.size() - ptr));
  double scale = 1.0;
  if (suffix.empty()) {
    scale = 1.0;
  } else if (suffix == "f") {
    scale = 1e-15;
  } else if (suffix == "p") {
    scale = 1e-12;
  } else if (suffix == "n") {
    scale = 1e-9;
  } else if (suffix == "u") {
    scale = 1e-6;
  } else if (suffix == "m") {
    scale = 1e-3;
  } else if (suffix == "k") {
    scale = 1e3;
  } else if (suffix == "meg") {
    scale = 1e6;
  } else if (suffix == "g") {
    scale = 1e9;
  } else {
    return std::nullopt;
  }
  const double scaled = value * scale;
  if (!std::isfinite(scaled)) return std::nullopt;
  return scaled;
}

namespace {

class LineParser {
 public:
  LineParser(int line, std::vector<std::string> tokens) : line_(line), tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }

  std::string next(std::string_view what) {
    if (done()) fail("expected " + std::string(what));
    return tokens_[pos_++];
  }

  void expect(std::string_view punct) {
    const std::string t = next("'" + std::string(punct) + "'");
    if (t != punct) fail("expected '" + std::string(punct) + "', got '" + t + "'");
  }

  bool accept(std::string_view punct) {
    if (!done() && tokens_[pos_] == punct) {
      ++pos_;
      return true;
    }
    return false;
  }

  double number(std::string_view what) {
    const std::string t = next(what);
    auto v = parse_number(t);
    if (!v) fail("invalid number '" + t + "' for " + std::string(what));
    return *v;
  }

  std::string node() {
    std::string t = next("node label");
    if (!is_node_label(t)) fail("invalid node label '" + t + "'");
    return t;
  }

  void finish() const {
    if (!done()) fail("unexpected token '" + tokens_[pos_] + "'");
  }

  [[noreturn]] void fail(const std::string& reason) const {
    throw ParseError(ParseError::Kind::syntax, line_, reason);
  }

 private:
  int line_;
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

ElementDecl parse_element(LineParser& p, const std::string& name) {
  ElementDecl decl;
  decl.name = name;
  switch (std::toupper(static_cast<unsigned char>(name.front()))) {
    case 'R': {
      decl.kind = ElementKind::resistor;
      decl.nodes = {p.node(), p.node()};
      decl.params["R"] = p.number("resistance");
      break;
    }
    case 'V':
    case 'I': {
      decl.kind = std::toupper(static_cast<unsigned char>(name.front())) == 'V'
                      ? ElementKind::vsource
                      : ElementKind::isource;
      decl.nodes = {p.node(), p.node()};
      const std::string form = to_upper(p.next("DC or SIN"));
      if (form == "DC") {
        decl.params["DC"] = p.number("DC value");
      } else if (form == "SIN" && decl.kind == ElementKind::vsource) {
        p.expect("(");
        decl.params["OFFSET"] = p.number("sine offset");
        p.accept(",");
        decl.params["AMPLITUDE"] = p.number("sine amplitude");
        p.accept(",");
        decl.params["FREQ"] = p.number("sine frequency");
        p.expect(")");
      } else {
        p.fail("unsupported source form '" + form + "'");
      }
      break;
    }
    case 'X': {
      decl.kind = ElementKind::cccii;
      decl.nodes = {p.node(), p.node(), p.node()};
      const std::string model = to_upper(p.next("CCCII+ or CCCII-"));
      if (model == "CCCII+") {
        decl.params["POLARITY"] = 1.0;
      } else if (model == "CCCII-") {
        decl.params["POLARITY"] = -1.0;
      } else {
        p.fail("unknown subcircuit model '" + model + "' (expected CCCII+ or CCCII-)");
      }
      while (!p.done()) {
        const std::string key = to_upper(p.next("parameter name"));
        static const std::set<std::string> keys{"RX", "IB", "BETA", "LEVEL", "VDD", "VSS"};
        if (!keys.contains(key)) p.fail("unknown conveyor parameter '" + key + "'");
        p.expect("=");
        const double value = p.number(key);
        if (!decl.params.emplace(key, value).second) p.fail("parameter " + key + " given twice");
      }
      break;
    }
    default:
      throw ParseError(ParseError::Kind::unknown_element_kind, 0, "");
  }
  p.finish();
  return decl;
}

Directive parse_directive(LineParser& p, const std::string& keyword) {
  Directive d;
  if (keyword == ".tran") {
    d.kind = DirectiveKind::tran;
    d.tstep = p.number("tstep");
    d.tstop = p.number("tstop");
    if (!(d.tstep > 0.0)) p.fail("tran timestep must be positive");
    if (!(d.tstop >= d.tstep)) p.fail("tran stop time must be >= timestep");
  } else if (keyword == ".op") {
    d.kind = DirectiveKind::op;
  } else if (keyword == ".measure" || keyword == ".meas") {
    d.kind = DirectiveKind::measure;
    const std::string metric = to_lower(p.next("measurement"));
    if (metric == "vpp") {
      d.metric = MeasureKind::vpp;
      p.expect("(");
      d.nodes = {p.node()};
      p.expect(")");
    } else if (metric == "gain") {
      d.metric = MeasureKind::gain;
      p.expect("(");
      d.nodes.push_back(p.node());
      p.expect(",");
      d.nodes.push_back(p.node());
      p.expect(")");
    } else if (metric == "power") {
      d.metric = MeasureKind::power;
    } else {
      p.fail("unknown measurement '" + metric + "'");
    }
  } else {
    p.fail("unknown directive '" + keyword + "'");
  }
  p.finish();
  return d;
}

}  // namespace

NetlistDocument parse_netlist(std::string_view text) {
  NetlistDocument doc;
  std::set<std::string> names;
  bool seen_content = false;
  bool ended = false;
  int line_no = 0;

  while (!text.empty() && !ended) {
    const auto eol = text.find('\n');
    std::string_view raw = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '*') {
      if (!seen_content && !doc.title) {
        const std::string_view t = trim(line.substr(1));
        if (!t.empty()) doc.title = std::string(t);
      }
      seen_content = true;
      continue;
    }
    seen_content = true;

    auto tokens = tokenize(line);
    const std::string head = tokens.front();
    if (is_punct(head.front())) {
      throw ParseError(ParseError::Kind::syntax, line_no, "line starts with '" + head + "'");
    }
    LineParser p(line_no, std::move(tokens));
    p.next("name");

    if (head.front() == '.') {
      const std::string keyword = to_lower(head);
      if (keyword == ".end") {
        p.finish();
        ended = true;
        continue;
      }
      Directive d = parse_directive(p, keyword);
      if (d.kind == DirectiveKind::tran && doc.tran() != nullptr) {
        p.fail("more than one .tran directive");
      }
      doc.directives.push_back(std::move(d));
      continue;
    }

    ElementDecl decl;
    try {
      decl = parse_element(p, head);
    } catch (const ParseError& e) {
      if (e.kind() == ParseError::Kind::unknown_element_kind) {
        throw ParseError(ParseError::Kind::unknown_element_kind, line_no,
                         "unknown element kind '" + std::string(1, head.front()) + "' in '" +
                             head + "'");
      }
      throw;
    }
    if (decl.name.size() < 2) p.fail("element name needs at least one character after the kind");
    try {
      check_decl(decl);
    } catch (const ValidationError& e) {
      p.fail(e.what());
    }
    if (!names.insert(to_lower(decl.name)).second) {
      throw ParseError(ParseError::Kind::duplicate_name, line_no,
                       "duplicate element name '" + decl.name + "'");
    }
    doc.elements.push_back(std::move(decl));
  }

  if (!ended) throw ParseError(ParseError::Kind::missing_end, line_no, "missing .end");
  return doc;
}

std::string serialize(const NetlistDocument& doc) {
  std::ostringstream os;
  if (doc.title) os << "* " << *doc.title << '\n';
  for (const auto& e : doc.elements) {
    os << e.name;
    for (const auto& n : e.nodes) os << ' ' << n;
    const auto param = [&](const char* key) { return e.params.at(key); };
    switch (e.kind) {
      case ElementKind::resistor:
        os << ' ' << format_number(param("R"));
        break;
      case ElementKind::vsource:
      case ElementKind::isource:
        if (e.params.contains("DC")) {
          os << " DC " << format_number(param("DC"));
        } else {
          os << " SIN(" << format_number(param("OFFSET")) << ' '
             << format_number(param("AMPLITUDE")) << ' ' << format_number(param("FREQ")) << ')';
        }
        break;
      case ElementKind::cccii: {
        os << (param("POLARITY") < 0 ? " CCCII-" : " CCCII+");
        for (const char* key : {"RX", "IB", "BETA"}) {
          if (e.params.contains(key)) os << ' ' << key << '=' << format_number(param(key));
        }
        if (e.params.contains("LEVEL")) {
          os << " LEVEL=" << static_cast<int>(param("LEVEL"));
        }
        for (const char* key : {"VDD", "VSS"}) {
          if (e.params.contains(key)) os << ' ' << key << '=' << format_number(param(key));
        }
        break;
      }
    }
    os << '\n';
  }
  for (const auto& d : doc.directives) {
    switch (d.kind) {
      case DirectiveKind::tran:
        os << ".tran " << format_number(d.tstep) << ' ' << format_number(d.tstop) << '\n';
        break;
      case DirectiveKind::op:
        os << ".op\n";
        break;
      case DirectiveKind::measure:
        switch (d.metric) {
          case MeasureKind::vpp:
            os << ".measure vpp(" << d.nodes.at(0) << ")\n";
            break;
          case MeasureKind::gain:
            os << ".measure gain(" << d.nodes.at(0) << ',' << d.nodes.at(1) << ")\n";
            break;
          case MeasureKind::power:
            os << ".measure power\n";
            break;
        }
        break;
    }
  }
  os << ".end";
  return os.str();
}

// ---------------------------------------------------------------------------

std::optional<Index> Circuit::find_node(std::string_view label) const {
  if (label == kGroundLabel) return kGround;
  auto it = node_index.find(std::string(label));
  if (it == node_index.end()) return std::nullopt;
  return it->second;
}

CcciiParams cccii_params(const ElementDecl& decl) {
  if (decl.kind != ElementKind::cccii) invalid(decl, "not a conveyor");
  check_keys(decl, {"POLARITY", "RX", "IB", "BETA", "LEVEL", "VDD", "VSS"});
  CcciiParams p;
  const double polarity = require_param(decl, "POLARITY");
  if (polarity == 1.0) {
    p.polarity = Polarity::plus;
  } else if (polarity == -1.0) {
    p.polarity = Polarity::minus;
  } else {
    invalid(decl, "polarity must be +1 or -1");
  }

  if (decl.params.contains("LEVEL")) {
    const double level = require_param(decl, "LEVEL");
    if (level == 1.0) {
      p.level = ModelLevel::ideal;
    } else if (level == 2.0) {
      p.level = ModelLevel::parasitic;
    } else {
      invalid(decl, "LEVEL must be 1 or 2");
    }
  }

  const bool has_rx = decl.params.contains("RX");
  const bool has_ib = decl.params.contains("IB");
  const bool has_beta = decl.params.contains("BETA");
  if (has_rx && (has_ib || has_beta)) invalid(decl, "RX and IB/BETA are mutually exclusive");
  if (has_ib != has_beta) invalid(decl, "IB and BETA must be given together");
  try {
    if (has_ib) {
      p.rx = BiasedRx{require_param(decl, "IB"),
                      MosProcessParams::from_beta(require_param(decl, "BETA"))};
    } else if (has_rx) {
      p.rx = ExplicitRx{require_param(decl, "RX")};
    }
    if (decl.params.contains("VDD")) p.vdd = require_param(decl, "VDD");
    if (decl.params.contains("VSS")) p.vss = require_param(decl, "VSS");
    p.check();
  } catch (const DeviceError& e) {
    invalid(decl, e.what());
  }
  return p;
}

SourceWaveform source_waveform(const ElementDecl& decl) {
  if (decl.kind != ElementKind::vsource && decl.kind != ElementKind::isource) {
    invalid(decl, "not an independent source");
  }
  SourceWaveform w;
  if (decl.params.contains("DC")) {
    check_keys(decl, {"DC"});
    w.dc = require_param(decl, "DC");
    return w;
  }
  if (decl.kind == ElementKind::isource) invalid(decl, "current sources take a DC value");
  check_keys(decl, {"OFFSET", "AMPLITUDE", "FREQ"});
  SineSpec s{require_param(decl, "OFFSET"), require_param(decl, "AMPLITUDE"),
             require_param(decl, "FREQ")};
  if (s.frequency < 0.0) invalid(decl, "sine frequency must be >= 0");
  w.dc = s.offset;
  w.sine = s;
  return w;
}

namespace {

enum class TerminalRole {
  conducting,    // terminal with its own voltage column (R, V, conveyor X)
  current_only,  // no voltage dependence of its own (I source, conveyor Y)
  conveyor_z,
};

struct Touch {
  std::size_t element;
  TerminalRole role;
};

std::vector<TerminalRole> terminal_roles(ElementKind kind) {
  switch (kind) {
    case ElementKind::resistor:
    case ElementKind::vsource:
      return {TerminalRole::conducting, TerminalRole::conducting};
    case ElementKind::isource:
      return {TerminalRole::current_only, TerminalRole::current_only};
    case ElementKind::cccii:
      return {TerminalRole::current_only, TerminalRole::conducting, TerminalRole::conveyor_z};
  }
  return {};
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

}  // namespace

Circuit validate(const NetlistDocument& doc) {
  std::set<std::string> names;
  for (const auto& e : doc.elements) {
    check_decl(e);
    if (!names.insert(to_lower(e.name)).second) invalid(e, "duplicate element name");
  }

  // Labels in order of first appearance.
  std::vector<std::string> labels;
  std::map<std::string, std::size_t> label_id;
  std::map<std::string, std::vector<Touch>> touches;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    const auto roles = terminal_roles(e.kind);
    for (std::size_t t = 0; t < e.nodes.size(); ++t) {
      const auto& n = e.nodes[t];
      if (label_id.emplace(n, labels.size()).second) labels.push_back(n);
      touches[n].push_back({i, roles[t]});
    }
  }

  if (!label_id.contains(std::string(kGroundLabel))) {
    throw ValidationError(ValidationError::Kind::no_ground_reference, std::string(kGroundLabel),
                          "no element connects to ground node '0'");
  }

  std::set<std::string> floating;
  for (const auto& label : labels) {
    if (label == kGroundLabel) continue;
    const auto& t = touches[label];
    if (t.size() != 1) continue;
    if (t.front().role == TerminalRole::conveyor_z) {
      floating.insert(label);
    } else if (t.front().role == TerminalRole::current_only) {
      throw ValidationError(ValidationError::Kind::dangling_node, label,
                            "node '" + label + "' is only touched by " +
                                doc.elements[t.front().element].name +
                                " and cannot be solved");
    }
  }

  DisjointSets sets(labels.size());
  for (const auto& e : doc.elements) {
    std::optional<std::size_t> first;
    for (const auto& n : e.nodes) {
      if (floating.contains(n)) continue;
      const std::size_t id = label_id.at(n);
      if (first) sets.unite(*first, id);
      else first = id;
    }
  }
  const std::size_t ground_set = sets.find(label_id.at(std::string(kGroundLabel)));
  for (const auto& label : labels) {
    if (floating.contains(label)) continue;
    if (sets.find(label_id.at(label)) != ground_set) {
      throw ValidationError(ValidationError::Kind::no_ground_reference, label,
                            "node '" + label + "' has no path to ground");
    }
  }

  Circuit c;
  for (const auto& label : labels) {
    if (label == kGroundLabel) continue;
    if (floating.contains(label)) {
      c.floating_nodes.push_back(label);
      continue;
    }
    c.node_index.emplace(label, c.node_count());
    c.node_names.push_back(label);
  }

  const auto idx = [&](const std::string& label) -> Index {
    if (label == kGroundLabel || floating.contains(label)) return kGround;
    return c.node_index.at(label);
  };

  Index next_branch = c.node_count();
  for (const auto& e : doc.elements) {
    switch (e.kind) {
      case ElementKind::resistor:
        c.elements.emplace_back(
            ResistorElement{e.name, idx(e.nodes[0]), idx(e.nodes[1]), e.params.at("R")});
        break;
      case ElementKind::vsource:
        c.elements.emplace_back(VoltageSourceElement{e.name, idx(e.nodes[0]), idx(e.nodes[1]),
                                                     next_branch++, source_waveform(e)});
        break;
      case ElementKind::isource:
        c.elements.emplace_back(
            CurrentSourceElement{e.name, idx(e.nodes[0]), idx(e.nodes[1]), source_waveform(e)});
        break;
      case ElementKind::cccii:
        c.elements.emplace_back(ConveyorElement{e.name, idx(e.nodes[0]), idx(e.nodes[1]),
                                                idx(e.nodes[2]), next_branch++, cccii_params(e)});
        break;
    }
  }
  c.branch_count = next_branch - c.node_count();
  return c;
}

}  // namespace ccsim
