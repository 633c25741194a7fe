#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ccsim {

using Index = Eigen::Index;

/// Row/column marker for the ground node (and for nodes removed from the
/// system). Stamps silently drop entries that touch it.
inline constexpr Index kGround = -1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DeviceError : public Error {
 public:
  enum class Kind { non_positive_bias, non_positive_resistance, invalid_params };

  DeviceError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Square-law MOS process parameters feeding the translinear R_X model.
/// Either built from the full geometry or from a known beta_n directly.
class MosProcessParams {
 public:
  struct Geometry {
    double mu_n;  // m^2/(V s)
    double c_ox;  // F/m^2
    double w;     // m
    double l;     // m
    bool operator==(const Geometry&) const = default;
  };

  static MosProcessParams from_geometry(double mu_n, double c_ox, double w, double l);
  static MosProcessParams from_beta(double beta_n);

  /// Transconductance parameter mu_n * C_ox * W / L in A/V^2.
  double beta_n() const noexcept { return beta_n_; }
  const std::optional<Geometry>& geometry() const noexcept { return geometry_; }

  bool operator==(const MosProcessParams&) const = default;

 private:
  MosProcessParams(double beta_n, std::optional<Geometry> geometry)
      : beta_n_(beta_n), geometry_(geometry) {}

  double beta_n_;
  std::optional<Geometry> geometry_;
};

/// Intrinsic X-port resistance of a translinear conveyor biased at `i_b`:
///   R_X = 1 / (2 g_m),  g_m = sqrt(2 beta_n I_B)  =>  R_X = 1 / sqrt(8 beta_n I_B).
double compute_rx(const MosProcessParams& process, double i_b);

enum class Polarity : int { plus = 1, minus = -1 };

enum class ModelLevel : int {
  ideal = 1,      // linear port relations only
  parasitic = 2,  // plus the smooth rail clamp at Z
};

struct ExplicitRx {
  double ohms = 0.0;
  bool operator==(const ExplicitRx&) const = default;
};

struct BiasedRx {
  double i_b;
  MosProcessParams process;
  bool operator==(const BiasedRx&) const = default;
};

using RxSpec = std::variant<ExplicitRx, BiasedRx>;

struct CcciiParams {
  Polarity polarity = Polarity::plus;
  ModelLevel level = ModelLevel::ideal;
  RxSpec rx = ExplicitRx{};
  double vdd = 0.5;
  double vss = -0.5;

  /// Throws DeviceError when the invariants (vdd > vss, R_X >= 0, I_B > 0) fail.
  void check() const;

  /// Resolved series resistance at X in ohms.
  double rx_ohms() const;

  double sigma() const noexcept { return static_cast<double>(polarity); }

  bool operator==(const CcciiParams&) const = default;
};

/// Width of the quadratic smoothing band at each rail.
inline constexpr double kClampBand = 10e-3;
/// Incremental resistance of the clamp once past a rail.
inline constexpr double kClampSaturationOhms = 1.0;

struct SineSpec {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  bool operator==(const SineSpec&) const = default;
};

/// Value of an independent source as a function of time: DC or offset sine.
struct SourceWaveform {
  double dc = 0.0;
  std::optional<SineSpec> sine;

  double value_at(double t) const;
  bool operator==(const SourceWaveform&) const = default;
};

/// Additive contribution of one device to an MNA system. Rows and columns
/// are indices into [node voltages..., branch currents...]; entries naming
/// kGround are dropped on insertion.
struct StampContribution {
  struct MatrixEntry {
    Index row;
    Index col;
    double value;
    bool operator==(const MatrixEntry&) const = default;
  };
  struct RhsEntry {
    Index row;
    double value;
    bool operator==(const RhsEntry&) const = default;
  };

  std::vector<MatrixEntry> matrix;
  std::vector<RhsEntry> rhs;

  void add(Index row, Index col, double value);
  void add_rhs(Index row, double value);

  template <typename MatrixDerived, typename VectorDerived>
  void apply_to(Eigen::MatrixBase<MatrixDerived>& a, Eigen::MatrixBase<VectorDerived>& b) const {
    for (const auto& e : matrix) a(e.row, e.col) += e.value;
    for (const auto& e : rhs) b(e.row) += e.value;
  }
};

StampContribution stamp_resistor(Index pos, Index neg, double resistance);

/// `branch` is the absolute row of the source current unknown. The branch
/// current is positive flowing from `pos` through the source to `neg`.
StampContribution stamp_vsource(Index pos, Index neg, Index branch, double value);

/// SPICE convention: `current` flows from `pos` through the source into `neg`.
StampContribution stamp_isource(Index pos, Index neg, double current);

/// Linear CCCII port relations with every port current taken as flowing
/// from the external node into the device:
///   I_Y = 0,  V_X - V_Y - R_X i_x = 0,  I_Z = sigma * i_x.
/// `branch` is the row of i_x. A `z` of kGround drops the Z coupling, which
/// is how an unloaded (floating) Z port is represented.
StampContribution stamp_cccii_linear(Index y, Index x, Index z, Index branch,
                                     const CcciiParams& params);

struct ClampState {
  double current;      // A, flowing out of the Z node into the clamp
  double conductance;  // dI/dV_z
};

/// Level-2 output clamp. Zero inside [vss + band, vdd - band], quadratic
/// across the band, then linear with 1/R_sat beyond the rail. C1 everywhere.
ClampState eval_clamp(double v_z, const CcciiParams& params);

/// Newton companion model of the clamp linearized about `v_z0`.
StampContribution stamp_clamp(Index z, double v_z0, const CcciiParams& params);

}  // namespace ccsim
