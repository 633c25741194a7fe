#include "ccsim/devices.hpp"

#include <cmath>
#include <numbers>

namespace ccsim {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

MosProcessParams MosProcessParams::from_geometry(double mu_n, double c_ox, double w, double l) {
  if (!positive_finite(mu_n) || !positive_finite(c_ox) || !positive_finite(w) ||
      !positive_finite(l)) {
    throw DeviceError(DeviceError::Kind::invalid_params,
                      "process parameters mu_n, c_ox, w, l must be positive and finite");
  }
  return MosProcessParams(mu_n * c_ox * w / l, Geometry{mu_n, c_ox, w, l});
}

MosProcessParams MosProcessParams::from_beta(double beta_n) {
  if (!positive_finite(beta_n)) {
    throw DeviceError(DeviceError::Kind::invalid_params, "beta_n must be positive and finite");
  }
  return MosProcessParams(beta_n, std::nullopt);
}

double compute_rx(const MosProcessParams& process, double i_b) {
  if (!(i_b > 0.0) || !std::isfinite(i_b)) {
    throw DeviceError(DeviceError::Kind::non_positive_bias, "bias current must be positive");
  }
  return 1.0 / std::sqrt(8.0 * process.beta_n() * i_b);
}

void CcciiParams::check() const {
  if (!(vdd > vss) || !std::isfinite(vdd) || !std::isfinite(vss)) {
    throw DeviceError(DeviceError::Kind::invalid_params, "supply rails require vdd > vss");
  }
  if (const auto* e = std::get_if<ExplicitRx>(&rx)) {
    if (!(e->ohms >= 0.0) || !std::isfinite(e->ohms)) {
      throw DeviceError(DeviceError::Kind::non_positive_resistance,
                        "explicit RX must be finite and >= 0");
    }
  } else {
    const auto& b = std::get<BiasedRx>(rx);
    if (!(b.i_b > 0.0) || !std::isfinite(b.i_b)) {
      throw DeviceError(DeviceError::Kind::non_positive_bias, "bias current must be positive");
    }
  }
}

double CcciiParams::rx_ohms() const {
  return std::visit(
      [](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, ExplicitRx>) {
          return spec.ohms;
        } else {
          return compute_rx(spec.process, spec.i_b);
        }
      },
      rx);
}

double SourceWaveform::value_at(double t) const {
  if (!sine) return dc;
  return sine->offset + sine->amplitude * std::sin(2.0 * std::numbers::pi * sine->frequency * t);
}

void StampContribution::add(Index row, Index col, double value) {
  if (row == kGround || col == kGround) return;
  matrix.push_back({row, col, value});
}

void StampContribution::add_rhs(Index row, double value) {
  if (row == kGround) return;
  rhs.push_back({row, value});
}

StampContribution stamp_resistor(Index pos, Index neg, double resistance) {
  if (!positive_finite(resistance)) {
    throw DeviceError(DeviceError::Kind::non_positive_resistance,
                      "resistance must be positive and finite");
  }
  const double g = 1.0 / resistance;
  StampContribution s;
  s.add(pos, pos, g);
  s.add(neg, neg, g);
  s.add(pos, neg, -g);
  s.add(neg, pos, -g);
  return s;
}

StampContribution stamp_vsource(Index pos, Index neg, Index branch, double value) {
  StampContribution s;
  s.add(pos, branch, 1.0);
  s.add(neg, branch, -1.0);
  s.add(branch, pos, 1.0);
  s.add(branch, neg, -1.0);
  s.add_rhs(branch, value);
  return s;
}

StampContribution stamp_isource(Index pos, Index neg, double current) {
  StampContribution s;
  s.add_rhs(pos, -current);
  s.add_rhs(neg, current);
  return s;
}

StampContribution stamp_cccii_linear(Index y, Index x, Index z, Index branch,
                                     const CcciiParams& params) {
  StampContribution s;
  // Branch row: V_X - V_Y - R_X i_x = 0
  s.add(branch, x, 1.0);
  s.add(branch, y, -1.0);
  const double rx = params.rx_ohms();
  if (rx != 0.0) s.add(branch, branch, -rx);
  // KCL: i_x leaves node X, sigma * i_x leaves node Z, nothing at Y.
  s.add(x, branch, 1.0);
  s.add(z, branch, params.sigma());
  return s;
}

ClampState eval_clamp(double v_z, const CcciiParams& params) {
  constexpr double g = 1.0 / kClampSaturationOhms;
  constexpr double band = kClampBand;
  auto ramp = [&](double u) -> ClampState {
    if (u <= 0.0) return {0.0, 0.0};
    if (u <= band) return {g * u * u / (2.0 * band), g * u / band};
    return {g * (u - band / 2.0), g};
  };
  if (v_z > params.vdd - band) return ramp(v_z - (params.vdd - band));
  if (v_z < params.vss + band) {
    const ClampState c = ramp((params.vss + band) - v_z);
    return {-c.current, c.conductance};
  }
  return {0.0, 0.0};
}

StampContribution stamp_clamp(Index z, double v_z0, const CcciiParams& params) {
  StampContribution s;
  const ClampState c = eval_clamp(v_z0, params);
  if (c.current == 0.0 && c.conductance == 0.0) return s;
  s.add(z, z, c.conductance);
  s.add_rhs(z, c.conductance * v_z0 - c.current);
  return s;
}

}  // namespace ccsim
