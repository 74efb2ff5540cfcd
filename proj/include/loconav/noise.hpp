#pragma once

namespace loconav {

/// Parametric depth-noise surrogate: Gaussian with sigma(z) = sigma0 + sigma2 * z^2,
/// plus random dropout that is stronger at depth discontinuities.
struct DepthNoiseConfig {
  double sigma0 = 0.0;        // meters
  double sigma2 = 0.0;        // 1/meters
  double dropout_base = 0.0;  // probability
  double dropout_edge = 0.0;  // probability where a 4-neighbour differs by > edge_jump
  double edge_jump = 0.3;     // meters

  bool is_zero() const {
    return sigma0 == 0.0 && sigma2 == 0.0 && dropout_base == 0.0 && dropout_edge == 0.0;
  }
  void validate() const;
};

struct NoiseConfig {
  double actuation_sigma_lin = 0.0;   // meters
  double actuation_sigma_rot = 0.0;   // radians
  double odometry_drift_sigma = 0.0;  // meters of RMS drift per step
  DepthNoiseConfig depth;

  /// Calibrated defaults used when noise is switched on.
  static NoiseConfig calibrated();
  static NoiseConfig off() { return {}; }
  void validate() const;
};

}  // namespace loconav
