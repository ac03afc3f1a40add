#ifndef WINDNBM_SYNTHETIC_HPP
#define WINDNBM_SYNTHETIC_HPP

#include <array>
#include <cstdint>

#include "windnbm/scada.hpp"

namespace windnbm {

/// First-order autoregressive noise: e_t = rho * e_{t-1} + sigma * sqrt(1 - rho^2) * g_t,
/// with e_0 drawn from the stationary distribution, so the marginal standard
/// deviation is sigma at every step.
struct Ar1Params {
    double rho = 0.9;
    double sigma = 1.0;
};

/// Idealized power-curve response, normalized to [0, 1]:
/// zero below cut-in and above cut-out, a cubic ramp between cut-in and
/// rated, constant 1 between rated and cut-out.
struct PowerCurve {
    double cut_in = 3.0;
    double rated = 13.0;
    double cut_out = 25.0;

    double operator()(double wind_speed) const;
};

/// Linear ground-truth temperature response: base + power_gain * g(v) + air_gain * T_air.
struct TargetModel {
    double base = 0.0;
    double power_gain = 0.0;
    double air_gain = 0.0;

    double value(double power_fraction, double air_temp) const {
        return base + power_gain * power_fraction + air_gain * air_temp;
    }
};

/// Generator configuration. Defaults give fourteen months of plausible
/// onshore-turbine behaviour: annually and diurnally modulated wind and air
/// temperature with AR(1) weather noise, and component temperatures driven
/// by the power curve and the air temperature plus autocorrelated sensor
/// noise.
struct SyntheticConfig {
    int n_months = 14;
    std::uint64_t seed = 0;

    double wind_mean = 8.0;
    double wind_annual_amplitude = 1.5;
    double wind_diurnal_amplitude = 0.8;
    Ar1Params wind_noise{0.93, 3.0};

    double dir_mean = 200.0;
    Ar1Params dir_noise{0.995, 35.0};

    double air_mean = 10.0;
    double air_annual_amplitude = 6.0;
    double air_diurnal_amplitude = 2.0;
    Ar1Params air_noise{0.95, 1.2};

    PowerCurve power_curve;

    TargetModel gear{35.0, 25.0, 0.35};
    TargetModel oil{40.0, 18.0, 0.30};
    TargetModel tr{50.0, 30.0, 0.25};

    /// Additive noise on the three target temperatures (independent streams,
    /// shared parameters). sigma 0 makes the targets exact functions of
    /// (wind speed, air temperature). The amplitude is chosen to dominate
    /// what a regularized normal-behaviour model leaves unexplained, so
    /// calibration and monitoring residuals share one distribution.
    Ar1Params target_noise{0.55, 1.2};
};

void validate_synthetic_config(const SyntheticConfig& cfg);

/// Noise-free target temperatures {gear, oil, tr} for given inputs.
std::array<double, 3> ground_truth_targets(const SyntheticConfig& cfg, double wind_speed,
                                           double air_temp);

/// Deterministic generator: identical config (including seed) gives a
/// bit-identical series. Steps run from 0 to n_months * 4320 - 1; wind speed
/// is clamped to [0, 30] m/s and direction wrapped to [0, 360).
ScadaSeries synthesize_scada(const SyntheticConfig& cfg);

}  // namespace windnbm

#endif
