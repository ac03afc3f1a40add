#include "windnbm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "windnbm/error.hpp"
#include "windnbm/rng.hpp"

namespace windnbm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::int64_t kStepsPerYear = 12 * kStepsPerMonth;

// AR(1) state advanced one step at a time.
class Ar1Process {
public:
    Ar1Process(const Ar1Params& p, Rng& rng)
        : rho_(p.rho), innovation_scale_(p.sigma * std::sqrt(1.0 - p.rho * p.rho)) {
        state_ = p.sigma * rng.next_gaussian();
    }

    double next(Rng& rng) {
        state_ = rho_ * state_ + innovation_scale_ * rng.next_gaussian();
        return state_;
    }

    double current() const { return state_; }

private:
    double rho_;
    double innovation_scale_;
    double state_;
};

double wrap_degrees(double d) {
    d = std::fmod(d, 360.0);
    return d < 0.0 ? d + 360.0 : d;
}

}  // namespace

double PowerCurve::operator()(double wind_speed) const {
    if (wind_speed < cut_in) return 0.0;
    if (wind_speed < rated) {
        const double x = (wind_speed - cut_in) / (rated - cut_in);
        return x * x * x;
    }
    if (wind_speed <= cut_out) return 1.0;
    return 0.0;
}

void validate_synthetic_config(const SyntheticConfig& cfg) {
    if (cfg.n_months < 1) {
        throw Error(ErrorCategory::config, "n_months must be >= 1");
    }
    if (!(cfg.power_curve.cut_in < cfg.power_curve.rated &&
          cfg.power_curve.rated < cfg.power_curve.cut_out)) {
        throw Error(ErrorCategory::config, "power curve must satisfy cut_in < rated < cut_out");
    }
    const auto check_ar1 = [](const Ar1Params& p, const char* name) {
        if (!(p.rho >= 0.0 && p.rho < 1.0) || p.sigma < 0.0) {
            throw Error(ErrorCategory::config,
                        std::string(name) + ": need rho in [0,1) and sigma >= 0");
        }
    };
    check_ar1(cfg.wind_noise, "wind_noise");
    check_ar1(cfg.dir_noise, "dir_noise");
    check_ar1(cfg.air_noise, "air_noise");
    check_ar1(cfg.target_noise, "target_noise");
}

std::array<double, 3> ground_truth_targets(const SyntheticConfig& cfg, double wind_speed,
                                           double air_temp) {
    const double g = cfg.power_curve(wind_speed);
    return {cfg.gear.value(g, air_temp), cfg.oil.value(g, air_temp), cfg.tr.value(g, air_temp)};
}

ScadaSeries synthesize_scada(const SyntheticConfig& cfg) {
    validate_synthetic_config(cfg);

    Rng rng(derive_seed(cfg.seed, "synthetic"));
    Ar1Process wind_noise(cfg.wind_noise, rng);
    Ar1Process dir_noise(cfg.dir_noise, rng);
    Ar1Process air_noise(cfg.air_noise, rng);
    Ar1Process gear_noise(cfg.target_noise, rng);
    Ar1Process oil_noise(cfg.target_noise, rng);
    Ar1Process tr_noise(cfg.target_noise, rng);

    const std::int64_t n_steps = static_cast<std::int64_t>(cfg.n_months) * kStepsPerMonth;
    ScadaSeries series;
    series.records.reserve(static_cast<std::size_t>(n_steps));

    for (std::int64_t t = 0; t < n_steps; ++t) {
        const double annual = kTwoPi * static_cast<double>(t) / static_cast<double>(kStepsPerYear);
        const double diurnal = kTwoPi * static_cast<double>(t) / static_cast<double>(kStepsPerDay);

        // Six gaussians consumed per step in fixed order: wind, dir, air,
        // gear, oil, tr.
        const double wind_raw = cfg.wind_mean + cfg.wind_annual_amplitude * std::sin(annual) +
                                cfg.wind_diurnal_amplitude * std::sin(diurnal) +
                                wind_noise.next(rng);
        const double dir_raw = cfg.dir_mean + dir_noise.next(rng);
        const double air = cfg.air_mean + cfg.air_annual_amplitude * std::sin(annual) +
                           cfg.air_diurnal_amplitude * std::sin(diurnal) + air_noise.next(rng);

        ScadaRecord r;
        r.step = t;
        r.wind_speed = std::clamp(wind_raw, 0.0, 30.0);
        r.wind_dir = wrap_degrees(dir_raw);
        r.air_temp = air;

        const auto targets = ground_truth_targets(cfg, r.wind_speed, r.air_temp);
        r.gear_temp = targets[0] + gear_noise.next(rng);
        r.oil_temp = targets[1] + oil_noise.next(rng);
        r.tr_temp = targets[2] + tr_noise.next(rng);

        series.records.push_back(r);
    }
    return series;
}

}  // namespace windnbm
