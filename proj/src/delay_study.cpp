#include "extremctl/delay_study.hpp"

#include <cmath>
#include <sstream>

#include "extremctl/error.hpp"
#include "extremctl/feedforward.hpp"
#include "extremctl/latency.hpp"

namespace extremctl::plant {

void DelayStudyConfig::validate() const {
  if (!(omega_n > 0.0) || !(inertia > 0.0) || !(omega > 0.0) || !(amplitude > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "omega_n, inertia, omega and amplitude must be positive");
  }
  if (!(duration > settle + 1.0) || !(settle >= 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "duration must exceed the settle time by at least 1 s");
  }
}

DelayPoint simulate_delay(const DelayStudyConfig& config, double eta) {
  config.validate();
  const PlantModel plant = PlantModel::decoupled({config.inertia}, config.physics_dt);
  const std::array<double, 1> m{config.inertia};
  const GainSchedule gains = GainSchedule::from_impedance(m, config.omega_n, config.zeta, eta);
  const EpisodeOptions options{config.timing, true};

  DelayPoint p;
  p.eta = eta;
  p.theory_delay = equivalent_delay(gains.joints[0]);
  p.phase_delay = phase_delay(gains.joints[0], config.omega);

  const Episode ep = run_episode(plant, gains, sinusoid_reference(1, config.amplitude, config.omega),
                                 config.duration, config.control_dt, options);
  const auto skip = static_cast<std::size_t>(std::llround(config.settle / ep.dt));
  const double rate = 1.0 / ep.dt;
  const double t0 = static_cast<double>(skip) * ep.dt;
  latency::MotionSignal ref{{ep.q_reference[0].begin() + static_cast<std::ptrdiff_t>(skip), ep.q_reference[0].end()}, rate, t0};
  latency::MotionSignal q{{ep.q_measured[0].begin() + static_cast<std::ptrdiff_t>(skip), ep.q_measured[0].end()}, rate, t0};
  const auto lag = latency::estimate_lag(ref, q);
  p.simulated_delay = lag.lag;
  p.confidence = lag.confidence;

  const Episode ramp = run_episode(plant, gains, ramp_reference(1, config.ramp_rate),
                                   std::min(config.duration, 5.0), config.control_dt, options);
  p.overshoot = overshoot_metric(ramp, 0, 1.0);
  return p;
}

std::vector<DelayPoint> delay_curve(const DelayStudyConfig& config, std::span<const double> etas) {
  std::vector<DelayPoint> out;
  out.reserve(etas.size());
  for (double eta : etas) out.push_back(simulate_delay(config, eta));
  return out;
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad range '" + text + "', expected start:stop:step");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    throw Error(ErrorCode::kParse, "bad range '" + text + "', expected start:stop:step with step > 0");
  }
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long i = 0; i <= n; ++i) {
    // Snap to the step grid to avoid 0.30000000000000004 style drift.
    out.push_back(std::round((parts[0] + static_cast<double>(i) * parts[2]) * 1e12) / 1e12);
  }
  return out;
}

}  // namespace extremctl::plant
