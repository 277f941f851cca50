#pragma once

#include <span>
#include <string>
#include <vector>

#include "extremctl/plant.hpp"

namespace extremctl::plant {

// Single decoupled joint tracking a sinusoid under a zero-order-hold target.
struct DelayStudyConfig {
  double omega_n = 10.0;     // rad/s
  double zeta = 1.0;
  double inertia = 1.0;      // kg*m^2
  double amplitude = 0.3;    // rad
  double omega = 3.14;       // rad/s
  double control_dt = 0.02;  // s
  double physics_dt = 1e-3;  // s
  double duration = 12.0;    // s
  double settle = 2.0;       // s discarded before measuring
  double ramp_rate = 0.3;    // rad/s for the overshoot episode
  TargetTiming timing = TargetTiming::kMidInterval;

  void validate() const;
};

struct DelayPoint {
  double eta = 0.0;
  double theory_delay = 0.0;     // s, 2 (1 - eta) / omega_n
  double phase_delay = 0.0;      // s, continuous-time at the test frequency
  double simulated_delay = 0.0;  // s, reference to joint by waveform alignment
  double confidence = 0.0;
  double overshoot = 0.0;        // rad, largest q - reference on a ramp
};

DelayPoint simulate_delay(const DelayStudyConfig& config, double eta);
std::vector<DelayPoint> delay_curve(const DelayStudyConfig& config, std::span<const double> etas);

// "start:stop:step", both ends inclusive.
std::vector<double> parse_range(const std::string& text);

}  // namespace extremctl::plant
