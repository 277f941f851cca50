#pragma once

#include <cstddef>

#include "extremctl/plant.hpp"

namespace extremctl::plant {

struct FrequencyResponse {
  double magnitude = 1.0;
  double phase = 0.0;  // rad, negative means the joint lags the target
};

/// Closed-loop response from target to joint position of the PD +
/// feedforward law on an inertia matched to the gains:
///
///   H(s) = (wn^2 + 2 eta zeta wn s) / (s^2 + 2 zeta wn s + wn^2)
///
/// The denominator phase is taken with atan2, so it passes smoothly through
/// -pi/2 at omega = omega_n instead of jumping.
FrequencyResponse frequency_response(const JointGains& gains, double omega);

// Low-frequency equivalent tracking delay 2 (1 - eta) / omega_n, seconds.
double equivalent_delay(const JointGains& gains);

// -phase / omega at a specific frequency, seconds.
double phase_delay(const JointGains& gains, double omega);

/// Largest feedforward ratio that does not add acceleration inside one
/// zero-order-hold interval: 1 - omega_n * control_dt / 4.
/// Throws Infeasible when omega_n * control_dt >= 4.
double max_feedforward_ratio(double omega_n, double control_dt);

// Largest q - q_reference over samples after `skip_s` seconds: the
// per-interval overshoot past the true reference for a rising ramp.
double overshoot_metric(const Episode& episode, std::size_t joint, double skip_s);

}  // namespace extremctl::plant
