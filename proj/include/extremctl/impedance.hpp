#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "extremctl/plant.hpp"

namespace extremctl::impedance {

using plant::GainSchedule;
using plant::PlantModel;

// How the per-environment proportional gains are drawn from
// U(kp_low * kp, kp_high * kp). Stratified sampling gives every environment
// its own equal-width slice of the interval (in shuffled order), so each
// draw is still marginally uniform.
enum class Sampling { kStratified, kIndependent };

struct CalibrationConfig {
  double omega_n = 10.0;
  double zeta = 1.0;
  std::size_t n_envs = 16;
  double kp_low = 0.5;
  double kp_high = 1.5;
  double perturbation = 0.05;   // rad
  double measure_window = 10.0; // s
  std::size_t sweeps = 3;
  double convergence_tol = 0.02;
  Sampling sampling = Sampling::kStratified;
  std::size_t threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct PdGains {
  double kp = 0.0;
  double kd = 0.0;
};

struct PeriodMeasurement {
  double period = 0.0;                 // s
  std::vector<double> down_crossings;  // s, interpolated
  std::size_t crossings = 0;           // both directions
};

/// Free-oscillation period of one joint released from rest at
/// home + perturbation while every other joint stays under its PD law.
///
/// The target joint's kd is forced to zero. The period is the mean spacing
/// of same-direction zero crossings of (q - q_home), interpolated between
/// samples, over cycles 2..6 (the first cycle is skipped as transient).
/// Throws NoOscillation if fewer than three crossings occur in the window.
PeriodMeasurement measure_period(const PlantModel& plant, const GainSchedule& gains,
                                 std::size_t joint, double perturbation,
                                 double window = 10.0);

// kp * P^2 / (2 pi)^2
double estimate_meff(double kp, double period);

// kp = M omega_n^2, kd = 2 zeta M omega_n
PdGains update_gains(double m_eff, double omega_n, double zeta);

struct JointEstimate {
  std::size_t joint = 0;
  std::vector<double> kp_samples;
  std::vector<double> periods;
  std::vector<double> m_eff_samples;
  double m_eff_mean = 0.0;
  double kp = 0.0;
  double kd = 0.0;
};

struct SweepRecord {
  std::size_t sweep = 0;
  std::vector<double> kp;
  std::vector<double> kd;
  std::vector<double> m_eff;
  double max_relative_change = 0.0;
};

struct ImpedanceResult {
  GainSchedule gains;
  std::vector<JointEstimate> estimates;  // by joint index, from the last sweep
  std::vector<SweepRecord> history;
  bool converged = false;
};

// Distal-to-proximal processing order: decreasing kinematic depth, ties by
// ascending joint index.
std::vector<std::size_t> sweep_order(const PlantModel& plant);

// Positive random gains spread log-uniformly over [0.2, 5] times the
// critically damped gains of the joint's diagonal inertia at home.
GainSchedule random_initial_gains(const PlantModel& plant, const CalibrationConfig& config,
                                  std::uint64_t seed);

/// Sequential whole-body impedance calibration.
///
/// Each sweep visits the joints distal to proximal. For each joint it runs
/// n_envs independent period measurements with sampled kp, averages the
/// implied effective inertias, and immediately installs the resulting
/// gains so later joints are measured against them. Sweeps repeat until
/// the largest relative kp change falls below convergence_tol or the sweep
/// budget is spent; in the latter case `converged` is false and the last
/// estimate is returned. NoOscillation propagates.
ImpedanceResult calibrate_chain(const PlantModel& plant, const CalibrationConfig& config,
                                const GainSchedule& initial, std::uint64_t seed);

}  // namespace extremctl::impedance
