#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace extremctl::plant {

struct JointGains {
  double kp = 0.0;       // N*m/rad
  double kd = 0.0;       // N*m*s/rad
  double eta = 0.0;      // velocity feedforward ratio
  double omega_n = 0.0;  // rad/s, target natural frequency the gains came from
  double zeta = 1.0;
  // Indirect-drive joints run without feedforward regardless of eta.
  bool feedforward_enabled = true;

  double effective_eta() const { return feedforward_enabled ? eta : 0.0; }
};

struct GainSchedule {
  std::vector<JointGains> joints;

  std::size_t size() const { return joints.size(); }
  void validate() const;

  // kp = M * omega_n^2, kd = 2 * zeta * M * omega_n per joint.
  static GainSchedule from_impedance(std::span<const double> effective_inertia, double omega_n,
                                     double zeta, double eta);
};

enum class PlantKind { kDecoupledLinear, kPlanarChain };

struct ChainLink {
  double mass = 1.0;      // kg
  double length = 1.0;    // m, joint to next joint
  double com = 0.5;       // m, joint to center of mass
  double inertia = 0.0;   // kg*m^2 about the center of mass
  double armature = 0.0;  // kg*m^2 reflected rotor inertia at the joint
};

struct JointLimit {
  double lower = 0.0;
  double upper = 0.0;
};

struct PlantModel {
  PlantKind kind = PlantKind::kDecoupledLinear;
  std::vector<double> inertia;   // decoupled: per-joint inertia
  std::vector<ChainLink> links;  // planar chain: base to tip
  double gravity = 0.0;          // m/s^2 along -y of the chain plane
  double physics_dt = 1e-3;
  double lowpass_alpha = 0.1;
  std::vector<double> home;      // rest configuration; zeros when empty
  std::vector<JointLimit> limits;  // optional; empty means unlimited

  std::size_t joint_count() const;
  std::vector<double> home_configuration() const;
  void validate() const;

  static PlantModel decoupled(std::vector<double> inertia, double physics_dt = 1e-3);
  static PlantModel planar_chain(std::vector<ChainLink> links, std::vector<double> home = {},
                                 double gravity = 0.0, double physics_dt = 1e-3);
};

// Four-link planar arm (2.0, 1.5, 1.0, 0.5 kg; 0.4, 0.35, 0.3, 0.2 m) with
// uniform-rod links and geared joints, resting at (0.3, 0.4, 0.3, 0.2) rad.
PlantModel reference_chain();

struct JointState {
  double q = 0.0;
  double qdot = 0.0;
  double tau_applied = 0.0;
  double filtered_q = 0.0;
};

// Targets held constant between control ticks.
struct ControlTargets {
  std::vector<double> q;
  std::vector<double> qdot;
  double control_dt = 0.02;
};

// tau = kp (q_t - q) - kd qdot + eta kd qdot_t
double actuator_torque(const JointState& state, double q_target, double qdot_target,
                       const JointGains& gains);

// prev + alpha (sample - prev); throws BadAlpha unless 0 < alpha <= 1.
double lowpass(double prev, double sample, double alpha);

// Joint-space mass matrix at q (diagonal for decoupled joints).
Eigen::MatrixXd mass_matrix(const PlantModel& plant, std::span<const double> q);

struct ChainTerms {
  Eigen::MatrixXd mass;
  Eigen::VectorXd coriolis;  // C(q, qdot) qdot
  Eigen::VectorXd gravity;   // g(q)
};

ChainTerms chain_terms(const PlantModel& plant, std::span<const double> q,
                       std::span<const double> qdot);

// Kinetic plus gravitational potential energy.
double mechanical_energy(const PlantModel& plant, std::span<const JointState> states);

std::vector<JointState> initial_states(const PlantModel& plant, std::span<const double> q);

/// One semi-implicit Euler step of plant.physics_dt under the PD +
/// feedforward actuator. Throws NumericalBlowup if a velocity leaves
/// [-1e6, 1e6] or becomes non-finite.
std::vector<JointState> step(const PlantModel& plant, std::span<const JointState> states,
                             const ControlTargets& targets, const GainSchedule& gains);

// In-place variant used by long simulations.
void step_in_place(const PlantModel& plant, std::vector<JointState>& states,
                   const ControlTargets& targets, const GainSchedule& gains);

struct ReferenceSample {
  std::vector<double> q;
  std::optional<std::vector<double>> qdot;
};

using Reference = std::function<ReferenceSample(double t)>;

Reference sinusoid_reference(std::size_t joints, double amplitude, double omega, double offset = 0.0);
Reference ramp_reference(std::size_t joints, double rate);
Reference constant_reference(std::vector<double> q);
// Position-only copy of another reference (velocity must be differenced).
Reference positions_only(Reference ref);
// "sin:A,omega" | "ramp:rate" | "step:value" | "const:value"
Reference parse_reference(const std::string& spec, std::size_t joints);

/// When the target issued at a control tick is evaluated.
///
/// kMidInterval issues the reference at the middle of the upcoming hold
/// interval, so the held value has no mean lag against the reference.
/// kLookahead issues it for the end of the interval (the point the joint
/// should reach by the next update) and kAtTick at the tick itself.
enum class TargetTiming { kMidInterval, kLookahead, kAtTick };

double target_lead(TargetTiming timing, double control_dt);

struct EpisodeOptions {
  TargetTiming timing = TargetTiming::kMidInterval;
  // Start from the reference at t = 0 instead of the plant's home pose.
  bool start_on_reference = true;
};

// Uniformly sampled at physics_dt; sample i is the state at t[i] together
// with the target being held at that instant.
struct Episode {
  double dt = 1e-3;
  std::vector<double> t;
  std::vector<std::vector<double>> q_target;     // [joint][sample], held
  std::vector<std::vector<double>> q_measured;   // [joint][sample]
  std::vector<std::vector<double>> q_reference;  // [joint][sample], continuous
  std::vector<std::vector<double>> q_filtered;   // [joint][sample]
};

/// Drives the plant with targets sampled every control_dt and held across
/// the physics substeps. Velocity targets come from the reference when it
/// provides them and from the backward difference of successive position
/// targets otherwise. Throws InvalidArgument unless duration > 0 and
/// control_dt is a whole multiple of physics_dt.
Episode run_episode(const PlantModel& plant, const GainSchedule& gains, const Reference& reference,
                    double duration, double control_dt, const EpisodeOptions& options = {});

void write_episode_csv(const Episode& episode, const std::string& path);

}  // namespace extremctl::plant
