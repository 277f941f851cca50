#include "extremctl/plant.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "extremctl/error.hpp"

namespace extremctl::plant {
namespace {

constexpr double kMaxVelocity = 1e6;

void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw Error(code, message);
}

}  // namespace

void GainSchedule::validate() const {
  for (const JointGains& g : joints) {
    require(g.kp >= 0.0 && g.kd >= 0.0, ErrorCode::kConfigInvalid, "gains kp, kd must be >= 0");
    require(g.eta >= 0.0 && g.eta <= 1.0, ErrorCode::kConfigInvalid, "eta must lie in [0, 1]");
  }
}

GainSchedule GainSchedule::from_impedance(std::span<const double> effective_inertia,
                                          double omega_n, double zeta, double eta) {
  GainSchedule out;
  for (double m : effective_inertia) {
    out.joints.push_back({m * omega_n * omega_n, 2.0 * zeta * m * omega_n, eta, omega_n, zeta, true});
  }
  return out;
}

std::size_t PlantModel::joint_count() const {
  return kind == PlantKind::kDecoupledLinear ? inertia.size() : links.size();
}

std::vector<double> PlantModel::home_configuration() const {
  if (home.empty()) return std::vector<double>(joint_count(), 0.0);
  return home;
}

void PlantModel::validate() const {
  require(physics_dt > 0.0, ErrorCode::kConfigInvalid, "physics_dt must be positive");
  require(lowpass_alpha > 0.0 && lowpass_alpha <= 1.0, ErrorCode::kConfigInvalid,
          "lowpass_alpha must lie in (0, 1]");
  require(joint_count() > 0, ErrorCode::kConfigInvalid, "plant has no joints");
  if (kind == PlantKind::kDecoupledLinear) {
    for (double m : inertia) require(m > 0.0, ErrorCode::kConfigInvalid, "inertia must be positive");
  } else {
    for (const ChainLink& l : links) {
      require(l.mass > 0.0 && l.length > 0.0 && l.inertia >= 0.0 && l.armature >= 0.0,
              ErrorCode::kConfigInvalid, "chain link parameters out of range");
    }
  }
  require(home.empty() || home.size() == joint_count(), ErrorCode::kConfigInvalid,
          "home configuration size mismatch");
  require(limits.empty() || limits.size() == joint_count(), ErrorCode::kConfigInvalid,
          "joint limit count mismatch");
}

PlantModel PlantModel::decoupled(std::vector<double> inertia, double physics_dt) {
  PlantModel p;
  p.kind = PlantKind::kDecoupledLinear;
  p.inertia = std::move(inertia);
  p.physics_dt = physics_dt;
  return p;
}

PlantModel PlantModel::planar_chain(std::vector<ChainLink> links, std::vector<double> home,
                                    double gravity, double physics_dt) {
  PlantModel p;
  p.kind = PlantKind::kPlanarChain;
  p.links = std::move(links);
  p.home = std::move(home);
  p.gravity = gravity;
  p.physics_dt = physics_dt;
  return p;
}

double actuator_torque(const JointState& state, double q_target, double qdot_target,
                       const JointGains& gains) {
  return gains.kp * (q_target - state.q) - gains.kd * state.qdot +
         gains.effective_eta() * gains.kd * qdot_target;
}

double lowpass(double prev, double sample, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kBadAlpha, "low-pass coefficient must lie in (0, 1]");
  }
  return prev + alpha * (sample - prev);
}

ChainTerms chain_terms(const PlantModel& plant, std::span<const double> q,
                       std::span<const double> qdot) {
  const std::size_t n = plant.links.size();
  ChainTerms out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};

  std::vector<double> th(n), thd(n), s(n), c(n);
  double acc = 0.0, accd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += q[i];
    accd += qdot[i];
    th[i] = acc;
    thd[i] = accd;
    s[i] = std::sin(acc);
    c[i] = std::cos(acc);
  }

  Eigen::MatrixXd jac(2, n);
  for (std::size_t k = 0; k < n; ++k) {
    const ChainLink& link = plant.links[k];
    jac.setZero();
    // Column j of the COM Jacobian sums the lever arms from joint j outward.
    double tail_s = link.com * s[k];
    double tail_c = link.com * c[k];
    for (std::size_t j = k + 1; j-- > 0;) {
      jac(0, j) = -tail_s;
      jac(1, j) = tail_c;
      if (j > 0) {
        tail_s += plant.links[j - 1].length * s[j - 1];
        tail_c += plant.links[j - 1].length * c[j - 1];
      }
    }
    // COM acceleration with qddot = 0 (centripetal terms only).
    double ax = -link.com * c[k] * thd[k] * thd[k];
    double ay = -link.com * s[k] * thd[k] * thd[k];
    for (std::size_t i = 0; i < k; ++i) {
      const double w2 = thd[i] * thd[i];
      ax -= plant.links[i].length * c[i] * w2;
      ay -= plant.links[i].length * s[i] * w2;
    }
    const auto jk = jac.leftCols(k + 1);
    out.mass.topLeftCorner(k + 1, k + 1).noalias() += link.mass * jk.transpose() * jk;
    out.mass.topLeftCorner(k + 1, k + 1).array() += link.inertia;
    out.coriolis.head(k + 1).noalias() += link.mass * jk.transpose() * Eigen::Vector2d(ax, ay);
    out.gravity.head(k + 1).noalias() += link.mass * plant.gravity * jk.row(1).transpose();
  }
  for (std::size_t i = 0; i < n; ++i) out.mass(i, i) += plant.links[i].armature;
  return out;
}

Eigen::MatrixXd mass_matrix(const PlantModel& plant, std::span<const double> q) {
  if (plant.kind == PlantKind::kDecoupledLinear) {
    return Eigen::Map<const Eigen::VectorXd>(plant.inertia.data(),
                                             static_cast<Eigen::Index>(plant.inertia.size()))
        .asDiagonal();
  }
  const std::vector<double> zero(q.size(), 0.0);
  return chain_terms(plant, q, zero).mass;
}

double mechanical_energy(const PlantModel& plant, std::span<const JointState> states) {
  const std::size_t n = states.size();
  std::vector<double> q(n), qd(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = states[i].q;
    qd[i] = states[i].qdot;
  }
  const Eigen::Map<const Eigen::VectorXd> v(qd.data(), static_cast<Eigen::Index>(n));
  const double kinetic = 0.5 * v.dot(mass_matrix(plant, q) * v);
  if (plant.kind == PlantKind::kDecoupledLinear || plant.gravity == 0.0) return kinetic;

  double potential = 0.0, th = 0.0, y_joint = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    th += q[k];
    const ChainLink& link = plant.links[k];
    potential += link.mass * plant.gravity * (y_joint + link.com * std::sin(th));
    y_joint += link.length * std::sin(th);
  }
  return kinetic + potential;
}

std::vector<JointState> initial_states(const PlantModel& plant, std::span<const double> q) {
  std::vector<JointState> out(plant.joint_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].q = q[i];
    out[i].filtered_q = q[i];
  }
  return out;
}

void step_in_place(const PlantModel& plant, std::vector<JointState>& states,
                   const ControlTargets& targets, const GainSchedule& gains) {
  const std::size_t n = states.size();
  const double dt = plant.physics_dt;
  for (std::size_t i = 0; i < n; ++i) {
    states[i].tau_applied = actuator_torque(states[i], targets.q[i], targets.qdot[i], gains.joints[i]);
  }

  if (plant.kind == PlantKind::kDecoupledLinear) {
    for (std::size_t i = 0; i < n; ++i) {
      states[i].qdot += states[i].tau_applied / plant.inertia[i] * dt;
    }
  } else {
    std::vector<double> q(n), qd(n);
    Eigen::VectorXd tau(n);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = states[i].q;
      qd[i] = states[i].qdot;
      tau[i] = states[i].tau_applied;
    }
    const ChainTerms terms = chain_terms(plant, q, qd);
    const Eigen::VectorXd qdd = terms.mass.ldlt().solve(tau - terms.coriolis - terms.gravity);
    for (std::size_t i = 0; i < n; ++i) states[i].qdot += qdd[i] * dt;
  }

  for (std::size_t i = 0; i < n; ++i) {
    JointState& s = states[i];
    if (!std::isfinite(s.qdot) || std::abs(s.qdot) > kMaxVelocity) {
      throw Error(ErrorCode::kNumericalBlowup, "joint " + std::to_string(i) + " velocity diverged");
    }
    s.q += s.qdot * dt;
    if (!plant.limits.empty()) {
      const JointLimit& lim = plant.limits[i];
      if (s.q < lim.lower) {
        s.q = lim.lower;
        if (s.qdot < 0.0) s.qdot = 0.0;
      } else if (s.q > lim.upper) {
        s.q = lim.upper;
        if (s.qdot > 0.0) s.qdot = 0.0;
      }
    }
    s.filtered_q = lowpass(s.filtered_q, s.q, plant.lowpass_alpha);
  }
}

std::vector<JointState> step(const PlantModel& plant, std::span<const JointState> states,
                             const ControlTargets& targets, const GainSchedule& gains) {
  std::vector<JointState> next(states.begin(), states.end());
  step_in_place(plant, next, targets, gains);
  return next;
}

Reference sinusoid_reference(std::size_t joints, double amplitude, double omega, double offset) {
  return [=](double t) {
    return ReferenceSample{std::vector<double>(joints, offset + amplitude * std::sin(omega * t)),
                           std::vector<double>(joints, amplitude * omega * std::cos(omega * t))};
  };
}

Reference ramp_reference(std::size_t joints, double rate) {
  return [=](double t) {
    return ReferenceSample{std::vector<double>(joints, rate * t), std::vector<double>(joints, rate)};
  };
}

Reference constant_reference(std::vector<double> q) {
  return [q = std::move(q)](double) {
    return ReferenceSample{q, std::vector<double>(q.size(), 0.0)};
  };
}

Reference positions_only(Reference ref) {
  return [ref = std::move(ref)](double t) { return ReferenceSample{ref(t).q, std::nullopt}; };
}

Reference parse_reference(const std::string& spec, std::size_t joints) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kParse, "reference spec must look like kind:args, got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  std::vector<double> args;
  std::stringstream ss(spec.substr(colon + 1));
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      args.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad number '" + tok + "' in reference spec");
    }
  }
  if (kind == "sin" && args.size() == 2) return sinusoid_reference(joints, args[0], args[1]);
  if (kind == "ramp" && args.size() == 1) return ramp_reference(joints, args[0]);
  if ((kind == "step" || kind == "const") && args.size() == 1) {
    return constant_reference(std::vector<double>(joints, args[0]));
  }
  throw Error(ErrorCode::kParse, "unknown reference spec '" + spec + "'");
}

PlantModel reference_chain() {
  const std::array<double, 4> mass{2.0, 1.5, 1.0, 0.5};
  const std::array<double, 4> length{0.4, 0.35, 0.3, 0.2};
  const std::array<double, 4> armature{0.4, 0.25, 0.1, 0.04};
  std::vector<ChainLink> links;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    links.push_back({mass[i], length[i], 0.5 * length[i], mass[i] * length[i] * length[i] / 12.0, armature[i]});
  }
  return PlantModel::planar_chain(std::move(links), {0.3, 0.4, 0.3, 0.2});
}

double target_lead(TargetTiming timing, double control_dt) {
  switch (timing) {
    case TargetTiming::kMidInterval:
      return 0.5 * control_dt;
    case TargetTiming::kLookahead:
      return control_dt;
    case TargetTiming::kAtTick:
      break;
  }
  return 0.0;
}

Episode run_episode(const PlantModel& plant, const GainSchedule& gains, const Reference& reference,
                    double duration, double control_dt, const EpisodeOptions& options) {
  plant.validate();
  gains.validate();
  const std::size_t n = plant.joint_count();
  require(gains.size() == n, ErrorCode::kConfigInvalid, "gain schedule size does not match plant");
  require(duration > 0.0, ErrorCode::kInvalidArgument, "duration must be positive");
  const double ratio = control_dt / plant.physics_dt;
  const auto substeps = static_cast<std::size_t>(std::llround(ratio));
  require(substeps >= 1 && std::abs(ratio - static_cast<double>(substeps)) < 1e-9 * ratio,
          ErrorCode::kInvalidArgument, "control_dt must be a multiple of physics_dt");
  const auto samples = static_cast<std::size_t>(std::llround(duration / plant.physics_dt));

  Episode ep;
  ep.dt = plant.physics_dt;
  ep.t.reserve(samples);
  for (auto* series : {&ep.q_target, &ep.q_measured, &ep.q_reference, &ep.q_filtered}) {
    series->assign(n, {});
    for (auto& s : *series) s.reserve(samples);
  }

  std::vector<JointState> states;
  if (options.start_on_reference) {
    const ReferenceSample r0 = reference(0.0);
    states = initial_states(plant, r0.q);
    if (r0.qdot) {
      for (std::size_t i = 0; i < n; ++i) states[i].qdot = (*r0.qdot)[i];
    }
  } else {
    states = initial_states(plant, plant.home_configuration());
  }

  const double lead = target_lead(options.timing, control_dt);
  ControlTargets targets{std::vector<double>(n), std::vector<double>(n), control_dt};
  std::vector<double> previous_target = reference(lead - control_dt).q;

  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) * plant.physics_dt;
    if (i % substeps == 0) {
      const ReferenceSample r = reference(t + lead);
      targets.q = r.q;
      if (r.qdot) {
        targets.qdot = *r.qdot;
      } else {
        for (std::size_t j = 0; j < n; ++j) targets.qdot[j] = (r.q[j] - previous_target[j]) / control_dt;
      }
      previous_target = r.q;
    }
    const ReferenceSample truth = reference(t);
    ep.t.push_back(t);
    for (std::size_t j = 0; j < n; ++j) {
      ep.q_target[j].push_back(targets.q[j]);
      ep.q_measured[j].push_back(states[j].q);
      ep.q_reference[j].push_back(truth.q[j]);
      ep.q_filtered[j].push_back(states[j].filtered_q);
    }
    step_in_place(plant, states, targets, gains);
  }
  return ep;
}

void write_episode_csv(const Episode& episode, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  const std::size_t n = episode.q_measured.size();
  const auto suffix = [n](std::size_t j) { return n == 1 ? std::string() : "_" + std::to_string(j); };
  out << "t";
  for (std::size_t j = 0; j < n; ++j) {
    out << ",q_target" << suffix(j) << ",q_measured" << suffix(j) << ",q_reference" << suffix(j);
  }
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < episode.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", episode.t[i]);
    out << buf;
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g", episode.q_target[j][i],
                    episode.q_measured[j][i], episode.q_reference[j][i]);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace extremctl::plant
