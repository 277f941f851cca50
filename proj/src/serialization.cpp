#include "extremctl/serialization.hpp"

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace {

json vec(const extremctl::se3::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

extremctl::se3::Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

constexpr std::array<const char*, 2> kSideNames = {"left", "right"};

}  // namespace

namespace extremctl::se3 {

void to_json(json& j, const Rotation& r) { j = json::array({r.w(), r.x(), r.y(), r.z()}); }

void from_json(const json& j, Rotation& r) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("quaternion must be [w,x,y,z]");
  r = Rotation::from_wxyz(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

void to_json(json& j, const Pose& p) { j = json{{"q", p.rotation()}, {"p", vec(p.translation())}}; }

void from_json(const json& j, Pose& p) { p = Pose(j.at("q").get<Rotation>(), vec_from(j.at("p"))); }

}  // namespace extremctl::se3

namespace extremctl::mapping {

void to_json(json& j, const LinkSet& s) {
  j = json::object();
  for (std::size_t i = 0; i < kLinkCount; ++i) j[std::string(kLinkNames[i])] = s.poses[i];
}

void from_json(const json& j, LinkSet& s) {
  for (std::size_t i = 0; i < kLinkCount; ++i) s.poses[i] = j.at(std::string(kLinkNames[i])).get<Pose>();
}

void to_json(json& j, const RobotModel& r) {
  j = json{{"pelvis_height", r.pelvis_height}, {"pelvis_to_torso", vec(r.pelvis_to_torso)}};
  for (std::size_t s = 0; s < 2; ++s) {
    const ArmModel& a = r.sides[s];
    j[kSideNames[s]] = {{"shoulder", vec(a.shoulder)}, {"arm_length", a.arm_length}, {"neutral_foot", vec(a.neutral_foot)}};
  }
  json rot = json::object();
  for (std::size_t i = 0; i < kLinkCount; ++i) rot[std::string(kLinkNames[i])] = r.neutral_orientation[i];
  j["neutral_orientation"] = rot;
}

void from_json(const json& j, RobotModel& r) {
  r = RobotModel{};
  r.pelvis_height = j.at("pelvis_height").get<double>();
  r.pelvis_to_torso = vec_from(j.at("pelvis_to_torso"));
  for (std::size_t s = 0; s < 2; ++s) {
    const json& a = j.at(kSideNames[s]);
    r.sides[s].shoulder = vec_from(a.at("shoulder"));
    r.sides[s].arm_length = a.at("arm_length").get<double>();
    r.sides[s].neutral_foot = vec_from(a.at("neutral_foot"));
  }
  if (j.contains("neutral_orientation")) {
    const json& rot = j.at("neutral_orientation");
    for (std::size_t i = 0; i < kLinkCount; ++i) {
      const std::string name(kLinkNames[i]);
      if (rot.contains(name)) r.neutral_orientation[i] = rot.at(name).get<Rotation>();
    }
  }
  r.validate();
}

void to_json(json& j, const CalibrationProfile& p) {
  json offsets = json::object();
  for (std::size_t i = 0; i < kLinkCount; ++i) offsets[std::string(kLinkNames[i])] = p.rot_offsets[i];
  json human{{"pelvis_height", p.human.pelvis_height}};
  json feet = json::object();
  for (std::size_t s = 0; s < 2; ++s) {
    human[kSideNames[s]] = {{"shoulder", vec(p.human.shoulder[s])}, {"arm_length", p.human.arm_length[s]}};
    feet[kSideNames[s]] = vec(p.foot_offset[s]);
  }
  j = json{{"robot", p.robot}, {"rot_offsets", offsets}, {"human", human}, {"foot_offset", feet}};
}

void from_json(const json& j, CalibrationProfile& p) {
  p = CalibrationProfile{};
  p.robot = j.at("robot").get<RobotModel>();
  const json& offsets = j.at("rot_offsets");
  for (std::size_t i = 0; i < kLinkCount; ++i) {
    p.rot_offsets[i] = offsets.at(std::string(kLinkNames[i])).get<Rotation>();
  }
  const json& human = j.at("human");
  p.human.pelvis_height = human.at("pelvis_height").get<double>();
  for (std::size_t s = 0; s < 2; ++s) {
    p.human.shoulder[s] = vec_from(human.at(kSideNames[s]).at("shoulder"));
    p.human.arm_length[s] = human.at(kSideNames[s]).at("arm_length").get<double>();
    p.foot_offset[s] = vec_from(j.at("foot_offset").at(kSideNames[s]));
  }
  p.validate();
}

}  // namespace extremctl::mapping

namespace extremctl::plant {

void to_json(json& j, const JointGains& g) {
  j = json{{"kp", g.kp}, {"kd", g.kd}, {"eta", g.eta}, {"omega_n", g.omega_n}, {"zeta", g.zeta},
           {"feedforward_enabled", g.feedforward_enabled}};
}

void from_json(const json& j, JointGains& g) {
  g = JointGains{};
  g.kp = j.at("kp").get<double>();
  g.kd = j.at("kd").get<double>();
  maybe(j, "eta", g.eta);
  maybe(j, "omega_n", g.omega_n);
  maybe(j, "zeta", g.zeta);
  maybe(j, "feedforward_enabled", g.feedforward_enabled);
}

void to_json(json& j, const GainSchedule& g) { j = json{{"joints", g.joints}}; }

void from_json(const json& j, GainSchedule& g) {
  g.joints = j.at("joints").get<std::vector<JointGains>>();
  g.validate();
}

void to_json(json& j, const PlantModel& p) {
  j = json{{"kind", p.kind == PlantKind::kDecoupledLinear ? "decoupled" : "planar_chain"},
           {"gravity", p.gravity},
           {"physics_dt", p.physics_dt},
           {"lowpass_alpha", p.lowpass_alpha},
           {"home", p.home}};
  if (p.kind == PlantKind::kDecoupledLinear) {
    j["inertia"] = p.inertia;
  } else {
    json links = json::array();
    for (const auto& l : p.links) {
      links.push_back({{"mass", l.mass}, {"length", l.length}, {"com", l.com}, {"inertia", l.inertia},
                       {"armature", l.armature}});
    }
    j["links"] = links;
  }
  if (!p.limits.empty()) {
    json limits = json::array();
    for (const auto& l : p.limits) limits.push_back({l.lower, l.upper});
    j["limits"] = limits;
  }
}

void from_json(const json& j, PlantModel& p) {
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset != "chain4") throw std::invalid_argument("unknown plant preset '" + preset + "'");
    p = reference_chain();
  } else {
    p = PlantModel{};
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "decoupled") {
      p.kind = PlantKind::kDecoupledLinear;
      p.inertia = j.at("inertia").get<std::vector<double>>();
    } else if (kind == "planar_chain") {
      p.kind = PlantKind::kPlanarChain;
      for (const auto& l : j.at("links")) {
        ChainLink link;
        link.mass = l.at("mass").get<double>();
        link.length = l.at("length").get<double>();
        link.com = l.contains("com") ? l.at("com").get<double>() : 0.5 * link.length;
        link.inertia = l.contains("inertia") ? l.at("inertia").get<double>()
                                             : link.mass * link.length * link.length / 12.0;
        maybe(l, "armature", link.armature);
        p.links.push_back(link);
      }
    } else {
      throw std::invalid_argument("plant kind must be 'decoupled' or 'planar_chain'");
    }
    maybe(j, "home", p.home);
  }
  maybe(j, "gravity", p.gravity);
  maybe(j, "physics_dt", p.physics_dt);
  maybe(j, "lowpass_alpha", p.lowpass_alpha);
  if (j.contains("limits")) {
    p.limits.clear();
    for (const auto& l : j.at("limits")) p.limits.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
  }
  p.validate();
}

void to_json(json& j, const DelayPoint& p) {
  j = json{{"eta", p.eta},
           {"theory_delay_ms", p.theory_delay * 1e3},
           {"phase_delay_ms", p.phase_delay * 1e3},
           {"simulated_delay_ms", p.simulated_delay * 1e3},
           {"confidence", p.confidence},
           {"overshoot_rad", p.overshoot}};
}

}  // namespace extremctl::plant

namespace extremctl::impedance {

void to_json(json& j, const CalibrationConfig& c) {
  j = json{{"omega_n", c.omega_n},
           {"zeta", c.zeta},
           {"n_envs", c.n_envs},
           {"kp_low", c.kp_low},
           {"kp_high", c.kp_high},
           {"perturbation", c.perturbation},
           {"measure_window", c.measure_window},
           {"sweeps", c.sweeps},
           {"convergence_tol", c.convergence_tol},
           {"sampling", c.sampling == Sampling::kStratified ? "stratified" : "independent"}};
}

void from_json(const json& j, CalibrationConfig& c) {
  maybe(j, "omega_n", c.omega_n);
  maybe(j, "zeta", c.zeta);
  maybe(j, "n_envs", c.n_envs);
  maybe(j, "kp_low", c.kp_low);
  maybe(j, "kp_high", c.kp_high);
  maybe(j, "perturbation", c.perturbation);
  maybe(j, "measure_window", c.measure_window);
  maybe(j, "sweeps", c.sweeps);
  maybe(j, "convergence_tol", c.convergence_tol);
  maybe(j, "threads", c.threads);
  if (j.contains("sampling")) {
    const auto s = j.at("sampling").get<std::string>();
    if (s == "stratified") {
      c.sampling = Sampling::kStratified;
    } else if (s == "independent") {
      c.sampling = Sampling::kIndependent;
    } else {
      throw std::invalid_argument("sampling must be 'stratified' or 'independent'");
    }
  }
  c.validate();
}

void to_json(json& j, const ImpedanceResult& r) {
  json joints = json::array();
  for (const auto& e : r.estimates) {
    json envs = json::array();
    for (std::size_t i = 0; i < e.kp_samples.size(); ++i) {
      envs.push_back({{"kp", e.kp_samples[i]}, {"period_s", e.periods[i]}, {"m_eff", e.m_eff_samples[i]}});
    }
    joints.push_back({{"joint", e.joint}, {"m_eff", e.m_eff_mean}, {"kp", e.kp}, {"kd", e.kd}, {"envs", envs}});
  }
  json history = json::array();
  for (const auto& h : r.history) {
    history.push_back({{"sweep", h.sweep},
                       {"kp", h.kp},
                       {"kd", h.kd},
                       {"m_eff", h.m_eff},
                       {"max_relative_change", h.max_relative_change}});
  }
  j = json{{"converged", r.converged}, {"gains", r.gains}, {"joints", joints}, {"history", history}};
}

}  // namespace extremctl::impedance

namespace extremctl::latency {

void to_json(json& j, const LagEstimate& e) {
  j = json{{"lag_ms", e.lag * 1e3},
           {"lag_samples", e.lag_samples},
           {"peak_index", e.peak_index},
           {"confidence", e.confidence},
           {"low_confidence", e.low_confidence},
           {"max_lag_samples", e.max_lag_samples}};
}

void to_json(json& j, const LatencyReport& r) {
  j = json{{"lag", r.lag},
           {"rate_hz", r.signal_a.rate},
           {"signal_a", {{"t0_s", r.signal_a.t0}, {"samples", r.signal_a.samples}}},
           {"signal_b", {{"t0_s", r.signal_b.t0}, {"samples", r.signal_b.samples}}},
           {"correlation", r.lag.correlation},
           {"overlay", {{"t_s", r.overlay_t}, {"a", r.overlay_a}, {"b_aligned", r.overlay_b}}}};
}

}  // namespace extremctl::latency

namespace extremctl::stream {

void to_json(json& j, const LatencyBudget& b) {
  j = json{{"eta", b.eta},
           {"transport_ms", b.transport_ms},
           {"hold_ms", b.hold_ms},
           {"control_ms", b.control_ms},
           {"overall_ms", b.overall_ms},
           {"components_ms", b.components_ms()},
           {"accounts_for_overall", b.accounts_for_overall()},
           {"control_confidence", b.control_confidence},
           {"overall_confidence", b.overall_confidence}};
}

void to_json(json& j, const LinearFit& f) {
  j = json{{"slope", f.slope}, {"intercept_ms", f.intercept}, {"r_squared", f.r_squared}};
}

void from_json(const json& j, PipelineConfig& c) {
  double eta = 0.0, omega_n = 10.0, zeta = 1.0;
  maybe(j, "eta", eta);
  maybe(j, "omega_n", omega_n);
  maybe(j, "zeta", zeta);
  c = PipelineConfig::defaults(eta);
  maybe(j, "capture_rate", c.capture_rate);
  maybe(j, "control_rate", c.control_rate);
  maybe(j, "lowlevel_rate", c.lowlevel_rate);
  maybe(j, "network_delay", c.channel.delay);
  maybe(j, "jitter_std", c.channel.jitter_std);
  maybe(j, "drop_prob", c.channel.drop_prob);
  maybe(j, "inertia", c.inertia);
  maybe(j, "seed", c.seed);
  if (j.contains("human_neutral")) c.human_neutral = j.at("human_neutral").get<mapping::LinkSet>();
  if (j.contains("profile")) {
    c.profile = j.at("profile").get<mapping::CalibrationProfile>();
  } else if (j.contains("robot") || j.contains("human_neutral")) {
    const auto robot = j.contains("robot") ? j.at("robot").get<mapping::RobotModel>() : mapping::reference_robot();
    c.profile = mapping::calibrate(c.human_neutral, robot);
  }
  if (j.contains("gains")) {
    c.gains = j.at("gains").get<plant::GainSchedule>();
  } else {
    const std::array<double, 1> m{c.inertia};
    c.gains = plant::GainSchedule::from_impedance(m, omega_n, zeta, eta);
  }
  if (j.contains("motion")) {
    const json& m = j.at("motion");
    maybe(m, "amplitude", c.motion.amplitude);
    maybe(m, "omega", c.motion.omega);
    maybe(m, "duration", c.motion.duration);
    if (m.contains("axis")) c.motion.axis = vec_from(m.at("axis")).normalized();
  }
  c.validate();
}

}  // namespace extremctl::stream

namespace extremctl::io {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, "'" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

void write_json_file(const json& j, const std::string& path) { write_text_file(j.dump(2) + "\n", path); }

TimedLinks parse_frame_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("frame line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("timestamp_ns")) {
    throw Error(ErrorCode::kParse, "frame line needs an object with timestamp_ns");
  }
  TimedLinks f;
  f.timestamp_ns = parse<std::uint64_t>(j.at("timestamp_ns"), "frame timestamp_ns");
  f.links = parse<mapping::LinkSet>(j, "frame links");
  return f;
}

std::string format_frame_line(const TimedLinks& frame) {
  json j = frame.links;
  j["timestamp_ns"] = frame.timestamp_ns;
  return j.dump();
}

}  // namespace extremctl::io
