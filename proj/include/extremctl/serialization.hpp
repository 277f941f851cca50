#pragma once

#include <string>

#include <json.hpp>

#include "extremctl/error.hpp"

#include "extremctl/delay_study.hpp"
#include "extremctl/impedance.hpp"
#include "extremctl/latency.hpp"
#include "extremctl/mapping.hpp"
#include "extremctl/plant.hpp"
#include "extremctl/stream.hpp"

// JSON forms of the library types. Poses are {"q":[w,x,y,z],"p":[x,y,z]};
// link sets are objects keyed by link name. Parsing failures surface as
// Error(ConfigInvalid) naming the offending document.

namespace extremctl::se3 {
void to_json(nlohmann::json& j, const Rotation& r);
void from_json(const nlohmann::json& j, Rotation& r);
void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);
}  // namespace extremctl::se3

namespace extremctl::mapping {
void to_json(nlohmann::json& j, const LinkSet& s);
void from_json(const nlohmann::json& j, LinkSet& s);
void to_json(nlohmann::json& j, const RobotModel& r);
void from_json(const nlohmann::json& j, RobotModel& r);
void to_json(nlohmann::json& j, const CalibrationProfile& p);
void from_json(const nlohmann::json& j, CalibrationProfile& p);
}  // namespace extremctl::mapping

namespace extremctl::plant {
void to_json(nlohmann::json& j, const JointGains& g);
void from_json(const nlohmann::json& j, JointGains& g);
void to_json(nlohmann::json& j, const GainSchedule& g);
void from_json(const nlohmann::json& j, GainSchedule& g);
// Also accepts {"preset": "chain4"} for the reference chain.
void to_json(nlohmann::json& j, const PlantModel& p);
void from_json(const nlohmann::json& j, PlantModel& p);
void to_json(nlohmann::json& j, const DelayPoint& p);
}  // namespace extremctl::plant

namespace extremctl::impedance {
void to_json(nlohmann::json& j, const CalibrationConfig& c);
// Merges onto the defaults: absent keys keep their default values.
void from_json(const nlohmann::json& j, CalibrationConfig& c);
void to_json(nlohmann::json& j, const ImpedanceResult& r);
}  // namespace extremctl::impedance

namespace extremctl::latency {
void to_json(nlohmann::json& j, const LagEstimate& e);
void to_json(nlohmann::json& j, const LatencyReport& r);
}  // namespace extremctl::latency

namespace extremctl::stream {
void to_json(nlohmann::json& j, const LatencyBudget& b);
void to_json(nlohmann::json& j, const LinearFit& f);
// Merges onto PipelineConfig::defaults(); "eta", "omega_n", "zeta" and
// "inertia" rebuild the single-joint gain schedule when "gains" is absent.
void from_json(const nlohmann::json& j, PipelineConfig& c);
}  // namespace extremctl::stream

namespace extremctl::io {

nlohmann::json read_json_file(const std::string& path);
// Pretty-printed with a trailing newline.
void write_json_file(const nlohmann::json& j, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

// j.get<T>() with any failure reported as ConfigInvalid.
template <typename T>
T parse(const nlohmann::json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, what + ": " + e.what());
  }
}

// One LinkSet per line, each with an integer "timestamp_ns".
struct TimedLinks {
  std::uint64_t timestamp_ns = 0;
  mapping::LinkSet links;
};
TimedLinks parse_frame_line(const std::string& line);
std::string format_frame_line(const TimedLinks& frame);

}  // namespace extremctl::io
