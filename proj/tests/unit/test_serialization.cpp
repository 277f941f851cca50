#include <doctest.h>

#include <fstream>
#include <random>

#include "extremctl/error.hpp"
#include "extremctl/serialization.hpp"
#include "oracles.hpp"

using namespace extremctl;
using nlohmann::json;
using testsupport::TempDir;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kParse;
}

// Through text and back, as the CLI does.
template <typename T>
T through_text(const T& value) {
  return json::parse(json(value).dump()).get<T>();
}

}  // namespace

TEST_CASE("poses and link sets survive a text round trip exactly") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const se3::Pose p = testsupport::random_pose(rng);
    const se3::Pose back = through_text(p);
    CHECK(back.translation() == p.translation());
    CHECK((back.rotation().quaternion().coeffs() - p.rotation().quaternion().coeffs()).norm() < 1e-15);
  }
  mapping::LinkSet links;
  for (auto& p : links.poses) p = testsupport::random_pose(rng);
  const json j = links;
  CHECK(j.contains("right_foot"));
  CHECK(j["pelvis"]["q"].size() == 4);
  const mapping::LinkSet back = through_text(links);
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) CHECK(back.poses[i].translation() == links.poses[i].translation());
}

TEST_CASE("a calibration profile reloads to identical mappings") {
  std::mt19937_64 rng(2);
  mapping::RobotModel robot = mapping::reference_robot();
  robot.neutral_orientation[3] = testsupport::random_rotation(rng);
  const mapping::CalibrationProfile p = mapping::calibrate(mapping::reference_human_neutral(1.1), robot);
  const mapping::CalibrationProfile back = through_text(p);
  mapping::LinkSet frame = mapping::reference_human_neutral(1.1);
  frame[mapping::Link::kLeftHand] = testsupport::random_pose(rng);
  const auto a = mapping::map_frame(p, frame);
  const auto b = mapping::map_frame(back, frame);
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) {
    CHECK(a.poses[i].translation() == b.poses[i].translation());
    CHECK(a.poses[i].rotation().quaternion().coeffs() == b.poses[i].rotation().quaternion().coeffs());
  }
}

TEST_CASE("robot models default to identity orientations") {
  const json j = json::parse(R"({"pelvis_height": 0.8, "pelvis_to_torso": [0, 0, 0.2],
    "left": {"shoulder": [0, 0.2, 0.3], "arm_length": 0.5, "neutral_foot": [0, 0.1, 0]},
    "right": {"shoulder": [0, -0.2, 0.3], "arm_length": 0.5, "neutral_foot": [0, -0.1, 0]}})");
  const auto r = io::parse<mapping::RobotModel>(j, "robot");
  CHECK(r.pelvis_height == 0.8);
  CHECK(r.side(mapping::Side::kRight).shoulder.y() == -0.2);
  for (const auto& q : r.neutral_orientation) CHECK(q.angle() == 0.0);
}

TEST_CASE("plants and gains") {
  const plant::PlantModel chain = io::parse<plant::PlantModel>(json{{"preset", "chain4"}}, "plant");
  CHECK(chain.joint_count() == 4);
  const plant::PlantModel back = through_text(chain);
  CHECK(back.links[2].armature == chain.links[2].armature);
  CHECK(back.home == chain.home);

  const auto rod = io::parse<plant::PlantModel>(
      json::parse(R"({"kind": "planar_chain", "links": [{"mass": 3, "length": 0.4}]})"), "plant");
  CHECK(rod.links[0].com == doctest::Approx(0.2));
  CHECK(rod.links[0].inertia == doctest::Approx(3 * 0.16 / 12));

  const auto dec = io::parse<plant::PlantModel>(json::parse(R"({"kind": "decoupled", "inertia": [1, 2]})"), "plant");
  CHECK(dec.inertia == std::vector<double>{1, 2});

  const auto g = io::parse<plant::GainSchedule>(json::parse(R"({"joints": [{"kp": 100, "kd": 20, "eta": 0.9}]})"), "gains");
  CHECK(g.joints[0].eta == 0.9);
  CHECK(g.joints[0].feedforward_enabled);
  CHECK(through_text(g).joints[0].kd == 20.0);

  CHECK(code_of([] { (void)io::parse<plant::PlantModel>(json{{"preset", "chain9"}}, "plant"); }) == ErrorCode::kConfigInvalid);
  CHECK(code_of([] { (void)io::parse<plant::PlantModel>(json{{"kind", "decoupled"}, {"inertia", {-1.0}}}, "plant"); }) ==
        ErrorCode::kConfigInvalid);
  CHECK(code_of([] { (void)io::parse<plant::GainSchedule>(json{{"joints", {{{"kp", 1}}}}}, "gains"); }) ==
        ErrorCode::kConfigInvalid);
}

TEST_CASE("calibration configs merge onto the defaults") {
  const auto c = io::parse<impedance::CalibrationConfig>(json{{"sweeps", 7}, {"sampling", "independent"}}, "cfg");
  CHECK(c.sweeps == 7);
  CHECK(c.n_envs == 16);
  CHECK(c.sampling == impedance::Sampling::kIndependent);
  CHECK(code_of([] { (void)io::parse<impedance::CalibrationConfig>(json{{"n_envs", 1}}, "cfg"); }) ==
        ErrorCode::kConfigInvalid);
  CHECK(code_of([] { (void)io::parse<impedance::CalibrationConfig>(json{{"sampling", "lhs"}}, "cfg"); }) ==
        ErrorCode::kConfigInvalid);
}

TEST_CASE("pipeline configs override selected fields") {
  const auto c = io::parse<stream::PipelineConfig>(
      json::parse(R"({"eta": 0.4, "omega_n": 15, "network_delay": 0.03, "seed": 9,
                      "motion": {"amplitude": 0.05, "axis": [0, 0, 1]}})"),
      "pipeline");
  CHECK(c.gains.joints[0].eta == 0.4);
  CHECK(c.gains.joints[0].kp == doctest::Approx(225.0));
  CHECK(c.channel.delay == 0.03);
  CHECK(c.seed == 9);
  CHECK(c.motion.amplitude == 0.05);
  CHECK(c.motion.axis == mapping::Vec3::UnitZ());
  CHECK(c.capture_rate == 120.0);
}

TEST_CASE("result documents carry units in their keys") {
  plant::DelayPoint p;
  p.simulated_delay = 0.1234;
  const json j = p;
  CHECK(j["simulated_delay_ms"].get<double>() == doctest::Approx(123.4));
  CHECK(j.contains("overshoot_rad"));

  stream::LatencyBudget b;
  b.overall_ms = 50;
  const json jb = b;
  CHECK(jb.contains("transport_ms"));
  CHECK(jb.contains("accounts_for_overall"));
}

TEST_CASE("json files") {
  TempDir dir("json");
  io::write_json_file(json{{"a", 1}}, dir.file("a.json"));
  CHECK(io::read_json_file(dir.file("a.json"))["a"] == 1);
  std::ifstream in(dir.file("a.json"));
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text.back() == '\n');
  { std::ofstream(dir.file("bad.json")) << "{nope"; }
  CHECK(code_of([&] { (void)io::read_json_file(dir.file("bad.json")); }) == ErrorCode::kParse);
  CHECK(code_of([&] { (void)io::read_json_file(dir.file("missing.json")); }) == ErrorCode::kIo);
}

TEST_CASE("frame lines") {
  std::mt19937_64 rng(3);
  io::TimedLinks f;
  f.timestamp_ns = 123456789012ull;
  for (auto& p : f.links.poses) p = testsupport::random_pose(rng);
  const std::string line = io::format_frame_line(f);
  CHECK(line.find('\n') == std::string::npos);
  const io::TimedLinks back = io::parse_frame_line(line);
  CHECK(back.timestamp_ns == f.timestamp_ns);
  CHECK(back.links.poses[5].translation() == f.links.poses[5].translation());
  CHECK(code_of([] { (void)io::parse_frame_line("[1, 2]"); }) == ErrorCode::kParse);
  CHECK(code_of([] { (void)io::parse_frame_line("{\"pelvis\": 1}"); }) == ErrorCode::kParse);
  CHECK(code_of([] { (void)io::parse_frame_line("{oops"); }) == ErrorCode::kParse);
  CHECK(code_of([&] {
          json j = json::parse(line);
          j.erase("torso");
          (void)io::parse_frame_line(j.dump());
        }) == ErrorCode::kConfigInvalid);
}
