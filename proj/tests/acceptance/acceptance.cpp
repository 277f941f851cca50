// Acceptance checks for the toolkit. Prints one PASS/FAIL line per criterion
// and exits non-zero if any criterion not listed in --expected-fail fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "extremctl/delay_study.hpp"
#include "extremctl/error.hpp"
#include "extremctl/feedforward.hpp"
#include "extremctl/impedance.hpp"
#include "extremctl/latency.hpp"
#include "extremctl/mapping.hpp"
#include "extremctl/stream.hpp"
#include "oracles.hpp"
#include "synthetic_video.hpp"

using namespace extremctl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

Outcome delay_curve() {
  const std::vector<double> etas{0.0, 0.2, 0.4, 0.6, 0.8, 0.9};
  bool pass = true;
  double worst = 0.0;
  double at_zero = 0.0;
  for (const double wn : {10.0, 15.0}) {
    plant::DelayStudyConfig cfg;
    cfg.omega_n = wn;
    const double tol = cfg.control_dt / 2.0 + 0.005;
    for (const auto& p : plant::delay_curve(cfg, etas)) {
      const double err = std::abs(p.simulated_delay - p.theory_delay);
      worst = std::max(worst, err);
      pass = pass && err <= tol;
      if (wn == 10.0 && p.eta == 0.0) at_zero = p.simulated_delay;
    }
  }
  pass = pass && at_zero >= 0.180 && at_zero <= 0.230;
  return {pass, fmt("worst |measured - 2(1-eta)/wn| = %.1f ms (limit 15.0), wn=10 eta=0 delay %.1f ms", worst * 1e3,
                    at_zero * 1e3)};
}

Outcome delay_upturn() {
  const plant::DelayStudyConfig cfg;
  const plant::DelayPoint near = plant::simulate_delay(cfg, 0.9);
  const plant::DelayPoint full = plant::simulate_delay(cfg, 1.0);
  const bool pass = full.simulated_delay > near.simulated_delay && full.overshoot > 0.0;
  return {pass, fmt("delay eta=0.9 %.2f ms, eta=1.0 %.2f ms; overshoot eta=1.0 %.3g rad", near.simulated_delay * 1e3,
                    full.simulated_delay * 1e3, full.overshoot)};
}

Outcome feedforward_bound() {
  const double bound = plant::max_feedforward_ratio(10.0, 0.02);
  return {bound == 0.95, fmt("max ratio %.17g", bound)};
}

Outcome impedance_consistency() {
  using namespace impedance;
  const plant::PlantModel chain = plant::reference_chain();
  CalibrationConfig cfg;
  cfg.sweeps = 10;
  std::vector<std::vector<double>> kp(chain.joint_count());
  bool converged = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ImpedanceResult r = calibrate_chain(chain, cfg, random_initial_gains(chain, cfg, 100 + s), 200 + s);
    converged = converged && r.converged;
    for (std::size_t j = 0; j < kp.size(); ++j) kp[j].push_back(r.gains.joints[j].kp);
  }
  double spread = 0.0;
  for (const auto& v : kp) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    spread = std::max(spread, (*hi - *lo) / *lo);
  }

  const std::vector<double> masses{0.5, 1.0, 2.0, 4.0};
  const plant::PlantModel dec = plant::PlantModel::decoupled(masses);
  const ImpedanceResult d = calibrate_chain(dec, CalibrationConfig{}, random_initial_gains(dec, {}, 7), 8);
  double mass_err = 0.0;
  for (std::size_t j = 0; j < masses.size(); ++j) mass_err = std::max(mass_err, rel(d.estimates[j].m_eff_mean, masses[j]));

  const bool pass = converged && spread < 0.05 && mass_err < 0.02;
  return {pass, fmt("chain kp spread over 5 starts %.2f%% (limit 5%%), converged %s; decoupled mass error %.2f%% "
                    "(limit 2%%)",
                    spread * 100, converged ? "yes" : "no", mass_err * 100)};
}

Outcome gain_scaling() {
  using namespace impedance;
  const plant::PlantModel dec = plant::PlantModel::decoupled({0.7, 1.5, 3.0});
  CalibrationConfig lo, hi;
  hi.omega_n = 15.0;
  const plant::GainSchedule init = random_initial_gains(dec, lo, 21);
  const ImpedanceResult a = calibrate_chain(dec, lo, init, 22);
  const ImpedanceResult b = calibrate_chain(dec, hi, init, 22);
  double worst = 0.0;
  for (std::size_t j = 0; j < 3; ++j) worst = std::max(worst, rel(b.gains.joints[j].kp / a.gains.joints[j].kp, 2.25));
  return {worst < 0.01, fmt("worst kp ratio deviation from 2.25: %.3f%% (limit 1%%)", worst * 100)};
}

double max_gap(const mapping::LinkSet& a, const mapping::LinkSet& b, bool rotation) {
  double m = 0.0;
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) {
    m = std::max(m, rotation ? testsupport::rotation_gap(a.poses[i], b.poses[i])
                             : testsupport::translation_gap(a.poses[i], b.poses[i]));
  }
  return m;
}

mapping::LinkSet scaled(const mapping::LinkSet& s, double k) {
  mapping::LinkSet out;
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) {
    out.poses[i] = se3::Pose(s.poses[i].rotation(), k * s.poses[i].translation());
  }
  return out;
}

Outcome mapping_consistency() {
  using namespace mapping;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> scale(0.7, 1.3), nudge(-0.1, 0.1);
  double t_err = 0.0, r_err = 0.0, inv_t = 0.0, inv_r = 0.0;
  for (int i = 0; i < 100; ++i) {
    RobotModel robot = reference_robot();
    LinkSet neutral = reference_human_neutral(scale(rng));
    // Hand and foot orientations are free in the calibration stance.
    for (const Link l : {Link::kLeftHand, Link::kRightHand, Link::kLeftFoot, Link::kRightFoot}) {
      robot.neutral_orientation[static_cast<std::size_t>(l)] = testsupport::random_rotation(rng);
      neutral[l] = se3::Pose(testsupport::random_rotation(rng), neutral[l].translation());
    }
    const CalibrationProfile profile = calibrate(neutral, robot);
    const Vec3 pelvis = neutral[Link::kPelvis].translation() * profile.scale();
    const LinkSet expect = robot_neutral(robot, Eigen::Vector2d(pelvis.x(), pelvis.y()));
    const LinkSet out = map_frame(profile, neutral);
    t_err = std::max(t_err, max_gap(out, expect, false));
    r_err = std::max(r_err, max_gap(out, expect, true));

    LinkSet frame = neutral;
    for (auto& p : frame.poses) {
      p = se3::Pose(p.rotation() * testsupport::random_rotation(rng),
                    p.translation() + Vec3(nudge(rng), nudge(rng), nudge(rng)));
    }
    const double k = scale(rng);
    const LinkSet a = map_frame(profile, frame);
    const LinkSet b = map_frame(calibrate(scaled(neutral, k), robot), scaled(frame, k));
    inv_t = std::max(inv_t, max_gap(a, b, false));
    inv_r = std::max(inv_r, max_gap(a, b, true));
  }
  const bool pass = t_err < 1e-9 && r_err < 1e-9 && inv_t < 1e-9 && inv_r < 1e-9;
  return {pass, fmt("neutral reproduction %.1e m / %.1e rad; scale invariance %.1e m / %.1e rad (limit 1e-9)", t_err,
                    r_err, inv_t, inv_r)};
}

double rendered_lag(testsupport::VideoSpec spec, double delay_frames) {
  spec.delay_frames = 0.0;
  const auto a = testsupport::render_video(spec);
  spec.delay_frames = delay_frames;
  const auto b = testsupport::render_video(spec);
  const latency::RegionSpec region = testsupport::interior_region(spec);
  return latency::analyze_frames(a, b, region, region, spec.fps).lag.lag;
}

Outcome latency_fidelity() {
  testsupport::VideoSpec side;
  const double truth = 4.0 / side.fps;
  const double lag_side = rendered_lag(side, 4.0);

  // A second view of the same motion: other axis, texture, exposure and noise.
  testsupport::VideoSpec front;
  front.vertical = true;
  front.texture = 3;
  front.contrast = 0.7;
  front.brightness = 15.0;
  front.noise_std = 1.5;
  front.seed = 9;
  const double lag_front = rendered_lag(front, 4.0);

  const double frame = 1.0 / side.fps;
  const bool pass = std::abs(lag_side - truth) <= frame / 2.0 && std::abs(lag_front - truth) <= frame / 2.0 &&
                    std::abs(lag_side - lag_front) <= frame;
  return {pass, fmt("truth %.2f ms; view A %.2f ms, view B %.2f ms (limit +-8.33 ms, views within 16.67 ms)",
                    truth * 1e3, lag_side * 1e3, lag_front * 1e3)};
}

Outcome pipeline_budget() {
  using namespace stream;
  PipelineConfig cfg = PipelineConfig::defaults(0.6);
  const LatencyBudget base = latency_budget(run_pipeline(cfg), cfg.control_rate, 0.6);
  cfg.channel.delay = 0.030;
  const LatencyBudget delayed = latency_budget(run_pipeline(cfg), cfg.control_rate, 0.6);
  const double shift = delayed.overall_ms - base.overall_ms;

  std::vector<double> control;
  for (const double eta : {0.0, 0.2, 0.4, 0.6, 0.8, 0.9}) {
    const PipelineConfig c = PipelineConfig::defaults(eta);
    control.push_back(latency_budget(run_pipeline(c), c.control_rate, eta).control_ms);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < control.size(); ++i) decreasing = decreasing && control[i] < control[i - 1];

  // Regression fixture with a small deterministic measurement wobble.
  std::vector<double> x, y;
  for (std::size_t i = 0; i < 12; ++i) {
    const double c = 40.0 + 15.0 * static_cast<double>(i);
    x.push_back(c);
    y.push_back(0.58 * c + 32.0 + 0.2 * std::sin(1.7 * static_cast<double>(i)));
  }
  const LinearFit fit = fit_line(x, y);
  const bool fit_ok = rel(fit.slope, 0.58) < 0.01 && rel(fit.intercept, 32.0) < 0.01 && fit.r_squared > 0.999;

  const bool pass = std::abs(shift - 30.0) <= 5.0 && decreasing && fit_ok;
  std::string sweep;
  for (double c : control) sweep += fmt("%s%.1f", sweep.empty() ? "" : " ", c);
  return {pass, fmt("30 ms injection shifts overall by %.2f ms; control sweep [%s] ms %s; fixture fit slope %.4f "
                    "intercept %.3f R2 %.5f",
                    shift, sweep.c_str(), decreasing ? "decreasing" : "NOT decreasing", fit.slope, fit.intercept,
                    fit.r_squared)};
}

template <typename F>
bool raises(ErrorCode code, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

Outcome codec() {
  using namespace stream;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::uint32_t> seq;
  std::uniform_int_distribution<std::uint64_t> ts;
  std::size_t exact = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    mapping::LinkSet links;
    for (auto& p : links.poses) p = testsupport::random_pose(rng, 5.0);
    const PoseFrame f = PoseFrame::from_links(links, seq(rng), ts(rng));
    const FrameBytes bytes = encode_frame(f);
    const PoseFrame back = decode_frame(bytes);
    if (back == f && encode_frame(back) == bytes) ++exact;
  }

  const FrameBytes good = encode_frame(PoseFrame{});
  const std::vector<std::uint8_t> v(good.begin(), good.end());
  int triggered = 0;
  triggered += raises(ErrorCode::kShortRead, [&] { (void)decode_frame(std::span(v).first(kFrameSize - 1)); });
  auto longer = v;
  longer.push_back(0);
  triggered += raises(ErrorCode::kParse, [&] { (void)decode_frame(longer); });
  auto magic = v;
  magic[0] ^= 0xFF;
  triggered += raises(ErrorCode::kBadMagic, [&] { (void)decode_frame(magic); });
  auto version = v;
  version[4] = 99;
  triggered += raises(ErrorCode::kBadVersion, [&] { (void)decode_frame(version); });
  PoseFrame skewed;
  skewed.links[1].quaternion = {0.5, 0.5, 0.5, 0.0};
  triggered += raises(ErrorCode::kNonUnitQuaternion, [&] { (void)decode_frame(encode_frame(skewed)); });

  const bool pass = exact == n && triggered == 5;
  return {pass, fmt("%zu/%zu frames bit-exact; %d/5 malformed-input errors raised", exact, n, triggered)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> expected_fail;
  app.add_option("--expected-fail", expected_fail, "Criteria reported but not counted as failures")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> tolerated(expected_fail.begin(), expected_fail.end());

  const std::vector<Criterion> criteria{
      {1, "feedforward delay curve", delay_curve},
      {2, "delay upturn near full feedforward", delay_upturn},
      {3, "feedforward bound", feedforward_bound},
      {4, "impedance calibration consistency", impedance_consistency},
      {5, "gain scaling law", gain_scaling},
      {6, "mapping consistency", mapping_consistency},
      {7, "latency estimator fidelity", latency_fidelity},
      {8, "pipeline latency budget", pipeline_budget},
      {9, "wire codec", codec},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool tolerate = tolerated.count(c.id) > 0;
    std::printf("%s %d %s: %s [%.1f s]%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs,
                !o.pass && tolerate ? " (expected)" : "");
    std::fflush(stdout);
    if (!o.pass && !tolerate) ++unexpected;
    if (secs > 60.0) {
      std::printf("FAIL %d %s: exceeded the 60 s budget\n", c.id, c.name.c_str());
      if (!tolerate) ++unexpected;
    }
  }
  return unexpected == 0 ? 0 : 1;
}
