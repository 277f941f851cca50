#include "extremctl/stream.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "extremctl/error.hpp"

namespace extremctl::stream {
namespace {

constexpr double kQuaternionTolerance = 1e-6;

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

mapping::LinkSet human_at(const mapping::LinkSet& neutral, const MotionSpec& motion, double t) {
  mapping::LinkSet h = neutral;
  const auto& hand = neutral[mapping::Link::kRightHand];
  const mapping::Vec3 dir = neutral[mapping::Link::kTorso].rotation().apply(motion.axis);
  h[mapping::Link::kRightHand] =
      mapping::Pose(hand.rotation(), hand.translation() + dir * (motion.amplitude * std::sin(motion.omega * t)));
  return h;
}

latency::MotionSignal signal_after(const std::vector<double>& v, double rate, double dt, double settle) {
  const auto skip = std::min(v.size() - std::min<std::size_t>(v.size(), 2),
                             static_cast<std::size_t>(std::llround(settle / dt)));
  latency::MotionSignal s;
  s.samples.assign(v.begin() + static_cast<std::ptrdiff_t>(skip), v.end());
  s.rate = rate;
  s.t0 = static_cast<double>(skip) * dt;
  return s;
}

}  // namespace

PoseFrame PoseFrame::from_links(const mapping::LinkSet& links, std::uint32_t seq, std::uint64_t timestamp_ns) {
  PoseFrame f;
  f.seq = seq;
  f.timestamp_ns = timestamp_ns;
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) {
    const auto& p = links.poses[i];
    f.links[i].translation = {p.translation().x(), p.translation().y(), p.translation().z()};
    f.links[i].quaternion = {p.rotation().w(), p.rotation().x(), p.rotation().y(), p.rotation().z()};
  }
  return f;
}

mapping::LinkSet PoseFrame::to_links() const {
  mapping::LinkSet out;
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) {
    const auto& t = links[i].translation;
    const auto& q = links[i].quaternion;
    out.poses[i] = mapping::Pose(se3::Rotation::from_wxyz(q[0], q[1], q[2], q[3]), mapping::Vec3(t[0], t[1], t[2]));
  }
  return out;
}

FrameBytes encode_frame(const PoseFrame& frame) {
  FrameBytes b{};
  std::memcpy(b.data(), kFrameMagic.data(), 4);
  b[4] = frame.version;
  put_u32(b.data() + 5, frame.seq);
  put_u64(b.data() + 9, frame.timestamp_ns);
  std::uint8_t* p = b.data() + 17;
  for (const auto& link : frame.links) {
    for (double v : link.translation) {
      put_u64(p, std::bit_cast<std::uint64_t>(v));
      p += 8;
    }
    for (double v : link.quaternion) {
      put_u64(p, std::bit_cast<std::uint64_t>(v));
      p += 8;
    }
  }
  return b;
}

PoseFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameSize) {
    throw Error(ErrorCode::kShortRead, "frame has " + std::to_string(bytes.size()) + " of 353 bytes");
  }
  if (bytes.size() > kFrameSize) {
    throw Error(ErrorCode::kParse, "frame has " + std::to_string(bytes.size() - kFrameSize) + " trailing bytes");
  }
  if (std::memcmp(bytes.data(), kFrameMagic.data(), 4) != 0) throw Error(ErrorCode::kBadMagic, "frame magic is not XCTL");
  PoseFrame f;
  f.version = bytes[4];
  if (f.version != kFrameVersion) {
    throw Error(ErrorCode::kBadVersion, "unsupported frame version " + std::to_string(f.version));
  }
  f.seq = get_u32(bytes.data() + 5);
  f.timestamp_ns = get_u64(bytes.data() + 9);
  const std::uint8_t* p = bytes.data() + 17;
  for (std::size_t i = 0; i < mapping::kLinkCount; ++i) {
    auto& link = f.links[i];
    for (double& v : link.translation) {
      v = std::bit_cast<double>(get_u64(p));
      p += 8;
    }
    double norm2 = 0.0;
    for (double& v : link.quaternion) {
      v = std::bit_cast<double>(get_u64(p));
      p += 8;
      norm2 += v * v;
    }
    if (!(std::abs(std::sqrt(norm2) - 1.0) <= kQuaternionTolerance)) {
      throw Error(ErrorCode::kNonUnitQuaternion, "quaternion of link '" + std::string(mapping::kLinkNames[i]) +
                                                     "' has norm " + std::to_string(std::sqrt(norm2)));
    }
  }
  return f;
}

void LatestValueMailbox::write(const PoseFrame& frame) noexcept {
  slots_[back_] = frame;
  back_ = middle_.exchange(static_cast<std::uint8_t>(back_ | kFresh), std::memory_order_acq_rel) & kIndex;
  writes_.fetch_add(1, std::memory_order_relaxed);
}

std::optional<LatestValueMailbox::Read> LatestValueMailbox::read(std::uint64_t now_ns) noexcept {
  bool fresh = false;
  if (middle_.load(std::memory_order_acquire) & kFresh) {
    front_ = middle_.exchange(front_, std::memory_order_acq_rel) & kIndex;
    have_front_ = true;
    fresh = true;
  }
  if (!have_front_) return std::nullopt;
  const PoseFrame& f = slots_[front_];
  return Read{f, static_cast<std::int64_t>(now_ns) - static_cast<std::int64_t>(f.timestamp_ns), fresh};
}

void ChannelConfig::validate() const {
  if (!(delay >= 0.0) || !(jitter_std >= 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "channel delay and jitter must be non-negative");
  }
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) throw Error(ErrorCode::kConfigInvalid, "drop_prob must be in [0, 1)");
}

SimulatedChannel::SimulatedChannel(const ChannelConfig& config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
}

void SimulatedChannel::send(const FrameBytes& bytes, std::uint64_t now_ns) {
  ++sent_;
  // Both draws happen for every datagram so the stream of random numbers
  // does not depend on which frames were dropped.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  const double jitter = config_.jitter_std > 0.0 ? std::normal_distribution<double>(0.0, config_.jitter_std)(rng_) : 0.0;
  if (u < config_.drop_prob) {
    ++dropped_;
    return;
  }
  const double delay = std::max(0.0, config_.delay + jitter);
  in_flight_.push_back({now_ns + static_cast<std::uint64_t>(std::llround(delay * 1e9)), next_order_++, bytes});
}

std::vector<FrameBytes> SimulatedChannel::poll(std::uint64_t now_ns) {
  auto due = std::stable_partition(in_flight_.begin(), in_flight_.end(),
                                   [&](const InFlight& f) { return f.deliver_ns > now_ns; });
  std::vector<InFlight> ready(std::make_move_iterator(due), std::make_move_iterator(in_flight_.end()));
  in_flight_.erase(due, in_flight_.end());
  std::sort(ready.begin(), ready.end(), [](const InFlight& a, const InFlight& b) {
    return a.deliver_ns != b.deliver_ns ? a.deliver_ns < b.deliver_ns : a.order < b.order;
  });
  std::vector<FrameBytes> out;
  out.reserve(ready.size());
  for (auto& f : ready) out.push_back(f.bytes);
  return out;
}

bool FrameSink::accept(std::span<const std::uint8_t> bytes) noexcept {
  PoseFrame f;
  try {
    f = decode_frame(bytes);
  } catch (const Error&) {
    ++malformed_;
    return false;
  }
  if (last_seq_ && f.seq <= *last_seq_) {
    ++stale_;
    return false;
  }
  last_seq_ = f.seq;
  mailbox_.write(f);
  ++forwarded_;
  return true;
}

void MotionSpec::validate() const {
  if (!(amplitude > 0.0) || !(omega > 0.0) || !(duration > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "motion amplitude, omega and duration must be positive");
  }
  if (std::abs(axis.norm() - 1.0) > 1e-9) throw Error(ErrorCode::kConfigInvalid, "motion axis must be a unit vector");
}

void PipelineConfig::validate() const {
  if (!(capture_rate > 0.0) || !(control_rate > 0.0) || !(lowlevel_rate > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "rates must be positive");
  }
  const double ratio = lowlevel_rate / control_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw Error(ErrorCode::kConfigInvalid, "lowlevel_rate must be a multiple of control_rate");
  }
  const double step_ns = 1e9 / lowlevel_rate;
  if (std::abs(step_ns - std::round(step_ns)) > 1e-6) {
    throw Error(ErrorCode::kConfigInvalid, "lowlevel period must be a whole number of nanoseconds");
  }
  channel.validate();
  motion.validate();
  if (gains.size() != 1) throw Error(ErrorCode::kConfigInvalid, "the pipeline drives exactly one joint");
  gains.validate();
  if (!(inertia > 0.0)) throw Error(ErrorCode::kConfigInvalid, "inertia must be positive");
  profile.validate();
}

PipelineConfig PipelineConfig::defaults(double eta) {
  PipelineConfig c;
  c.human_neutral = mapping::reference_human_neutral();
  c.profile = mapping::calibrate(c.human_neutral, mapping::reference_robot());
  const std::array<double, 1> m{c.inertia};
  c.gains = plant::GainSchedule::from_impedance(m, 10.0, 1.0, eta);
  return c;
}

double joint_target(const mapping::CalibrationProfile& profile, const mapping::LinkSet& robot,
                    const mapping::Vec3& axis) {
  using mapping::Link;
  const auto& arm = profile.robot.side(mapping::Side::kRight);
  const mapping::Pose anchor =
      mapping::torso_anchor(robot[Link::kTorso].rotation(), robot[Link::kPelvis].translation());
  const mapping::Vec3 rel = se3::inverse(anchor).transform_point(robot[Link::kRightHand].translation());
  const mapping::Vec3 neutral = arm.shoulder + mapping::Vec3(arm.arm_length, 0.0, 0.0);
  return (rel - neutral).dot(axis) / arm.arm_length;
}

PipelineRecord run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto step_ns = static_cast<std::uint64_t>(std::llround(1e9 / config.lowlevel_rate));
  const auto decimation = static_cast<std::size_t>(std::llround(config.lowlevel_rate / config.control_rate));
  const auto steps = static_cast<std::size_t>(std::llround(config.motion.duration * config.lowlevel_rate));
  const double control_dt = 1.0 / config.control_rate;

  const plant::PlantModel plant = plant::PlantModel::decoupled({config.inertia}, 1.0 / config.lowlevel_rate);
  auto project = [&](double t) {
    return joint_target(config.profile,
                        mapping::map_frame(config.profile, human_at(config.human_neutral, config.motion, t)),
                        config.motion.axis);
  };
  const double q0 = project(0.0);
  std::vector<plant::JointState> states = plant::initial_states(plant, std::array<double, 1>{q0});

  SimulatedChannel channel(config.channel, config.seed);
  LatestValueMailbox mailbox;
  FrameSink sink(mailbox);

  PipelineRecord rec;
  rec.dt = 1.0 / config.lowlevel_rate;
  for (auto* v : {&rec.t, &rec.human, &rec.target, &rec.robot}) v->reserve(steps);

  plant::ControlTargets targets{{q0}, {0.0}, control_dt};
  std::optional<double> previous_target;
  std::uint32_t next_seq = 0;
  auto capture_ns = [&](std::uint64_t k) {
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(k) * 1e9 / config.capture_rate));
  };

  for (std::size_t i = 0; i < steps; ++i) {
    const std::uint64_t now = i * step_ns;
    while (capture_ns(next_seq) <= now) {
      const std::uint64_t tc = capture_ns(next_seq);
      const auto frame = PoseFrame::from_links(
          human_at(config.human_neutral, config.motion, static_cast<double>(tc) * 1e-9), next_seq, tc);
      channel.send(encode_frame(frame), tc);
      ++next_seq;
    }
    for (const auto& bytes : channel.poll(now)) sink.accept(bytes);

    if (i % decimation == 0) {
      ControlTick tick;
      tick.t_ns = now;
      if (const auto r = mailbox.read(now)) {
        tick.seq = r->frame.seq;
        tick.capture_ns = r->frame.timestamp_ns;
        tick.staleness_ns = r->staleness_ns;
        const double q = joint_target(config.profile, mapping::map_frame(config.profile, r->frame.to_links()),
                                      config.motion.axis);
        targets.qdot[0] = previous_target ? (q - *previous_target) / control_dt : 0.0;
        targets.q[0] = q;
        previous_target = q;
      }
      tick.q_target = targets.q[0];
      tick.qdot_target = targets.qdot[0];
      rec.ticks.push_back(tick);
    }

    const double t = static_cast<double>(now) * 1e-9;
    rec.t.push_back(t);
    rec.human.push_back(project(t));
    rec.target.push_back(targets.q[0]);
    rec.robot.push_back(states[0].q);
    plant::step_in_place(plant, states, targets, config.gains);
  }
  rec.frames_sent = channel.sent();
  rec.frames_dropped = channel.dropped();
  rec.frames_discarded = sink.stale() + sink.malformed();
  return rec;
}

latency::MotionSignal PipelineRecord::human_signal() const { return {human, 1.0 / dt, 0.0}; }
latency::MotionSignal PipelineRecord::target_signal() const { return {target, 1.0 / dt, 0.0}; }
latency::MotionSignal PipelineRecord::robot_signal() const { return {robot, 1.0 / dt, 0.0}; }

bool LatencyBudget::accounts_for_overall() const {
  return std::abs(components_ms() - overall_ms) <= 0.25 * std::abs(overall_ms);
}

LatencyBudget latency_budget(const PipelineRecord& record, double control_rate, double eta, double settle) {
  if (record.robot.size() < 2) throw Error(ErrorCode::kInvalidArgument, "pipeline record is empty");
  if (!(control_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "control_rate must be positive");
  const double rate = 1.0 / record.dt;
  LatencyBudget b;
  b.eta = eta;

  double staleness = 0.0;
  std::size_t reads = 0;
  for (const auto& tick : record.ticks) {
    if (!tick.seq || static_cast<double>(tick.t_ns) * 1e-9 < settle) continue;
    staleness += static_cast<double>(tick.staleness_ns) * 1e-6;
    ++reads;
  }
  if (reads == 0) throw Error(ErrorCode::kInvalidArgument, "no frames reached the controller");
  b.transport_ms = staleness / static_cast<double>(reads);
  b.hold_ms = 500.0 / control_rate;

  const auto human = signal_after(record.human, rate, record.dt, settle);
  const auto target = signal_after(record.target, rate, record.dt, settle);
  const auto robot = signal_after(record.robot, rate, record.dt, settle);
  const auto control = latency::estimate_lag(target, robot);
  const auto overall = latency::estimate_lag(human, robot);
  b.control_ms = control.lag * 1e3;
  b.overall_ms = overall.lag * 1e3;
  b.control_confidence = control.confidence;
  b.overall_confidence = overall.confidence;
  return b;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "fit needs as many y as x values");
  if (x.size() < 3) throw Error(ErrorCode::kInsufficientPoints, "fit needs at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fit needs at least two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

LinearFit fit_budgets(std::span<const LatencyBudget> budgets) {
  std::vector<double> x, y;
  for (const auto& b : budgets) {
    x.push_back(b.control_ms);
    y.push_back(b.overall_ms);
  }
  return fit_line(x, y);
}

std::uint64_t wall_clock_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch()).count());
}

}  // namespace extremctl::stream
