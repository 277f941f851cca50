#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "extremctl/latency.hpp"
#include "extremctl/mapping.hpp"
#include "extremctl/plant.hpp"

namespace extremctl::stream {

inline constexpr std::array<char, 4> kFrameMagic = {'X', 'C', 'T', 'L'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameSize = 4 + 1 + 4 + 8 + mapping::kLinkCount * 56;
static_assert(kFrameSize == 353);

struct WirePose {
  std::array<double, 3> translation{};       // m
  std::array<double, 4> quaternion{1, 0, 0, 0};  // w, x, y, z

  friend bool operator==(const WirePose&, const WirePose&) = default;
};

// Human link poses as they travel over the wire. Values are kept verbatim
// so a round trip through the codec is bit-exact.
struct PoseFrame {
  std::uint8_t version = kFrameVersion;
  std::uint32_t seq = 0;
  std::uint64_t timestamp_ns = 0;
  std::array<WirePose, mapping::kLinkCount> links{};

  static PoseFrame from_links(const mapping::LinkSet& links, std::uint32_t seq, std::uint64_t timestamp_ns);
  // Throws ZeroVector for a degenerate quaternion.
  mapping::LinkSet to_links() const;

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

FrameBytes encode_frame(const PoseFrame& frame);

/// Parses exactly one frame. Throws ShortRead for fewer than 353 bytes,
/// Parse for more, BadMagic, BadVersion, and NonUnitQuaternion when a
/// quaternion norm is off by more than 1e-6.
PoseFrame decode_frame(std::span<const std::uint8_t> bytes);

/// Single-producer single-consumer latest-value slot (triple buffer).
///
/// write() never blocks and always replaces what the reader will see next;
/// read() never blocks and returns the newest completed frame. Neither side
/// ever waits on the other.
class LatestValueMailbox {
 public:
  struct Read {
    PoseFrame frame;
    std::int64_t staleness_ns = 0;  // now - frame.timestamp_ns
    bool fresh = false;             // a new frame arrived since the last read
  };

  void write(const PoseFrame& frame) noexcept;
  // Empty until the first write.
  std::optional<Read> read(std::uint64_t now_ns) noexcept;

  std::uint64_t writes() const noexcept { return writes_.load(std::memory_order_relaxed); }

 private:
  static constexpr std::uint8_t kFresh = 4;
  static constexpr std::uint8_t kIndex = 3;

  std::array<PoseFrame, 3> slots_{};
  std::atomic<std::uint8_t> middle_{1};
  std::uint8_t back_ = 0;   // writer-owned
  std::uint8_t front_ = 2;  // reader-owned
  bool have_front_ = false;
  std::atomic<std::uint64_t> writes_{0};
};

struct ChannelConfig {
  double delay = 0.0;       // s
  double jitter_std = 0.0;  // s, Gaussian, truncated at zero total delay
  double drop_prob = 0.0;

  void validate() const;
};

// In-process datagram channel on a virtual clock.
class SimulatedChannel {
 public:
  SimulatedChannel(const ChannelConfig& config, std::uint64_t seed);

  void send(const FrameBytes& bytes, std::uint64_t now_ns);
  // Datagrams whose delivery time has come, in delivery order.
  std::vector<FrameBytes> poll(std::uint64_t now_ns);

  std::size_t sent() const { return sent_; }
  std::size_t dropped() const { return dropped_; }

 private:
  struct InFlight {
    std::uint64_t deliver_ns;
    std::uint64_t order;
    FrameBytes bytes;
  };
  ChannelConfig config_;
  std::mt19937_64 rng_;
  std::vector<InFlight> in_flight_;
  std::uint64_t next_order_ = 0;
  std::size_t sent_ = 0;
  std::size_t dropped_ = 0;
};

/// Receiving end shared by both transports: decodes datagrams and forwards
/// them to the mailbox, discarding malformed frames and any frame whose seq
/// is not newer than the last one forwarded.
class FrameSink {
 public:
  explicit FrameSink(LatestValueMailbox& mailbox) : mailbox_(mailbox) {}

  // True when the frame was forwarded.
  bool accept(std::span<const std::uint8_t> bytes) noexcept;

  std::size_t forwarded() const { return forwarded_; }
  std::size_t stale() const { return stale_; }
  std::size_t malformed() const { return malformed_; }

 private:
  LatestValueMailbox& mailbox_;
  std::optional<std::uint32_t> last_seq_;
  std::size_t forwarded_ = 0;
  std::size_t stale_ = 0;
  std::size_t malformed_ = 0;
};

// Loopback datagram transport. Wall clock only.
class UdpSender {
 public:
  explicit UdpSender(std::uint16_t port);
  ~UdpSender();
  UdpSender(const UdpSender&) = delete;
  UdpSender& operator=(const UdpSender&) = delete;

  void send(const PoseFrame& frame);

 private:
  int fd_ = -1;
  std::uint16_t port_;
};

class UdpReceiver {
 public:
  // Binds 127.0.0.1 on `port` (0 picks a free port) and starts receiving.
  UdpReceiver(LatestValueMailbox& mailbox, std::uint16_t port = 0);
  ~UdpReceiver();
  UdpReceiver(const UdpReceiver&) = delete;
  UdpReceiver& operator=(const UdpReceiver&) = delete;

  std::uint16_t port() const { return port_; }
  std::size_t forwarded() const { return forwarded_.load(); }
  void stop();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<std::size_t> forwarded_{0};
  FrameSink sink_;
  std::jthread thread_;
};

std::uint64_t wall_clock_ns();

// Right hand reciprocating about its calibration position.
struct MotionSpec {
  double amplitude = 0.1;  // m
  double omega = 3.14;     // rad/s
  mapping::Vec3 axis = mapping::Vec3::UnitY();  // unit, torso frame
  double duration = 12.0;  // s

  void validate() const;
};

struct PipelineConfig {
  double capture_rate = 120.0;  // Hz
  double control_rate = 50.0;   // Hz
  double lowlevel_rate = 1000.0;  // Hz
  ChannelConfig channel;
  plant::GainSchedule gains;  // one joint
  double inertia = 1.0;       // kg*m^2 of the driven joint
  mapping::LinkSet human_neutral;
  mapping::CalibrationProfile profile;
  MotionSpec motion;
  std::uint64_t seed = 0;

  void validate() const;
  // Reference operator and robot, omega_n = 10, zeta = 1, the given eta.
  static PipelineConfig defaults(double eta = 0.0);
};

struct ControlTick {
  std::uint64_t t_ns = 0;
  std::optional<std::uint32_t> seq;  // frame used, if any had arrived
  std::uint64_t capture_ns = 0;
  std::int64_t staleness_ns = 0;
  double q_target = 0.0;
  double qdot_target = 0.0;
};

/// Everything sampled at the low-level rate, plus one entry per control tick.
/// `human` is the operator's motion projected onto the driven joint exactly
/// as the controller would see it with no transport at all.
struct PipelineRecord {
  double dt = 1e-3;
  std::vector<double> t;
  std::vector<double> human;
  std::vector<double> target;  // held
  std::vector<double> robot;   // realized joint position
  std::vector<ControlTick> ticks;
  std::size_t frames_sent = 0;
  std::size_t frames_dropped = 0;
  std::size_t frames_discarded = 0;

  latency::MotionSignal human_signal() const;
  latency::MotionSignal target_signal() const;
  latency::MotionSignal robot_signal() const;
};

/// Runs producer, channel, controller and plant on one virtual clock.
/// Deterministic for a fixed config (including seed).
PipelineRecord run_pipeline(const PipelineConfig& config);

// Joint target for a mapped robot frame: the hand's displacement from its
// neutral position along the motion axis, in the torso-anchored frame,
// divided by the robot arm length.
double joint_target(const mapping::CalibrationProfile& profile, const mapping::LinkSet& robot,
                    const mapping::Vec3& axis);

struct LatencyBudget {
  double eta = 0.0;
  double transport_ms = 0.0;  // mean read staleness
  double hold_ms = 0.0;       // half a control period
  double control_ms = 0.0;    // held target to joint
  double overall_ms = 0.0;    // operator to joint, measured directly
  double control_confidence = 0.0;
  double overall_confidence = 0.0;

  double components_ms() const { return transport_ms + hold_ms + control_ms; }
  // Components within 25% of the independently measured total.
  bool accounts_for_overall() const;
};

LatencyBudget latency_budget(const PipelineRecord& record, double control_rate, double eta,
                             double settle = 2.0);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares y = slope * x + intercept. Throws InsufficientPoints below
// three points and InvalidArgument for mismatched or constant x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// overall_ms against control_ms over a set of budgets.
LinearFit fit_budgets(std::span<const LatencyBudget> budgets);

}  // namespace extremctl::stream
