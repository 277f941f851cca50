#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "extremctl/image.hpp"

namespace extremctl::latency {

// Uniformly sampled 1-D signal; sample i sits at t0 + i / rate.
struct MotionSignal {
  std::vector<double> samples;
  double rate = 1.0;  // Hz
  double t0 = 0.0;    // s

  std::size_t size() const { return samples.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) / rate; }
  void validate() const;
};

struct RegionSpec {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 1;
  std::size_t h = 1;
  double dx = 1.0;  // unit motion direction in image coordinates
  double dy = 0.0;

  void validate() const;
  // "x,y,w,h,dx,dy"; the direction is normalized.
  static RegionSpec parse(const std::string& text);
};

struct BlockMatchParams {
  std::size_t block = 8;
  std::size_t radius = 4;
  // Blocks of frame A whose gray-level standard deviation is below this are
  // treated as textureless and report zero flow.
  float texture_threshold = 2.0f;
  // Parabolic sub-pixel refinement of the matching cost along each axis.
  bool subpixel = true;
};

/// Dense flow from frame A to frame B by exhaustive block matching.
///
/// Each block of A is compared with blocks of B displaced by up to `radius`
/// pixels using the mean-removed sum of absolute differences, so uniform
/// brightness changes do not register as motion. Pixels of a block share its
/// displacement; pixels beyond the last whole block get zero. Throws
/// DimensionMismatch when the frames differ in size and InvalidArgument for
/// blocks smaller than 4 pixels.
FlowField block_match_flow(const GrayImage& frame_a, const GrayImage& frame_b,
                           const BlockMatchParams& params = {});

// Mean flow in the region dotted with its direction. Throws OutOfBounds.
double project_region(const FlowField& flow, const RegionSpec& region);

// Zero mean, unit (population) variance. Throws ConstantSignal.
MotionSignal standardize(const MotionSignal& signal);

struct LagEstimate {
  double lag = 0.0;          // s, positive when b trails a
  double lag_samples = 0.0;  // refined, in samples of the common rate
  long peak_index = 0;       // integer lag at the correlation peak
  double confidence = 0.0;   // peak correlation in [-1, 1]
  bool low_confidence = false;
  long max_lag_samples = 0;
  std::vector<double> correlation;  // Pearson r for lags -max..+max
};

inline constexpr double kLowConfidence = 0.6;
inline constexpr double kDefaultMaxLag = 1.0;

/// Time offset between two signals by waveform alignment.
///
/// Both signals are standardized; for every integer lag k in +-max_lag the
/// Pearson correlation of a[i] against b[i + k] is taken over their overlap,
/// and the best lag is refined by a parabola through the peak and its two
/// neighbours. A difference in start times is folded into the result.
/// Requires equal rates (InvalidArgument) and an overlap at the largest
/// tested lag of at least 1 s or two periods of the dominant motion
/// (InsufficientOverlap). A peak below 0.6 sets low_confidence.
LagEstimate estimate_lag(const MotionSignal& a, const MotionSignal& b,
                         double max_lag = kDefaultMaxLag);

struct LatencyReport {
  MotionSignal signal_a;  // standardized
  MotionSignal signal_b;  // standardized
  LagEstimate lag;
  // b advanced by the estimated lag and resampled on a's time base.
  std::vector<double> overlay_t;
  std::vector<double> overlay_a;
  std::vector<double> overlay_b;
};

// One projected sample per consecutive frame pair, time-stamped at the pair
// midpoint.
MotionSignal frames_to_signal(std::span<const GrayImage> frames, const RegionSpec& region,
                              double fps, const BlockMatchParams& params = {});
MotionSignal flows_to_signal(std::span<const FlowField> flows, const RegionSpec& region, double fps);

LatencyReport analyze_signals(const MotionSignal& a, const MotionSignal& b,
                              double max_lag = kDefaultMaxLag);
LatencyReport analyze_frames(std::span<const GrayImage> frames_a, std::span<const GrayImage> frames_b,
                             const RegionSpec& region_a, const RegionSpec& region_b, double fps,
                             const BlockMatchParams& params = {}, double max_lag = kDefaultMaxLag);
LatencyReport analyze_flows(std::span<const FlowField> flows_a, std::span<const FlowField> flows_b,
                            const RegionSpec& region_a, const RegionSpec& region_b, double fps,
                            double max_lag = kDefaultMaxLag);

std::vector<GrayImage> load_frames(const std::string& dir);
std::vector<FlowField> load_flows(const std::string& dir);

// CSV with a `t,value` header; the rate is inferred and must be uniform.
MotionSignal read_signal_csv(const std::string& path);
void write_signal_csv(const MotionSignal& signal, const std::string& path);

}  // namespace extremctl::latency
