#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "extremctl/latency.hpp"

namespace testsupport {

// A textured bar sliding back and forth across a static textured backdrop.
// Pixels are box-filtered over a 4x4 supersampling grid so sub-pixel motion
// shows up as smooth intensity changes rather than jumps.
struct VideoSpec {
  std::size_t width = 160;
  std::size_t height = 96;
  double fps = 60.0;
  std::size_t frames = 240;
  double amplitude = 20.0;  // px
  double freq_hz = 0.7;
  bool vertical = false;        // motion along +y instead of +x
  double delay_frames = 0.0;    // content shown at frame k is from time (k - delay) / fps
  double contrast = 1.0;
  double brightness = 0.0;
  double noise_std = 0.0;       // gray levels, deterministic per seed
  std::uint32_t seed = 1;
  std::uint32_t texture = 0;    // selects the bar's texture phase
};

// Bar displacement along the motion axis, pixels, at time t.
double bar_offset(const VideoSpec& spec, double t);

std::vector<extremctl::latency::GrayImage> render_video(const VideoSpec& spec);

// Region that stays inside the bar for the whole clip, aligned to the
// 8 px block grid, with its direction along the motion axis.
extremctl::latency::RegionSpec interior_region(const VideoSpec& spec);

// Bar position sampled at the frame times, as a direct motion signal.
extremctl::latency::MotionSignal tracked_position(const VideoSpec& spec);

// Bar velocity in px/frame, sampled at the pair midpoints like the flow signal.
extremctl::latency::MotionSignal tracked_velocity(const VideoSpec& spec);

}  // namespace testsupport
