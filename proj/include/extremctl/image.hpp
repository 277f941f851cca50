#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace extremctl::latency {

// Row-major grayscale image, one float per pixel in [0, maxval].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, float fill = 0.0f)
      : width(w), height(h), pixels(w * h, fill) {}

  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  const float* row(std::size_t y) const { return pixels.data() + y * width; }
};

// Per-pixel displacement in pixels/frame, u along +x and v along +y.
struct FlowField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(std::size_t w, std::size_t h) : width(w), height(h), u(w * h, 0.0f), v(w * h, 0.0f) {}
};

// Binary PGM (P5), maxval up to 65535.
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& image, const std::string& path);

// "XFLW" magic, width u32, height u32, reserved u32 (zero), then the u plane
// and the v plane as little-endian f32, row-major.
FlowField read_flow(const std::string& path);
void write_flow(const FlowField& flow, const std::string& path);

// Regular files in `dir` with the given extension, ordered by the first run
// of digits in the file name (frame index), then by name.
std::vector<std::string> numbered_files(const std::string& dir, const std::string& extension);

}  // namespace extremctl::latency
