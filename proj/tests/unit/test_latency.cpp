#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "extremctl/error.hpp"
#include "extremctl/image.hpp"
#include "extremctl/latency.hpp"
#include "oracles.hpp"
#include "synthetic_video.hpp"

using namespace extremctl;
using namespace extremctl::latency;
using testsupport::TempDir;

namespace {

double texture(double x, double y) {
  return 120.0 + 40.0 * std::sin(0.7 * x + 0.3 * y) + 30.0 * std::cos(0.45 * y - 0.2 * x) +
         15.0 * std::sin(1.3 * x) * std::cos(0.9 * y);
}

GrayImage textured(std::size_t w, std::size_t h, double shift_x = 0.0, double shift_y = 0.0, double offset = 0.0) {
  GrayImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(x, y) = static_cast<float>(offset + texture(static_cast<double>(x) - shift_x,
                                                         static_cast<double>(y) - shift_y));
    }
  }
  return img;
}

MotionSignal sampled(double rate, std::size_t n, double delay_s, double gain = 1.0, double f = 0.7) {
  MotionSignal s;
  s.rate = rate;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate - delay_s;
    const double w = 2.0 * std::numbers::pi * f;
    s.samples.push_back(gain * (std::sin(w * t) + 0.3 * std::sin(2.3 * w * t + 0.4)));
  }
  return s;
}

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

}  // namespace

TEST_CASE("identical frames give zero flow") {
  const GrayImage a = textured(64, 48);
  const FlowField f = block_match_flow(a, a);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    CHECK(f.u[i] == 0.0f);
    CHECK(f.v[i] == 0.0f);
  }
}

TEST_CASE("a constructed shift is recovered on interior blocks") {
  const GrayImage a = textured(64, 48);
  const GrayImage b = textured(64, 48, 3.0, 0.0);
  const FlowField f = block_match_flow(a, b);
  for (std::size_t by = 8; by + 8 < 48; by += 8) {
    for (std::size_t bx = 8; bx + 16 <= 64; bx += 8) {
      CHECK(f.u[by * 64 + bx] == doctest::Approx(3.0).epsilon(0.02));
      CHECK(std::abs(f.v[by * 64 + bx]) < 0.05);
    }
  }
  const GrayImage c = textured(64, 48, -1.0, 2.0);
  const FlowField g = block_match_flow(a, c);
  CHECK(g.u[24 * 64 + 24] == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(g.v[24 * 64 + 24] == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("sub-pixel shifts are interpolated") {
  const GrayImage a = textured(64, 48);
  const GrayImage b = textured(64, 48, 1.4, 0.0);
  const FlowField f = block_match_flow(a, b);
  CHECK(std::abs(f.u[24 * 64 + 24] - 1.4) < 0.25);
  BlockMatchParams whole;
  whole.subpixel = false;
  CHECK(block_match_flow(a, b, whole).u[24 * 64 + 24] == 1.0f);
}

TEST_CASE("a uniform brightness change is not motion") {
  const GrayImage a = textured(64, 48);
  const GrayImage b = textured(64, 48, 0.0, 0.0, 10.0);
  const FlowField f = block_match_flow(a, b);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    CHECK(f.u[i] == 0.0f);
    CHECK(f.v[i] == 0.0f);
  }
}

TEST_CASE("textureless blocks report zero flow") {
  GrayImage a(32, 32, 100.0f), b(32, 32, 100.0f);
  for (std::size_t y = 0; y < 32; ++y) b.at(20, y) = 101.0f;
  const FlowField f = block_match_flow(a, b);
  for (float u : f.u) CHECK(u == 0.0f);
}

TEST_CASE("block matching argument errors") {
  const GrayImage a = textured(32, 32), b = textured(32, 24);
  CHECK(code_of([&] { (void)block_match_flow(a, b); }) == ErrorCode::kDimensionMismatch);
  BlockMatchParams p;
  p.block = 3;
  CHECK(code_of([&] { (void)block_match_flow(a, a, p); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("region projection examples") {
  FlowField f(8, 8);
  std::fill(f.v.begin(), f.v.end(), -2.0f);
  CHECK(project_region(f, RegionSpec{0, 0, 8, 8, 0.0, -1.0}) == doctest::Approx(2.0));

  FlowField g(8, 8);
  std::fill(g.u.begin(), g.u.end(), 1.0f);
  CHECK(project_region(g, RegionSpec{0, 0, 8, 8, 0.0, 1.0}) == 0.0);

  FlowField h(8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 4; ++x) h.u[y * 8 + x] = 2.0f;
  CHECK(project_region(h, RegionSpec{0, 0, 8, 8, 1.0, 0.0}) == doctest::Approx(1.0));

  CHECK(code_of([&] { (void)project_region(h, RegionSpec{4, 4, 5, 2, 1.0, 0.0}); }) == ErrorCode::kOutOfBounds);
}

TEST_CASE("region specs parse and normalize") {
  const RegionSpec r = RegionSpec::parse("1,2,3,4,3,4");
  CHECK(r.x == 1);
  CHECK(r.h == 4);
  CHECK(r.dx == doctest::Approx(0.6));
  CHECK(r.dy == doctest::Approx(0.8));
  CHECK(code_of([] { (void)RegionSpec::parse("1,2,3,4,0,0"); }) == ErrorCode::kZeroVector);
  CHECK(code_of([] { (void)RegionSpec::parse("1,2,3"); }) == ErrorCode::kParse);
  CHECK(code_of([] { (void)RegionSpec::parse("a,2,3,4,1,0"); }) == ErrorCode::kParse);
  CHECK(code_of([] { (void)RegionSpec::parse("-1,2,3,4,1,0"); }) == ErrorCode::kParse);
}

TEST_CASE("standardize examples") {
  MotionSignal s{{1, -1, 1, -1}, 10.0, 0.0};
  CHECK(standardize(s).samples == std::vector<double>{1, -1, 1, -1});
  const MotionSignal two = standardize(MotionSignal{{2, 4}, 10.0, 0.0});
  CHECK(two.samples[0] == doctest::Approx(-1.0));
  CHECK(two.samples[1] == doctest::Approx(1.0));

  const MotionSignal base = sampled(60.0, 200, 0.0);
  const MotionSignal z = standardize(base);
  MotionSignal affine = base;
  for (double& v : affine.samples) v = 3.7 * v - 12.0;
  const MotionSignal za = standardize(affine);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(za.samples[i] == doctest::Approx(z.samples[i]).epsilon(1e-12));

  CHECK(code_of([] { (void)standardize(MotionSignal{{5, 5, 5}, 1.0, 0.0}); }) == ErrorCode::kConstantSignal);
  CHECK(code_of([] { (void)standardize(MotionSignal{{5}, 1.0, 0.0}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("lag estimation examples") {
  const MotionSignal s = sampled(60.0, 400, 0.0);
  const LagEstimate self = estimate_lag(s, s);
  CHECK(self.lag == 0.0);
  CHECK(self.confidence == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(self.low_confidence);

  MotionSignal a{{}, 1000.0, 0.0}, b{{}, 1000.0, 0.0};
  for (int i = 0; i < 5000; ++i) {
    a.samples.push_back(std::sin(2 * std::numbers::pi * 1.3 * i / 1000.0));
    b.samples.push_back(std::sin(2 * std::numbers::pi * 1.3 * (i - 50) / 1000.0));
  }
  const LagEstimate shifted = estimate_lag(a, b);
  CHECK(std::abs(shifted.lag - 0.050) <= 1e-3);
  CHECK(shifted.confidence > 0.99);

  const LagEstimate scaled = estimate_lag(sampled(60.0, 400, 0.0), sampled(60.0, 400, 10.0 / 60.0, 0.2));
  CHECK(std::abs(scaled.lag - 10.0 / 60.0) <= 0.5 / 60.0);
}

TEST_CASE("shifting b by whole samples moves the integer peak by exactly that much") {
  const MotionSignal a = sampled(60.0, 480, 0.0);
  const long base = estimate_lag(a, sampled(60.0, 480, 3.3 / 60.0)).peak_index;
  for (int k = 1; k <= 12; ++k) {
    CHECK(estimate_lag(a, sampled(60.0, 480, (3.3 + k) / 60.0)).peak_index == base + k);
  }
}

TEST_CASE("amplitude does not change the estimate") {
  const MotionSignal a = sampled(60.0, 480, 0.0);
  const MotionSignal b = sampled(60.0, 480, 0.1234);
  const double ref = estimate_lag(a, b).lag;
  for (const double g : {0.01, 0.5, 7.0, 300.0}) {
    MotionSignal ga = a, gb = b;
    for (double& v : ga.samples) v *= g;
    for (double& v : gb.samples) v *= 1.0 / g;
    CHECK(estimate_lag(ga, b).lag == doctest::Approx(ref).epsilon(1e-9));
    CHECK(estimate_lag(a, gb).lag == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("swapping the signals negates the lag") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-0.4, 0.4);
  for (int i = 0; i < 20; ++i) {
    const MotionSignal a = sampled(60.0, 480, 0.0);
    const MotionSignal b = sampled(60.0, 480, d(rng));
    const double ab = estimate_lag(a, b).lag_samples;
    const double ba = estimate_lag(b, a).lag_samples;
    CHECK(std::abs(ab + ba) < 0.1);
  }
}

TEST_CASE("sub-sample refinement of noiseless sinusoids") {
  for (const double frac : {0.1, 0.25, 0.5, 0.7, 0.9}) {
    MotionSignal a{{}, 60.0, 0.0}, b{{}, 60.0, 0.0};
    for (int i = 0; i < 600; ++i) {
      a.samples.push_back(std::sin(2 * std::numbers::pi * 0.8 * i / 60.0));
      b.samples.push_back(std::sin(2 * std::numbers::pi * 0.8 * (i - 5 - frac) / 60.0));
    }
    CHECK(std::abs(estimate_lag(a, b).lag_samples - (5 + frac)) < 0.1);
  }
}

TEST_CASE("start time differences are folded into the lag") {
  MotionSignal a = sampled(60.0, 400, 0.0);
  MotionSignal b = a;
  b.t0 = 0.25;
  CHECK(estimate_lag(a, b).lag == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("lag estimation errors and flags") {
  MotionSignal a = sampled(1000.0, 3000, 0.0, 1.0, 1.0);
  MotionSignal short_b = sampled(1000.0, 30, 0.0, 1.0, 1.0);
  CHECK(code_of([&] { (void)estimate_lag(a, short_b); }) == ErrorCode::kInsufficientOverlap);
  MotionSignal other_rate = sampled(500.0, 3000, 0.0);
  CHECK(code_of([&] { (void)estimate_lag(a, other_rate); }) == ErrorCode::kInvalidArgument);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  MotionSignal x{{}, 60.0, 0.0}, y{{}, 60.0, 0.0};
  for (int i = 0; i < 600; ++i) {
    x.samples.push_back(n(rng));
    y.samples.push_back(n(rng));
  }
  const LagEstimate noise = estimate_lag(x, y);
  CHECK(noise.low_confidence);
  CHECK(noise.correlation.size() == static_cast<std::size_t>(2 * noise.max_lag_samples + 1));
}

TEST_CASE("rendered clip delayed by four frames") {
  testsupport::VideoSpec spec;
  const auto a = testsupport::render_video(spec);
  spec.delay_frames = 4;
  const auto b = testsupport::render_video(spec);
  const RegionSpec region = testsupport::interior_region(spec);
  const LatencyReport r = analyze_frames(a, b, region, region, spec.fps);
  CHECK(std::abs(r.lag.lag - 4.0 / 60.0) <= 0.5 / 60.0);
  CHECK(r.lag.confidence > 0.9);
  CHECK(r.signal_a.size() == spec.frames - 1);
  CHECK(r.signal_a.t0 == doctest::Approx(0.5 / 60.0));
  CHECK(r.overlay_t.size() == r.overlay_a.size());
  CHECK(r.overlay_b.size() == r.overlay_a.size());
}

TEST_CASE("flow signal follows the bar velocity") {
  testsupport::VideoSpec spec;
  spec.frames = 60;
  const auto frames = testsupport::render_video(spec);
  const MotionSignal flow = frames_to_signal(frames, testsupport::interior_region(spec), spec.fps);
  const MotionSignal truth = testsupport::tracked_velocity(spec);
  REQUIRE(flow.size() == truth.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) worst = std::max(worst, std::abs(flow.samples[i] - truth.samples[i]));
  CHECK(worst < 0.25);
}

TEST_CASE("flow files and signal files feed the same estimator") {
  testsupport::VideoSpec spec;
  spec.frames = 150;
  const auto a = testsupport::render_video(spec);
  spec.delay_frames = 3;
  const auto b = testsupport::render_video(spec);
  const RegionSpec region = testsupport::interior_region(spec);
  std::vector<FlowField> fa, fb;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    fa.push_back(block_match_flow(a[k], a[k + 1]));
    fb.push_back(block_match_flow(b[k], b[k + 1]));
  }
  const double from_frames = analyze_frames(a, b, region, region, spec.fps).lag.lag;
  const double from_flows = analyze_flows(fa, fb, region, region, spec.fps).lag.lag;
  CHECK(from_flows == doctest::Approx(from_frames).epsilon(1e-12));
}

TEST_CASE("pgm round trip and errors") {
  TempDir dir("pgm");
  GrayImage img(5, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i * 17 % 256);
  write_pgm(img, dir.file("a.pgm"));
  const GrayImage back = read_pgm(dir.file("a.pgm"));
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.pixels == img.pixels);

  {
    std::ofstream(dir.file("wide.pgm"), std::ios::binary) << "P5\n# comment\n2 1\n1000\n" << '\x01' << '\x02' << '\x00' << '\x07';
  }
  const GrayImage wide = read_pgm(dir.file("wide.pgm"));
  CHECK(wide.pixels == std::vector<float>{258.0f, 7.0f});

  { std::ofstream(dir.file("p2.pgm")) << "P2\n1 1\n255\n7\n"; }
  { std::ofstream(dir.file("short.pgm"), std::ios::binary) << "P5\n4 4\n255\nabc"; }
  { std::ofstream(dir.file("junk.pgm"), std::ios::binary) << "P5\nx y\n255\n"; }
  CHECK(code_of([&] { (void)read_pgm(dir.file("missing.pgm")); }) == ErrorCode::kIo);
  CHECK(code_of([&] { (void)read_pgm(dir.file("p2.pgm")); }) == ErrorCode::kParse);
  CHECK(code_of([&] { (void)read_pgm(dir.file("short.pgm")); }) == ErrorCode::kShortRead);
  CHECK(code_of([&] { (void)read_pgm(dir.file("junk.pgm")); }) == ErrorCode::kParse);
}

TEST_CASE("flow file round trip and errors") {
  TempDir dir("flo");
  FlowField f(3, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    f.u[i] = 0.25f * static_cast<float>(i);
    f.v[i] = -1.5f * static_cast<float>(i);
  }
  write_flow(f, dir.file("f.flo"));
  CHECK(std::filesystem::file_size(dir.file("f.flo")) == 16 + 2 * 6 * 4);
  const FlowField back = read_flow(dir.file("f.flo"));
  CHECK(back.u == f.u);
  CHECK(back.v == f.v);

  { std::ofstream(dir.file("magic.flo"), std::ios::binary) << "PIEH0000000000000000"; }
  { std::ofstream(dir.file("tiny.flo"), std::ios::binary) << "XFLW"; }
  {
    std::ifstream in(dir.file("f.flo"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir.file("cut.flo"), std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  }
  CHECK(code_of([&] { (void)read_flow(dir.file("magic.flo")); }) == ErrorCode::kBadMagic);
  CHECK(code_of([&] { (void)read_flow(dir.file("tiny.flo")); }) == ErrorCode::kShortRead);
  CHECK(code_of([&] { (void)read_flow(dir.file("cut.flo")); }) == ErrorCode::kShortRead);
}

TEST_CASE("numbered frames load in frame order") {
  TempDir dir("frames");
  for (int k : {10, 2, 1}) {
    write_pgm(GrayImage(4, 4, static_cast<float>(k)), dir.file("frame_" + std::to_string(k) + ".pgm"));
  }
  { std::ofstream(dir.file("notes.txt")) << "x"; }
  const auto frames = load_frames(dir.path().string());
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].pixels[0] == 1.0f);
  CHECK(frames[1].pixels[0] == 2.0f);
  CHECK(frames[2].pixels[0] == 10.0f);
  TempDir empty("empty");
  CHECK(code_of([&] { (void)load_frames(empty.path().string()); }) == ErrorCode::kIo);
  CHECK(code_of([&] { (void)load_flows(dir.path().string()); }) == ErrorCode::kIo);
}

TEST_CASE("signal csv round trip and errors") {
  TempDir dir("csv");
  MotionSignal s = sampled(120.0, 50, 0.0);
  s.t0 = 0.125;
  write_signal_csv(s, dir.file("s.csv"));
  const MotionSignal back = read_signal_csv(dir.file("s.csv"));
  CHECK(back.samples == s.samples);
  CHECK(back.rate == doctest::Approx(120.0).epsilon(1e-9));
  CHECK(back.t0 == doctest::Approx(0.125).epsilon(1e-12));

  { std::ofstream(dir.file("hdr.csv")) << "time,value\n0,1\n1,2\n"; }
  { std::ofstream(dir.file("gap.csv")) << "t,value\n0,1\n1,2\n3,4\n"; }
  { std::ofstream(dir.file("bad.csv")) << "t,value\n0,1\n1,oops\n"; }
  CHECK(code_of([&] { (void)read_signal_csv(dir.file("hdr.csv")); }) == ErrorCode::kParse);
  CHECK(code_of([&] { (void)read_signal_csv(dir.file("gap.csv")); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { (void)read_signal_csv(dir.file("bad.csv")); }) == ErrorCode::kParse);
}
