#include "extremctl/latency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "extremctl/error.hpp"
#include "extremctl/kernels/kernels.hpp"

namespace extremctl::latency {
namespace {

constexpr double kMinStd = 1e-12;
constexpr double kMinOverlapSeconds = 1.0;
constexpr double kMinOverlapPeriods = 2.0;

// Vertex offset of the parabola through (-1, ym), (0, y0), (1, yp), clamped
// to half a step. Zero when the three points are collinear.
double parabola_vertex(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (std::abs(denom) < 1e-300) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

// Summed-area table with a zero first row and column.
class Integral {
 public:
  explicit Integral(const GrayImage& img) : w_(img.width + 1), sum_((img.width + 1) * (img.height + 1), 0.0) {
    for (std::size_t y = 0; y < img.height; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < img.width; ++x) {
        row += img.at(x, y);
        sum_[(y + 1) * w_ + x + 1] = sum_[y * w_ + x + 1] + row;
      }
    }
  }
  double box(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
    return sum_[(y + h) * w_ + x + w] - sum_[y * w_ + x + w] - sum_[(y + h) * w_ + x] + sum_[y * w_ + x];
  }

 private:
  std::size_t w_;
  std::vector<double> sum_;
};

// Mean of the dominant oscillation period estimated from mean crossings of a
// standardized signal, in seconds. Infinity when the signal never crosses.
double dominant_period(const MotionSignal& s) {
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s.samples[i - 1] > 0.0) != (s.samples[i] > 0.0)) ++crossings;
  }
  if (crossings < 2) return std::numeric_limits<double>::infinity();
  const double duration = static_cast<double>(s.size() - 1) / s.rate;
  return 2.0 * duration / static_cast<double>(crossings);
}

std::size_t overlap(std::size_t na, std::size_t nb, long k) {
  // Pairs (a[i], b[i + k]) with both indices valid.
  const long lo = std::max(0L, -k);
  const long hi = std::min(static_cast<long>(na), static_cast<long>(nb) - k);
  return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

double interpolate(const MotionSignal& s, double t) {
  const double pos = (t - s.t0) * s.rate;
  if (pos <= 0.0) return s.samples.front();
  const double last = static_cast<double>(s.size() - 1);
  if (pos >= last) return s.samples.back();
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return s.samples[i] * (1.0 - f) + s.samples[i + 1] * f;
}

}  // namespace

void MotionSignal::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw Error(ErrorCode::kInvalidArgument, "signal rate must be positive");
  if (samples.size() < 2) throw Error(ErrorCode::kInvalidArgument, "signal needs at least two samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "signal contains non-finite samples");
  }
}

void RegionSpec::validate() const {
  if (w < 1 || h < 1) throw Error(ErrorCode::kInvalidArgument, "region must be at least 1x1");
  if (std::abs(std::hypot(dx, dy) - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "region direction must be a unit vector");
  }
}

RegionSpec RegionSpec::parse(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad region '" + text + "'");
    }
  }
  if (v.size() != 6) throw Error(ErrorCode::kParse, "region needs x,y,w,h,dx,dy: '" + text + "'");
  for (int i = 0; i < 4; ++i) {
    if (v[i] < 0.0 || v[i] != std::floor(v[i])) {
      throw Error(ErrorCode::kParse, "region rectangle must be non-negative integers: '" + text + "'");
    }
  }
  const double norm = std::hypot(v[4], v[5]);
  if (norm < 1e-12) throw Error(ErrorCode::kZeroVector, "region direction is zero");
  RegionSpec r{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
               static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3]), v[4] / norm, v[5] / norm};
  r.validate();
  return r;
}

constexpr double kExactMatchPerPixel = 1e-3;

FlowField block_match_flow(const GrayImage& a, const GrayImage& b, const BlockMatchParams& params) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::kDimensionMismatch, "frames differ in size");
  }
  if (params.block < 4) throw Error(ErrorCode::kInvalidArgument, "block must be at least 4 pixels");
  const std::size_t bs = params.block;
  const long r = static_cast<long>(params.radius);
  const auto& k = kernels::active();
  const Integral ia(a);
  const Integral ib(b);
  const double area = static_cast<double>(bs * bs);

  // Candidate displacements ordered by distance so ties keep the smallest.
  std::vector<std::pair<long, long>> candidates;
  for (long dy = -r; dy <= r; ++dy) {
    for (long dx = -r; dx <= r; ++dx) candidates.emplace_back(dx, dy);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& p, const auto& q) {
    return p.first * p.first + p.second * p.second < q.first * q.first + q.second * q.second;
  });

  FlowField flow(a.width, a.height);
  const std::size_t side = 2 * params.radius + 1;
  std::vector<double> cost(side * side);
  for (std::size_t by = 0; by + bs <= a.height; by += bs) {
    for (std::size_t bx = 0; bx + bs <= a.width; bx += bs) {
      const double mean_a = ia.box(bx, by, bs, bs) / area;
      double var = 0.0;
      for (std::size_t y = 0; y < bs; ++y) {
        const float* ra = a.row(by + y) + bx;
        for (std::size_t x = 0; x < bs; ++x) var += (ra[x] - mean_a) * (ra[x] - mean_a);
      }
      if (std::sqrt(var / area) < params.texture_threshold) continue;

      std::fill(cost.begin(), cost.end(), std::numeric_limits<double>::infinity());
      double best = std::numeric_limits<double>::infinity();
      long best_dx = 0, best_dy = 0;
      for (const auto& [dx, dy] : candidates) {
        const long x0 = static_cast<long>(bx) + dx;
        const long y0 = static_cast<long>(by) + dy;
        if (x0 < 0 || y0 < 0 || x0 + static_cast<long>(bs) > static_cast<long>(b.width) ||
            y0 + static_cast<long>(bs) > static_cast<long>(b.height)) {
          continue;
        }
        const double mean_b = ib.box(static_cast<std::size_t>(x0), static_cast<std::size_t>(y0), bs, bs) / area;
        const auto offset = static_cast<float>(mean_a - mean_b);
        double c = 0.0;
        for (std::size_t y = 0; y < bs; ++y) {
          c += k.sad_offset_f32(a.row(by + y) + bx, b.row(static_cast<std::size_t>(y0) + y) + x0, bs, offset);
        }
        cost[static_cast<std::size_t>((dy + r) * static_cast<long>(side) + dx + r)] = c;
        if (c < best) {
          best = c;
          best_dx = dx;
          best_dy = dy;
        }
      }
      if (!std::isfinite(best)) continue;

      double u = static_cast<double>(best_dx);
      double v = static_cast<double>(best_dy);
      // A (numerically) perfect integer match needs no refinement; the
      // neighbouring costs are then shaped by texture, not by the shift.
      if (params.subpixel && best > kExactMatchPerPixel * area) {
        auto at = [&](long dx, long dy) {
          if (dx < -r || dx > r || dy < -r || dy > r) return std::numeric_limits<double>::infinity();
          return cost[static_cast<std::size_t>((dy + r) * static_cast<long>(side) + dx + r)];
        };
        const double xm = at(best_dx - 1, best_dy), xp = at(best_dx + 1, best_dy);
        const double ym = at(best_dx, best_dy - 1), yp = at(best_dx, best_dy + 1);
        if (std::isfinite(xm) && std::isfinite(xp)) u += parabola_vertex(xm, best, xp);
        if (std::isfinite(ym) && std::isfinite(yp)) v += parabola_vertex(ym, best, yp);
      }
      for (std::size_t y = by; y < by + bs; ++y) {
        for (std::size_t x = bx; x < bx + bs; ++x) {
          flow.u[y * a.width + x] = static_cast<float>(u);
          flow.v[y * a.width + x] = static_cast<float>(v);
        }
      }
    }
  }
  return flow;
}

double project_region(const FlowField& flow, const RegionSpec& region) {
  region.validate();
  if (region.x + region.w > flow.width || region.y + region.h > flow.height) {
    throw Error(ErrorCode::kOutOfBounds, "region extends beyond the flow field");
  }
  double su = 0.0, sv = 0.0;
  for (std::size_t y = region.y; y < region.y + region.h; ++y) {
    for (std::size_t x = region.x; x < region.x + region.w; ++x) {
      su += flow.u[y * flow.width + x];
      sv += flow.v[y * flow.width + x];
    }
  }
  const double n = static_cast<double>(region.w * region.h);
  return (su * region.dx + sv * region.dy) / n;
}

MotionSignal standardize(const MotionSignal& signal) {
  signal.validate();
  const double n = static_cast<double>(signal.size());
  const double mean = std::accumulate(signal.samples.begin(), signal.samples.end(), 0.0) / n;
  double var = 0.0;
  for (double s : signal.samples) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  if (sd <= kMinStd) throw Error(ErrorCode::kConstantSignal, "signal has zero variance");
  MotionSignal out = signal;
  for (double& s : out.samples) s = (s - mean) / sd;
  return out;
}

LagEstimate estimate_lag(const MotionSignal& a_in, const MotionSignal& b_in, double max_lag) {
  const MotionSignal a = standardize(a_in);
  const MotionSignal b = standardize(b_in);
  if (std::abs(a.rate - b.rate) > 1e-9 * a.rate) {
    throw Error(ErrorCode::kInvalidArgument, "signals must share a sample rate");
  }
  if (!(max_lag >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "max_lag must be non-negative");
  const double rate = a.rate;
  const std::size_t na = a.size(), nb = b.size();

  // Overlap needed at every tested lag; the search range shrinks to honour it.
  const double period = std::min(dominant_period(a), dominant_period(b));
  const double need_s = std::min(kMinOverlapSeconds, kMinOverlapPeriods * period);
  const auto need = static_cast<std::size_t>(std::ceil(need_s * rate - 1e-9));
  long K = static_cast<long>(std::floor(max_lag * rate + 1e-9));
  while (K >= 0 && (overlap(na, nb, K) < std::max<std::size_t>(need, 2) ||
                    overlap(na, nb, -K) < std::max<std::size_t>(need, 2))) {
    --K;
  }
  if (K < 0) {
    throw Error(ErrorCode::kInsufficientOverlap,
                "signals overlap for less than 1 s and less than two motion periods");
  }

  std::vector<double> pa(na + 1, 0.0), pa2(na + 1, 0.0), pb(nb + 1, 0.0), pb2(nb + 1, 0.0);
  for (std::size_t i = 0; i < na; ++i) {
    pa[i + 1] = pa[i] + a.samples[i];
    pa2[i + 1] = pa2[i] + a.samples[i] * a.samples[i];
  }
  for (std::size_t i = 0; i < nb; ++i) {
    pb[i + 1] = pb[i] + b.samples[i];
    pb2[i + 1] = pb2[i] + b.samples[i] * b.samples[i];
  }
  const auto& kern = kernels::active();

  LagEstimate est;
  est.max_lag_samples = K;
  est.correlation.resize(static_cast<std::size_t>(2 * K + 1));
  for (long k = -K; k <= K; ++k) {
    const auto lo = static_cast<std::size_t>(std::max(0L, -k));
    const std::size_t n = overlap(na, nb, k);
    const std::size_t lo_b = static_cast<std::size_t>(static_cast<long>(lo) + k);
    const double sa = pa[lo + n] - pa[lo], sa2 = pa2[lo + n] - pa2[lo];
    const double sb = pb[lo_b + n] - pb[lo_b], sb2 = pb2[lo_b + n] - pb2[lo_b];
    const double sab = kern.dot_f64(a.samples.data() + lo, b.samples.data() + lo_b, n);
    const double dn = static_cast<double>(n);
    const double va = dn * sa2 - sa * sa, vb = dn * sb2 - sb * sb;
    double r = 0.0;
    if (va > 0.0 && vb > 0.0) r = (dn * sab - sa * sb) / std::sqrt(va * vb);
    est.correlation[static_cast<std::size_t>(k + K)] = std::clamp(r, -1.0, 1.0);
  }

  const auto peak = std::max_element(est.correlation.begin(), est.correlation.end());
  const auto idx = static_cast<std::size_t>(peak - est.correlation.begin());
  est.peak_index = static_cast<long>(idx) - K;
  double delta = 0.0;
  if (idx > 0 && idx + 1 < est.correlation.size()) {
    delta = parabola_vertex(est.correlation[idx - 1], *peak, est.correlation[idx + 1]);
  }
  est.lag_samples = static_cast<double>(est.peak_index) + delta;
  est.lag = est.lag_samples / rate + (b.t0 - a.t0);
  est.confidence = *peak;
  est.low_confidence = est.confidence < kLowConfidence;
  return est;
}

LatencyReport analyze_signals(const MotionSignal& a, const MotionSignal& b, double max_lag) {
  LatencyReport report;
  report.lag = estimate_lag(a, b, max_lag);
  report.signal_a = standardize(a);
  report.signal_b = standardize(b);
  for (std::size_t i = 0; i < report.signal_a.size(); ++i) {
    const double t = report.signal_a.time(i);
    const double tb = t + report.lag.lag;
    if (tb < report.signal_b.t0 || tb > report.signal_b.time(report.signal_b.size() - 1)) continue;
    report.overlay_t.push_back(t);
    report.overlay_a.push_back(report.signal_a.samples[i]);
    report.overlay_b.push_back(interpolate(report.signal_b, tb));
  }
  return report;
}

MotionSignal flows_to_signal(std::span<const FlowField> flows, const RegionSpec& region, double fps) {
  if (!(fps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fps must be positive");
  MotionSignal s;
  s.rate = fps;
  s.t0 = 0.5 / fps;
  s.samples.reserve(flows.size());
  for (const auto& f : flows) s.samples.push_back(project_region(f, region));
  s.validate();
  return s;
}

MotionSignal frames_to_signal(std::span<const GrayImage> frames, const RegionSpec& region, double fps,
                              const BlockMatchParams& params) {
  if (frames.size() < 3) throw Error(ErrorCode::kInvalidArgument, "need at least three frames");
  std::vector<FlowField> flows;
  flows.reserve(frames.size() - 1);
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    flows.push_back(block_match_flow(frames[i], frames[i + 1], params));
  }
  return flows_to_signal(flows, region, fps);
}

LatencyReport analyze_frames(std::span<const GrayImage> frames_a, std::span<const GrayImage> frames_b,
                             const RegionSpec& region_a, const RegionSpec& region_b, double fps,
                             const BlockMatchParams& params, double max_lag) {
  return analyze_signals(frames_to_signal(frames_a, region_a, fps, params),
                         frames_to_signal(frames_b, region_b, fps, params), max_lag);
}

LatencyReport analyze_flows(std::span<const FlowField> flows_a, std::span<const FlowField> flows_b,
                            const RegionSpec& region_a, const RegionSpec& region_b, double fps,
                            double max_lag) {
  return analyze_signals(flows_to_signal(flows_a, region_a, fps), flows_to_signal(flows_b, region_b, fps),
                         max_lag);
}

std::vector<GrayImage> load_frames(const std::string& dir) {
  std::vector<GrayImage> out;
  for (const auto& path : numbered_files(dir, ".pgm")) out.push_back(read_pgm(path));
  if (out.empty()) throw Error(ErrorCode::kIo, "no .pgm frames in '" + dir + "'");
  return out;
}

std::vector<FlowField> load_flows(const std::string& dir) {
  std::vector<FlowField> out;
  for (const auto& path : numbered_files(dir, ".flo")) out.push_back(read_flow(path));
  if (out.empty()) throw Error(ErrorCode::kIo, "no .flo flow files in '" + dir + "'");
  return out;
}

MotionSignal read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value") throw Error(ErrorCode::kParse, "'" + path + "' must start with a t,value header");
  std::vector<double> t, v;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(line);
      t.push_back(std::stod(line.substr(0, comma)));
      v.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(lineno) + ": expected t,value");
    }
  }
  if (t.size() < 2) throw Error(ErrorCode::kInvalidArgument, "'" + path + "' needs at least two samples");
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "'" + path + "' timestamps must increase");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-3 * dt) {
      throw Error(ErrorCode::kInvalidArgument, "'" + path + "' is not uniformly sampled");
    }
  }
  MotionSignal s{std::move(v), 1.0 / dt, t.front()};
  s.validate();
  return s;
}

void write_signal_csv(const MotionSignal& signal, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << "t,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < signal.size(); ++i) out << signal.time(i) << ',' << signal.samples[i] << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace extremctl::latency
