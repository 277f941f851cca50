#include "extremctl/feedforward.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "extremctl/error.hpp"

namespace extremctl::plant {

FrequencyResponse frequency_response(const JointGains& gains, double omega) {
  const double wn = gains.omega_n;
  const double zeta = gains.zeta;
  const double eta = gains.effective_eta();
  const std::complex<double> s(0.0, omega);
  const std::complex<double> num = wn * wn + 2.0 * eta * zeta * wn * s;
  const std::complex<double> den = s * s + 2.0 * zeta * wn * s + wn * wn;
  const double r = omega / wn;
  // Numerator lead minus denominator lag; atan2 keeps the lag continuous
  // through r = 1 where the printed arctangent form is singular.
  const double phase = std::atan(2.0 * eta * zeta * r) - std::atan2(2.0 * zeta * r, 1.0 - r * r);
  return {std::abs(num / den), phase};
}

double equivalent_delay(const JointGains& gains) {
  return 2.0 * (1.0 - gains.effective_eta()) / gains.omega_n;
}

double phase_delay(const JointGains& gains, double omega) {
  return -frequency_response(gains, omega).phase / omega;
}

double max_feedforward_ratio(double omega_n, double control_dt) {
  const double x = omega_n * control_dt;
  if (!(x < 4.0)) {
    throw Error(ErrorCode::kInfeasible, "omega_n * control_dt must be below 4");
  }
  return 1.0 - x / 4.0;
}

double overshoot_metric(const Episode& episode, std::size_t joint, double skip_s) {
  double worst = -std::numeric_limits<double>::infinity();
  const auto& q = episode.q_measured.at(joint);
  const auto& ref = episode.q_reference.at(joint);
  for (std::size_t i = 0; i < episode.t.size(); ++i) {
    if (episode.t[i] < skip_s) continue;
    worst = std::max(worst, q[i] - ref[i]);
  }
  return worst;
}

}  // namespace extremctl::plant
